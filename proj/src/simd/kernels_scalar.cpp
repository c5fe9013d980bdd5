#include <cmath>

#include "ctrlplan/core.hpp"
#include "ctrlplan/simd/kernels.hpp"

namespace ctrlplan::simd {

double wrappedDiff(double a, double b, bool wrap) noexcept {
  double d = a - b;
  if (wrap) d = d - kTwoPi * std::nearbyint(d / kTwoPi);
  return d;
}

namespace {

void weightedSqDistScalar(std::span<const double> query, const SoaView& points,
                          const MetricParams& metric, double* out) {
  for (std::size_t i = 0; i < points.count; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < points.dims; ++d) {
      const double diff = wrappedDiff(query[d], points.coords[d * points.stride + i], metric.wrap[d] != 0);
      acc = acc + metric.weights[d] * (diff * diff);
    }
    out[i] = acc;
  }
}

void l1GapScalar(const SoaView& a, const SoaView& b, double* out) {
  for (std::size_t i = 0; i < a.count; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.dims; ++d) {
      acc = acc + std::abs(a.coords[d * a.stride + i] - b.coords[d * b.stride + i]);
    }
    out[i] = acc;
  }
}

}  // namespace

const KernelTable& scalarKernels() {
  static const KernelTable table{"scalar", &weightedSqDistScalar, &l1GapScalar};
  return table;
}

}  // namespace ctrlplan::simd
