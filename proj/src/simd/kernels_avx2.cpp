// Compiled with -mavx2 only; reached through avx2Kernels() after a CPU check.

#include <immintrin.h>

#include <cmath>

#include "ctrlplan/core.hpp"
#include "ctrlplan/simd/kernels.hpp"

namespace ctrlplan::simd {

namespace {

inline __m256d wrapLanes(__m256d d) {
  const __m256d twoPi = _mm256_set1_pd(kTwoPi);
  const __m256d turns = _mm256_round_pd(_mm256_div_pd(d, twoPi), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  return _mm256_sub_pd(d, _mm256_mul_pd(twoPi, turns));
}

void weightedSqDistAvx2(std::span<const double> query, const SoaView& points, const MetricParams& metric,
                        double* out) {
  std::size_t i = 0;
  for (; i + 4 <= points.count; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < points.dims; ++d) {
      const __m256d p = _mm256_loadu_pd(points.coords + d * points.stride + i);
      __m256d diff = _mm256_sub_pd(_mm256_set1_pd(query[d]), p);
      if (metric.wrap[d] != 0) diff = wrapLanes(diff);
      const __m256d sq = _mm256_mul_pd(diff, diff);
      acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_set1_pd(metric.weights[d]), sq));
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < points.count; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < points.dims; ++d) {
      const double diff = wrappedDiff(query[d], points.coords[d * points.stride + i], metric.wrap[d] != 0);
      acc = acc + metric.weights[d] * (diff * diff);
    }
    out[i] = acc;
  }
}

void l1GapAvx2(const SoaView& a, const SoaView& b, double* out) {
  const __m256d signMask = _mm256_set1_pd(-0.0);
  std::size_t i = 0;
  for (; i + 4 <= a.count; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t d = 0; d < a.dims; ++d) {
      const __m256d x = _mm256_loadu_pd(a.coords + d * a.stride + i);
      const __m256d y = _mm256_loadu_pd(b.coords + d * b.stride + i);
      acc = _mm256_add_pd(acc, _mm256_andnot_pd(signMask, _mm256_sub_pd(x, y)));
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < a.count; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.dims; ++d) {
      acc = acc + std::abs(a.coords[d * a.stride + i] - b.coords[d * b.stride + i]);
    }
    out[i] = acc;
  }
}

}  // namespace

const KernelTable& avx2KernelTable() {
  static const KernelTable table{"avx2", &weightedSqDistAvx2, &l1GapAvx2};
  return table;
}

}  // namespace ctrlplan::simd
