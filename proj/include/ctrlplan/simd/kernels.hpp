#pragma once

// Batched arithmetic kernels with a scalar reference and an AVX2 variant.
// Both variants perform the same operations in the same order, so results
// are bitwise identical (the build disables FP contraction); the AVX2 path
// is chosen at runtime when the CPU supports it.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace ctrlplan::simd {

// Points in structure-of-arrays layout: coordinate d of point i lives at
// coords[d * stride + i].
struct SoaView {
  const double* coords = nullptr;
  std::size_t dims = 0;
  std::size_t stride = 0;
  std::size_t count = 0;
};

struct MetricParams {
  std::span<const double> weights;     // per dimension
  std::span<const std::uint8_t> wrap;  // 1 where the dimension is an angle
};

// out[i] = sum_d w_d * diff_d(query, point_i)^2, where the difference of an
// angular dimension is reduced to [-pi, pi].
using WeightedSqDistFn = void (*)(std::span<const double> query, const SoaView& points,
                                  const MetricParams& metric, double* out);

// out[i] = sum_d |a_d,i - b_d,i| over a.dims dimensions; a and b share count.
using L1GapFn = void (*)(const SoaView& a, const SoaView& b, double* out);

struct KernelTable {
  std::string_view name;
  WeightedSqDistFn weightedSqDist;
  L1GapFn l1Gap;
};

const KernelTable& scalarKernels();

// Null when the build has no AVX2 variant.
const KernelTable* avx2Kernels();

// True when the AVX2 variant exists and the running CPU supports it.
bool avx2Available();

// The table used by the library. Honors CTRLPLAN_SIMD=scalar.
const KernelTable& activeKernels();

// Per-element scalar reference, shared with tests and metrics.
double wrappedDiff(double a, double b, bool wrap) noexcept;

}  // namespace ctrlplan::simd
