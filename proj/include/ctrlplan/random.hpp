#pragma once

// Platform-independent sampling helpers on top of std::mt19937_64, whose
// output sequence is fixed by the standard. The std distributions are not,
// so runs would not replay across standard libraries with them.

#include <cstdint>
#include <random>

namespace ctrlplan {

using Rng = std::mt19937_64;

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniformIn(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

// Uniform on (0, hi].
inline double uniformOpenClosed(Rng& rng, double hi) {
  return hi * (1.0 - uniform01(rng));
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniformIndex(Rng& rng, std::uint64_t n) {
  // [threshold, 2^64) holds a whole number of copies of [0, n).
  const std::uint64_t threshold = (std::uint64_t(0) - n) % n;
  while (true) {
    const std::uint64_t r = rng();
    if (r >= threshold) return r % n;
  }
}

// Derives an independent stream seed (splitmix64 finalizer).
inline std::uint64_t mixSeed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace ctrlplan
