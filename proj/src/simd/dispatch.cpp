#include <cstdlib>
#include <string_view>

#include "ctrlplan/simd/kernels.hpp"

namespace ctrlplan::simd {

#if defined(CTRLPLAN_HAVE_AVX2)
const KernelTable& avx2KernelTable();
#endif

const KernelTable* avx2Kernels() {
#if defined(CTRLPLAN_HAVE_AVX2)
  return &avx2KernelTable();
#else
  return nullptr;
#endif
}

bool avx2Available() {
#if defined(CTRLPLAN_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& activeKernels() {
  static const KernelTable& chosen = [&]() -> const KernelTable& {
    const char* env = std::getenv("CTRLPLAN_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalarKernels();
    if (avx2Available()) return *avx2Kernels();
    return scalarKernels();
  }();
  return chosen;
}

}  // namespace ctrlplan::simd
