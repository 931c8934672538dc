#include <cstdlib>
#include <string_view>

#include "kis/simd.hpp"

namespace kis::simd {

#if defined(KIS_HAVE_AVX2_TU)
const KernelOps& avx2_kernel_ops();
#endif
#if defined(KIS_HAVE_NEON_TU)
const KernelOps& neon_kernel_ops();
#endif

const KernelOps* vector_ops() {
#if defined(KIS_HAVE_AVX2_TU)
  static const bool supported = [] {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  }();
  return supported ? &avx2_kernel_ops() : nullptr;
#elif defined(KIS_HAVE_NEON_TU)
  return &neon_kernel_ops();
#else
  return nullptr;
#endif
}

const KernelOps& active_ops() {
  static const KernelOps& ops = []() -> const KernelOps& {
    const char* env = std::getenv("KIS_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") return scalar_ops();
    const KernelOps* v = vector_ops();
    return v != nullptr ? *v : scalar_ops();
  }();
  return ops;
}

}  // namespace kis::simd
