#pragma once

// Inner-loop arithmetic for kernel evaluation.
//
// Every routine has a scalar reference implementation and, where the target
// supports it, a vectorized variant (AVX2+FMA on x86-64, NEON on AArch64).
// The variant is chosen once at runtime from CPU feature detection; setting
// KIS_SIMD=scalar in the environment forces the reference path.
//
// Vector variants reassociate the sums, so results agree with the scalar
// path to rounding, not bitwise.

#include <cstddef>
#include <string_view>

namespace kis::simd {

struct Pair {
  double first = 0.0;
  double second = 0.0;
};

struct KernelOps {
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // (sum_i a1[i] * b1[i], sum_i a2[i] * b2[i]) in one pass
  Pair (*dot_pair)(const double* a1, const double* b1, const double* a2, const double* b2,
                   std::size_t n);
  // sum_i w[i] * x[i] * y[i]
  double (*weighted_dot)(const double* w, const double* x, const double* y, std::size_t n);
  // (sum_i w1[i] * u[i], sum_i w2[i] * u[i]^2) with u = x * y
  Pair (*weighted_moments)(const double* w1, const double* w2, const double* x, const double* y,
                           std::size_t n);
  // out[i] = x[i] * s[i]
  void (*scale)(const double* x, const double* s, double* out, std::size_t n);
  // out[r] = sum_i a[i] * b[r * ld + i] for r = 0..3
  void (*dot4)(const double* a, const double* b, std::size_t ld, std::size_t n, double* out);
};

const KernelOps& scalar_ops();

// nullptr when the build or the CPU lacks the instruction set.
const KernelOps* vector_ops();

// The table used by the library: vector_ops() when available, unless
// KIS_SIMD=scalar is set.
const KernelOps& active_ops();

}  // namespace kis::simd
