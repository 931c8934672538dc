// AArch64 variant. NEON is architecturally guaranteed on AArch64, so no
// runtime probe is needed beyond the build-time selection.

#include <arm_neon.h>

#include "kis/simd.hpp"

namespace kis::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

Pair dot_pair(const double* a1, const double* b1, const double* a2, const double* b2,
              std::size_t n) {
  float64x2_t acc1 = vdupq_n_f64(0.0);
  float64x2_t acc2 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc1 = vfmaq_f64(acc1, vld1q_f64(a1 + i), vld1q_f64(b1 + i));
    acc2 = vfmaq_f64(acc2, vld1q_f64(a2 + i), vld1q_f64(b2 + i));
  }
  double s1 = vaddvq_f64(acc1);
  double s2 = vaddvq_f64(acc2);
  for (; i < n; ++i) {
    s1 += a1[i] * b1[i];
    s2 += a2[i] * b2[i];
  }
  return {s1, s2};
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t u = vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
    acc = vfmaq_f64(acc, vld1q_f64(w + i), u);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += w[i] * x[i] * y[i];
  return s;
}

Pair weighted_moments(const double* w1, const double* w2, const double* x, const double* y,
                      std::size_t n) {
  float64x2_t acc1 = vdupq_n_f64(0.0);
  float64x2_t acc2 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t u = vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(w1 + i), u);
    acc2 = vfmaq_f64(acc2, vmulq_f64(vld1q_f64(w2 + i), u), u);
  }
  double s1 = vaddvq_f64(acc1);
  double s2 = vaddvq_f64(acc2);
  for (; i < n; ++i) {
    const double u = x[i] * y[i];
    s1 += w1[i] * u;
    s2 += w2[i] * u * u;
  }
  return {s1, s2};
}

void scale(const double* x, const double* s, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(out + i, vmulq_f64(vld1q_f64(x + i), vld1q_f64(s + i)));
  for (; i < n; ++i) out[i] = x[i] * s[i];
}

void dot4(const double* a, const double* b, std::size_t ld, std::size_t n, double* out) {
  float64x2_t acc[4] = {vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0), vdupq_n_f64(0.0)};
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t va = vld1q_f64(a + i);
    for (std::size_t r = 0; r < 4; ++r) acc[r] = vfmaq_f64(acc[r], va, vld1q_f64(b + r * ld + i));
  }
  for (std::size_t r = 0; r < 4; ++r) {
    double s = vaddvq_f64(acc[r]);
    for (std::size_t k = i; k < n; ++k) s += a[k] * b[r * ld + k];
    out[r] = s;
  }
}

}  // namespace

const KernelOps& neon_kernel_ops() {
  static const KernelOps ops{"neon", dot, dot_pair, weighted_dot, weighted_moments, scale, dot4};
  return ops;
}

}  // namespace kis::simd
