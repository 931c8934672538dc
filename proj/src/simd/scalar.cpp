#include "kis/simd.hpp"

namespace kis::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

Pair dot_pair(const double* a1, const double* b1, const double* a2, const double* b2,
              std::size_t n) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s1 += a1[i] * b1[i];
    s2 += a2[i] * b2[i];
  }
  return {s1, s2};
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * y[i];
  return s;
}

Pair weighted_moments(const double* w1, const double* w2, const double* x, const double* y,
                      std::size_t n) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = x[i] * y[i];
    s1 += w1[i] * u;
    s2 += w2[i] * u * u;
  }
  return {s1, s2};
}

void scale(const double* x, const double* s, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * s[i];
}

void dot4(const double* a, const double* b, std::size_t ld, std::size_t n, double* out) {
  for (std::size_t r = 0; r < 4; ++r) out[r] = dot(a, b + r * ld, n);
}

}  // namespace

const KernelOps& scalar_ops() {
  static const KernelOps ops{"scalar", dot, dot_pair, weighted_dot, weighted_moments, scale, dot4};
  return ops;
}

}  // namespace kis::simd
