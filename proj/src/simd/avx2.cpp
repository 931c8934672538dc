// Compiled with -mavx2 -mfma. Only reachable through avx2_kernel_ops(), which
// the dispatcher calls after confirming CPU support. Keep this translation
// unit free of inline library templates so no AVX code leaks into shared
// COMDAT symbols.

#include <immintrin.h>

#include "kis/simd.hpp"

namespace kis::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

Pair dot_pair(const double* a1, const double* b1, const double* a2, const double* b2,
              std::size_t n) {
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a1 + i), _mm256_loadu_pd(b1 + i), acc1);
    acc2 = _mm256_fmadd_pd(_mm256_loadu_pd(a2 + i), _mm256_loadu_pd(b2 + i), acc2);
  }
  double s1 = hsum(acc1);
  double s2 = hsum(acc2);
  for (; i < n; ++i) {
    s1 += a1[i] * b1[i];
    s2 += a2[i] * b2[i];
  }
  return {s1, s2};
}

double weighted_dot(const double* w, const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d u = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), u, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * x[i] * y[i];
  return s;
}

Pair weighted_moments(const double* w1, const double* w2, const double* x, const double* y,
                      std::size_t n) {
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d u = _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + i), u, acc1);
    acc2 = _mm256_fmadd_pd(_mm256_mul_pd(_mm256_loadu_pd(w2 + i), u), u, acc2);
  }
  double s1 = hsum(acc1);
  double s2 = hsum(acc2);
  for (; i < n; ++i) {
    const double u = x[i] * y[i];
    s1 += w1[i] * u;
    s2 += w2[i] * u * u;
  }
  return {s1, s2};
}

void scale(const double* x, const double* s, double* out, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(s + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * s[i];
}

// One row against four: each load of `a` feeds four FMAs.
void dot4(const double* a, const double* b, std::size_t ld, std::size_t n, double* out) {
  const double* b0 = b;
  const double* b1 = b + ld;
  const double* b2 = b + 2 * ld;
  const double* b3 = b + 3 * ld;
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  __m256d acc3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va = _mm256_loadu_pd(a + i);
    acc0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b0 + i), acc0);
    acc1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b1 + i), acc1);
    acc2 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b2 + i), acc2);
    acc3 = _mm256_fmadd_pd(va, _mm256_loadu_pd(b3 + i), acc3);
  }
  // transpose-and-add the four accumulators into one vector of sums
  const __m256d s01 = _mm256_hadd_pd(acc0, acc1);
  const __m256d s23 = _mm256_hadd_pd(acc2, acc3);
  const __m256d lo = _mm256_permute2f128_pd(s01, s23, 0x20);
  const __m256d hi = _mm256_permute2f128_pd(s01, s23, 0x31);
  _mm256_storeu_pd(out, _mm256_add_pd(lo, hi));
  for (; i < n; ++i) {
    out[0] += a[i] * b0[i];
    out[1] += a[i] * b1[i];
    out[2] += a[i] * b2[i];
    out[3] += a[i] * b3[i];
  }
}

}  // namespace

const KernelOps& avx2_kernel_ops() {
  static const KernelOps ops{"avx2", dot, dot_pair, weighted_dot, weighted_moments, scale, dot4};
  return ops;
}

}  // namespace kis::simd
