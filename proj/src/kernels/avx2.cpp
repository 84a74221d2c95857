// Compiled with -mavx2 -mfma; only reached when the CPU reports both.
#include <immintrin.h>

#include <cmath>

#include "mtl/kernels/kernels.hpp"

namespace mtl::kernels::avx2 {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// c[0..n) += sum_p a[p * a_stride] * b[p * n + j], p in [0, k)
inline void accumulate_row(std::size_t n, std::size_t k, const double* a, std::size_t a_stride,
                           const double* b, double* c) {
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    __m256d c0 = _mm256_loadu_pd(c + j);
    __m256d c1 = _mm256_loadu_pd(c + j + 4);
    __m256d c2 = _mm256_loadu_pd(c + j + 8);
    __m256d c3 = _mm256_loadu_pd(c + j + 12);
    for (std::size_t p = 0; p < k; ++p) {
      const __m256d av = _mm256_set1_pd(a[p * a_stride]);
      const double* brow = b + p * n + j;
      c0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow), c0);
      c1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 4), c1);
      c2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 8), c2);
      c3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + 12), c3);
    }
    _mm256_storeu_pd(c + j, c0);
    _mm256_storeu_pd(c + j + 4, c1);
    _mm256_storeu_pd(c + j + 8, c2);
    _mm256_storeu_pd(c + j + 12, c3);
  }
  for (; j + 4 <= n; j += 4) {
    __m256d c0 = _mm256_loadu_pd(c + j);
    for (std::size_t p = 0; p < k; ++p) {
      c0 = _mm256_fmadd_pd(_mm256_set1_pd(a[p * a_stride]), _mm256_loadu_pd(b + p * n + j), c0);
    }
    _mm256_storeu_pd(c + j, c0);
  }
  for (; j < n; ++j) {
    double acc = c[j];
    for (std::size_t p = 0; p < k; ++p) acc = std::fma(a[p * a_stride], b[p * n + j], acc);
    c[j] = acc;
  }
}

}  // namespace

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
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) accumulate_row(n, k, a + i * k, 1, b, c + i * n);
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) c[i * n + j] += dot(arow, b + j * k, k);
  }
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c) {
  for (std::size_t i = 0; i < m; ++i) accumulate_row(n, k, a + i, m, b, c + i * n);
}

}  // namespace mtl::kernels::avx2
