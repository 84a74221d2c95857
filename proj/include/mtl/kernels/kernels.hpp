#pragma once

// Dense double-precision inner loops used by the tensor ops.
//
// Every kernel has a portable scalar reference and, where the target allows,
// an intrinsics variant. The active table is chosen once at first use from the
// CPU's reported features. Matrices are row-major and the gemm kernels
// accumulate into C (C += op(A) * op(B)).

#include <cstddef>
#include <string_view>

namespace mtl::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view backend_name(Backend backend);

struct KernelTable {
  Backend backend;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // C[m,n] += A[m,k] * B[k,n]
  void (*gemm_nn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // C[m,n] += A[m,k] * B[n,k]^T
  void (*gemm_nt)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
  // C[m,n] += A[k,m]^T * B[k,n]
  void (*gemm_tn)(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                  double* c);
};

// True when the variant was compiled in and the running CPU supports it.
bool available(Backend backend);

// Throws std::invalid_argument for an unavailable backend.
const KernelTable& table(Backend backend);

// Best available backend, resolved once.
const KernelTable& active();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  active().axpy(alpha, x, y, n);
}
inline void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                    double* c) {
  active().gemm_nn(m, n, k, a, b, c);
}
inline void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                    double* c) {
  active().gemm_nt(m, n, k, a, b, c);
}
inline void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b,
                    double* c) {
  active().gemm_tn(m, n, k, a, b, c);
}

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
}  // namespace scalar

#if defined(MTL_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
}  // namespace avx2
#endif

#if defined(MTL_HAVE_NEON)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a, const double* b, double* c);
}  // namespace neon
#endif

}  // namespace mtl::kernels
