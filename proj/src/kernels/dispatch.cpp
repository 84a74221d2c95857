#include <stdexcept>
#include <string>

#include "mtl/kernels/kernels.hpp"

namespace mtl::kernels {
namespace {

constexpr KernelTable kScalar{Backend::Scalar, scalar::dot,     scalar::axpy,
                              scalar::gemm_nn, scalar::gemm_nt, scalar::gemm_tn};
#if defined(MTL_HAVE_AVX2)
constexpr KernelTable kAvx2{Backend::Avx2, avx2::dot,     avx2::axpy,
                            avx2::gemm_nn, avx2::gemm_nt, avx2::gemm_tn};
#endif
#if defined(MTL_HAVE_NEON)
constexpr KernelTable kNeon{Backend::Neon, neon::dot,     neon::axpy,
                            neon::gemm_nn, neon::gemm_nt, neon::gemm_tn};
#endif

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool available(Backend backend) {
  switch (backend) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(MTL_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(MTL_HAVE_NEON)
      return true;  // mandatory on aarch64
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& table(Backend backend) {
  if (!available(backend)) {
    throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(backend)));
  }
  switch (backend) {
#if defined(MTL_HAVE_AVX2)
    case Backend::Avx2: return kAvx2;
#endif
#if defined(MTL_HAVE_NEON)
    case Backend::Neon: return kNeon;
#endif
    default: return kScalar;
  }
}

const KernelTable& active() {
  static const KernelTable& chosen = [] () -> const KernelTable& {
    if (available(Backend::Avx2)) return table(Backend::Avx2);
    if (available(Backend::Neon)) return table(Backend::Neon);
    return kScalar;
  }();
  return chosen;
}

}  // namespace mtl::kernels
