#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "mtl/kernels/kernels.hpp"
#include "support/oracles.hpp"

using namespace mtl::kernels;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i] - b[i]) <= tol * std::max(1.0, std::abs(b[i])));
  }
}

std::vector<Backend> compiled_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon})
    if (available(b)) out.push_back(b);
  return out;
}

}  // namespace

TEST_CASE("scalar backend is always available and active resolves") {
  CHECK(available(Backend::Scalar));
  CHECK(available(active().backend));
  CHECK(backend_name(Backend::Scalar) == "scalar");
}

TEST_CASE("unavailable backend table is rejected") {
  for (Backend b : {Backend::Avx2, Backend::Neon}) {
    if (!available(b)) CHECK_THROWS_AS(table(b), std::invalid_argument);
  }
}

TEST_CASE("scalar gemm matches the triple-loop oracle") {
  std::mt19937_64 rng(1);
  for (std::size_t m : {1u, 3u, 7u})
    for (std::size_t k : {1u, 5u, 17u})
      for (std::size_t n : {1u, 4u, 9u}) {
        auto a = random_vec(rng, m * k), b = random_vec(rng, k * n);
        std::vector<double> c(m * n, 0.0);
        table(Backend::Scalar).gemm_nn(m, n, k, a.data(), b.data(), c.data());
        check_close(c, oracle::matmul(a, b, m, k, n), 1e-12);
      }
}

TEST_CASE("every compiled backend agrees with the scalar reference") {
  std::mt19937_64 rng(2);
  const auto& ref = table(Backend::Scalar);
  for (Backend be : compiled_backends()) {
    CAPTURE(backend_name(be));
    const auto& t = table(be);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 15u, 16u, 17u, 33u, 100u}) {
      auto x = random_vec(rng, n), y = random_vec(rng, n);
      CHECK(std::abs(t.dot(x.data(), y.data(), n) - ref.dot(x.data(), y.data(), n)) <= 1e-12 * (1.0 + n));
      auto y1 = y, y2 = y;
      t.axpy(0.37, x.data(), y1.data(), n);
      ref.axpy(0.37, x.data(), y2.data(), n);
      check_close(y1, y2, 1e-14);
    }
    for (std::size_t m : {1u, 2u, 5u, 8u})
      for (std::size_t k : {1u, 3u, 16u, 19u})
        for (std::size_t n : {1u, 4u, 7u, 20u}) {
          const auto a = random_vec(rng, m * k);
          const auto b_nn = random_vec(rng, k * n);
          const auto b_nt = random_vec(rng, n * k);
          const auto a_tn = random_vec(rng, k * m);
          auto c0 = random_vec(rng, m * n);
          auto c1 = c0, c2 = c0;
          t.gemm_nn(m, n, k, a.data(), b_nn.data(), c1.data());
          ref.gemm_nn(m, n, k, a.data(), b_nn.data(), c2.data());
          check_close(c1, c2, 1e-12);
          c1 = c0, c2 = c0;
          t.gemm_nt(m, n, k, a.data(), b_nt.data(), c1.data());
          ref.gemm_nt(m, n, k, a.data(), b_nt.data(), c2.data());
          check_close(c1, c2, 1e-12);
          c1 = c0, c2 = c0;
          t.gemm_tn(m, n, k, a_tn.data(), b_nn.data(), c1.data());
          ref.gemm_tn(m, n, k, a_tn.data(), b_nn.data(), c2.data());
          check_close(c1, c2, 1e-12);
        }
  }
}

TEST_CASE("gemm accumulates into C rather than overwriting") {
  const std::vector<double> a{1, 2}, b{3, 4};
  for (Backend be : compiled_backends()) {
    std::vector<double> c{10};
    table(be).gemm_nn(1, 1, 2, a.data(), b.data(), c.data());
    CHECK(c[0] == doctest::Approx(21.0));
  }
}
