#include <doctest.h>

#include <cmath>
#include <random>

#include "nlbs/errors.hpp"
#include "nlbs/tridiagonal.hpp"

using namespace nlbs;

TEST_CASE("thomas_solve: identity returns the rhs") {
  Tridiagonal T(5);
  for (std::size_t i = 0; i < 5; ++i) T.set_identity_row(i);
  const std::vector<double> rhs{1.0, -2.0, 3.5, 0.0, 7.0};
  CHECK(thomas_solve(T, rhs) == rhs);
}

TEST_CASE("thomas_solve: random diagonally dominant systems") {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 50 + 10 * trial;
    Tridiagonal T(n);
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      T.lower[i] = i > 0 ? u(rng) : 0.0;
      T.upper[i] = i + 1 < n ? u(rng) : 0.0;
      T.diag[i] = std::abs(T.lower[i]) + std::abs(T.upper[i]) + 0.1 + std::abs(u(rng));
      if (u(rng) < 0.0) T.diag[i] = -T.diag[i];
      rhs[i] = 100.0 * u(rng);
    }
    CHECK(T.diagonally_dominant());
    const auto x = thomas_solve(T, rhs);
    const auto Tx = T.apply(x);
    double res = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      res = std::max(res, std::abs(Tx[i] - rhs[i]));
      scale = std::max(scale, std::abs(rhs[i]));
    }
    CHECK(res <= 1e-10 * scale);
  }
}

TEST_CASE("thomas_solve: zero diagonal row is singular") {
  Tridiagonal T(3);
  T.diag = {1.0, 0.0, 1.0};
  try {
    thomas_solve(T, std::vector<double>{1.0, 1.0, 1.0});
    FAIL("expected SingularTridiagonal");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SingularTridiagonal);
  }
}

TEST_CASE("apply and dominance reporting") {
  Tridiagonal T(3);
  T.lower = {0.0, 1.0, 1.0};
  T.diag = {2.0, 1.0, 2.0};
  T.upper = {1.0, 1.0, 0.0};
  const auto y = T.apply(std::vector<double>{1.0, 2.0, 3.0});
  CHECK(y == std::vector<double>{4.0, 6.0, 8.0});
  CHECK_FALSE(T.diagonally_dominant());
}
