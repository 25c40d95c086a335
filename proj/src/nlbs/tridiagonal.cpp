#include "nlbs/tridiagonal.hpp"

#include <cmath>
#include <string>

#include "nlbs/errors.hpp"

namespace nlbs {

void Tridiagonal::set_identity_row(std::size_t i) {
  lower[i] = 0.0;
  diag[i] = 1.0;
  upper[i] = 0.0;
}

std::vector<double> Tridiagonal::apply(std::span<const double> x) const {
  const std::size_t n = size();
  require(x.size() == n, "vector length does not match matrix");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = diag[i] * x[i];
    if (i > 0) v += lower[i] * x[i - 1];
    if (i + 1 < n) v += upper[i] * x[i + 1];
    y[i] = v;
  }
  return y;
}

bool Tridiagonal::diagonally_dominant() const {
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    const double off = (i > 0 ? std::abs(lower[i]) : 0.0) + (i + 1 < n ? std::abs(upper[i]) : 0.0);
    if (std::abs(diag[i]) < off) return false;
  }
  return true;
}

std::vector<double> thomas_solve(const Tridiagonal& T, std::span<const double> rhs) {
  const std::size_t n = T.size();
  require(n > 0 && rhs.size() == n, "rhs length does not match matrix");
  std::vector<double> c(n, 0.0);
  std::vector<double> x(rhs.begin(), rhs.end());

  auto check_pivot = [&](double pivot, std::size_t i) {
    const double scale = std::abs(T.diag[i]) + (i > 0 ? std::abs(T.lower[i]) : 0.0) +
                         (i + 1 < n ? std::abs(T.upper[i]) : 0.0);
    if (!(std::abs(pivot) >= 1e-14 * scale) || scale == 0.0)
      fail(ErrorCode::SingularTridiagonal, "zero pivot in row " + std::to_string(i), pivot,
           static_cast<long>(i));
  };

  double pivot = T.diag[0];
  check_pivot(pivot, 0);
  if (n > 1) c[0] = T.upper[0] / pivot;
  x[0] /= pivot;
  for (std::size_t i = 1; i < n; ++i) {
    pivot = T.diag[i] - T.lower[i] * c[i - 1];
    check_pivot(pivot, i);
    if (i + 1 < n) c[i] = T.upper[i] / pivot;
    x[i] = (x[i] - T.lower[i] * x[i - 1]) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

}  // namespace nlbs
