#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nlbs {

/// Row i couples x[i-1], x[i], x[i+1] through lower[i], diag[i], upper[i].
/// lower[0] and upper[n-1] are ignored.
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  Tridiagonal() = default;
  explicit Tridiagonal(std::size_t n) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}

  std::size_t size() const { return diag.size(); }
  void set_identity_row(std::size_t i);
  std::vector<double> apply(std::span<const double> x) const;
  bool diagonally_dominant() const;
};

/// Thomas elimination without pivoting. Throws SingularTridiagonal when a pivot
/// falls below 1e-14 times its row scale.
std::vector<double> thomas_solve(const Tridiagonal& T, std::span<const double> rhs);

}  // namespace nlbs
