#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

namespace nlbs {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
  bool converged = false;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kKronrodNodes = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr std::array<double, 11> kKronrodWeights = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077600718917090, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
// Gauss weights attached to the odd Kronrod nodes 1, 3, 5, 7, 9.
inline constexpr std::array<double, 5> kGaussWeights = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment kronrod21(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[10];
  double gauss = 0.0;
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature over [a, b], optionally split at
/// interior breakpoints first. Bisects the segment with the largest error
/// until the summed error estimate meets max(abs_tol, rel_tol * |value|).
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol, double rel_tol,
                                    int max_subdivisions, std::span<const double> breakpoints = {}) {
  QuadratureResult out;
  if (!(b > a)) {
    out.converged = true;
    return out;
  }
  std::vector<double> cuts{a};
  for (double p : breakpoints)
    if (p > a && p < b) cuts.push_back(p);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::priority_queue<detail::Segment> heap;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const auto seg = detail::kronrod21(f, cuts[i], cuts[i + 1]);
    total += seg.value;
    total_err += seg.error;
    heap.push(seg);
  }

  int segments = static_cast<int>(heap.size());
  while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) && segments < max_subdivisions) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      heap.push(worst);
      break;
    }
    const auto left = detail::kronrod21(f, worst.a, mid);
    const auto right = detail::kronrod21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++segments;
  }

  // re-sum to shed accumulated cancellation in the running totals
  total = 0.0;
  total_err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    total_err += heap.top().error;
    heap.pop();
  }
  out.value = total;
  out.error = total_err;
  out.intervals = segments;
  out.converged = total_err <= std::max(abs_tol, rel_tol * std::abs(total));
  return out;
}

}  // namespace nlbs
