#pragma once

#include "nlbs/models.hpp"

namespace nlbs {

double norm_pdf(double x);
double norm_cdf(double x);

struct BsEval {
  double price = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  /// S * d2V/dS2 of the linear price; +inf at the strike when tau <= 0.
  double H0 = 0.0;
};

/// Linear Black-Scholes price, d1/d2 and H0 at time to maturity tau.
BsEval bs_eval(const MarketParams& mkt, double S, double tau);

/// Inverts bs_eval in sigma by bracketed bisection. The returned volatility
/// reproduces observed_price to 1e-10.
double implied_vol(const MarketParams& mkt, double S, double tau, double observed_price);

}  // namespace nlbs
