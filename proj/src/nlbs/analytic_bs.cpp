#include "nlbs/analytic_bs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "nlbs/errors.hpp"

namespace nlbs {

double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

BsEval bs_eval(const MarketParams& mkt, double S, double tau) {
  require(S > 0.0, "spot must be positive");
  const double E = mkt.strike;
  BsEval out;
  if (tau <= 0.0) {
    const bool call = mkt.kind == OptionKind::Call;
    out.price = call ? std::max(S - E, 0.0) : std::max(E - S, 0.0);
    const double big = std::numeric_limits<double>::infinity();
    out.d1 = out.d2 = S > E ? big : (S < E ? -big : 0.0);
    out.H0 = S == E ? big : 0.0;
    return out;
  }
  const double vol = mkt.sigma_tilde * std::sqrt(tau);
  out.d1 = (std::log(S / E) + (mkt.r - mkt.q + 0.5 * mkt.sigma_tilde * mkt.sigma_tilde) * tau) / vol;
  out.d2 = out.d1 - vol;
  const double df_q = std::exp(-mkt.q * tau);
  const double df_r = std::exp(-mkt.r * tau);
  if (mkt.kind == OptionKind::Call)
    out.price = S * df_q * norm_cdf(out.d1) - E * df_r * norm_cdf(out.d2);
  else
    out.price = E * df_r * norm_cdf(-out.d2) - S * df_q * norm_cdf(-out.d1);
  out.H0 = df_q * norm_pdf(out.d1) / vol;
  return out;
}

double implied_vol(const MarketParams& mkt, double S, double tau, double observed_price) {
  require(S > 0.0 && tau > 0.0, "implied_vol needs positive spot and maturity");
  const double fwd_s = S * std::exp(-mkt.q * tau);
  const double pv_e = mkt.strike * std::exp(-mkt.r * tau);
  const bool call = mkt.kind == OptionKind::Call;
  const double lower = std::max(call ? fwd_s - pv_e : pv_e - fwd_s, 0.0);
  const double upper = call ? fwd_s : pv_e;
  if (!(observed_price > lower))
    fail(ErrorCode::NoImpliedVol,
         "price " + std::to_string(observed_price) + " is not above the lower bound " +
             std::to_string(lower),
         lower);
  if (!(observed_price < upper))
    fail(ErrorCode::NoImpliedVol,
         "price " + std::to_string(observed_price) + " is not below the upper bound " +
             std::to_string(upper),
         upper);

  MarketParams m = mkt;
  auto price_at = [&](double sigma) {
    m.sigma_tilde = sigma;
    return bs_eval(m, S, tau).price;
  };

  double lo = 1e-4;
  double hi = 5.0;
  for (int widen = 0; price_at(hi) < observed_price; ++widen) {
    if (widen == 8) fail(ErrorCode::NoImpliedVol, "implied volatility above bracket", hi);
    hi *= 2.0;
  }
  while (price_at(lo) > observed_price) {
    if (lo < 1e-12) fail(ErrorCode::NoImpliedVol, "implied volatility below bracket", lo);
    lo *= 0.1;
  }

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    mid = 0.5 * (lo + hi);
    const double diff = price_at(mid) - observed_price;
    if (std::abs(diff) <= 1e-10) break;
    if (diff < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  return mid;
}

}  // namespace nlbs
