#include "nlbs/asymptotic.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "nlbs/analytic_bs.hpp"
#include "nlbs/errors.hpp"

namespace nlbs {
namespace {

constexpr double kExpFloor = -745.0;

double safe_exp(double arg) { return arg < kExpFloor ? 0.0 : std::exp(arg); }

void check_delta(double delta) {
  if (!(delta > 1.0 && delta <= 2.0))
    fail(ErrorCode::UnsupportedDelta,
         "asymptotic correction implemented for 1 < delta <= 2, got " + std::to_string(delta));
}

void check_config(const QuadratureConfig& cfg, double delta) {
  require(cfg.abs_tol > 0.0 && cfg.rel_tol > 0.0, "quadrature tolerances must be positive");
  require(cfg.max_subdivisions >= 1, "max_subdivisions must be positive");
  require(cfg.power_for(delta) >= 2.0 / (3.0 - delta) - 1e-12,
          "endpoint power too small to remove the singularity");
}

}  // namespace

double QuadratureConfig::power_for(double delta) const {
  return endpoint_power_p > 0.0 ? endpoint_power_p : 2.0 / (3.0 - delta);
}

AsymptoticConstants constants(const GeneralizedVolSpec& gen, const MarketParams& mkt) {
  check_delta(gen.delta);
  const double s2 = mkt.sigma_tilde * mkt.sigma_tilde;
  AsymptoticConstants c;
  c.alpha = 0.5 + (mkt.q - mkt.r) / s2;
  c.beta = -0.5 * s2 * c.alpha * c.alpha - mkt.r;
  c.P = gen.gamma - gen.delta - c.alpha * (1.0 - gen.delta);
  c.K = c.P * c.P * s2 / (2.0 * (gen.delta - 1.0)) + c.beta * (gen.delta - 1.0);
  return c;
}

double v1_correction(const GeneralizedVolSpec& gen, const MarketParams& mkt, double S, double tau,
                     const QuadratureConfig& cfg) {
  require(S > 0.0, "spot must be positive");
  require(tau >= 0.0, "time to maturity must be nonnegative");
  const auto c = constants(gen, mkt);
  check_config(cfg, gen.delta);
  if (tau == 0.0) return 0.0;

  const double s2 = mkt.sigma_tilde * mkt.sigma_tilde;
  const double delta = gen.delta;
  const double one_m_delta = 1.0 - delta;
  const double x = std::log(S / mkt.strike);
  const double M = delta / (2.0 * s2) * x * x + c.P * delta * tau / one_m_delta * x +
                   c.P * c.P * s2 * delta * tau * tau / (2.0 * one_m_delta * one_m_delta);

  const double p = cfg.power_for(delta);
  const double w_exponent = p - 1.0 - p * (delta - 1.0) / 2.0;
  // exp(-M/Q) is largest at xi = 0 where Q = delta * tau; factor that out so the
  // quadrature sees an O(1) integrand even far from the strike
  const double shift = -M / (delta * tau);

  const double log_prefactor = gen.gamma * std::log(mkt.strike) -
                               0.5 * delta * std::log(2.0 * std::numbers::pi * s2) +
                               (gen.gamma - delta) / one_m_delta * x +
                               (c.beta + c.P * c.P * s2 / (2.0 * one_m_delta * one_m_delta)) * tau +
                               (1.0 - (delta - 1.0) / 2.0) * std::log(tau) + std::log(p) + shift;

  auto integrand = [&](double w) {
    const double xi = tau * std::pow(w, p);
    const double Q = delta * tau + one_m_delta * xi;
    const double arg = c.K * xi - M / Q - shift;
    return gen.A(xi) * std::pow(w, w_exponent) / std::sqrt(Q) * safe_exp(arg);
  };

  const double scale = std::exp(log_prefactor);
  if (scale == 0.0) return 0.0;
  const double abs_tol = std::isinf(scale) ? cfg.abs_tol : cfg.abs_tol / scale;
  const auto res =
      integrate_adaptive(integrand, 0.0, 1.0, abs_tol, cfg.rel_tol, cfg.max_subdivisions);
  if (!res.converged)
    fail(ErrorCode::QuadratureDiverged, "V1 quadrature did not converge", res.value * scale);
  return res.value * scale;
}

double u_closed_form(const GeneralizedVolSpec& gen, const MarketParams& mkt, double x, double tau,
                     const QuadratureConfig& cfg) {
  const auto c = constants(gen, mkt);
  return std::exp(-c.alpha * x - c.beta * tau) *
         v1_correction(gen, mkt, mkt.strike * std::exp(x), tau, cfg);
}

double u_convolution(const GeneralizedVolSpec& gen, const MarketParams& mkt, double x, double tau,
                     const QuadratureConfig& cfg) {
  check_delta(gen.delta);
  check_config(cfg, gen.delta);
  require(tau >= 0.0, "time to maturity must be nonnegative");
  if (tau == 0.0) return 0.0;

  const double s2 = mkt.sigma_tilde * mkt.sigma_tilde;
  const double delta = gen.delta;
  const double gamma = gen.gamma;
  const double alpha = 0.5 + (mkt.q - mkt.r) / s2;
  // first (expanded) form of beta, independent of the alpha^2 shortcut
  const double beta = -(s2 / 8.0 + 0.5 * (mkt.r + mkt.q) +
                        (mkt.r - mkt.q) * (mkt.r - mkt.q) / (2.0 * s2));
  const double P = gamma - delta - alpha * (1.0 - delta);
  const double R = beta + mkt.q * delta + 0.5 * delta * (1.0 - alpha) * (1.0 - alpha) * s2;
  const double log_E_gamma = gamma * std::log(mkt.strike);
  const double two_pi_s2 = 2.0 * std::numbers::pi * s2;

  // log of the heat-equation source f(s, xi)
  auto log_source = [&](double s, double xi) {
    return log_E_gamma + std::log(gen.A(xi)) - 0.5 * delta * std::log(two_pi_s2 * xi) -
           delta * s * s / (2.0 * s2 * xi) + P * s - R * xi;
  };
  auto log_kernel = [&](double y, double t) {
    return -y * y / (2.0 * s2 * t) - 0.5 * std::log(two_pi_s2 * t);
  };

  const double inner_rel = cfg.rel_tol * 1e-2;
  auto inner = [&](double xi) {
    const double t = tau - xi;
    if (!(t > 0.0) || !(xi > 0.0)) return 0.0;
    const double var_k = s2 * t;
    const double var_f = s2 * xi / delta;
    const double center_f = P * s2 * xi / delta;
    // the integrand is a product of two Gaussians in s; place breakpoints around
    // where that product concentrates so the adaptive rule cannot step over it
    const double prec = 1.0 / var_k + 1.0 / var_f;
    const double center = (x / var_k + center_f / var_f) / prec;
    const double width = 1.0 / std::sqrt(prec);
    const double peak = log_kernel(x - center, t) + log_source(center, xi);
    std::array<double, 11> cuts{};
    const std::array<double, 5> offsets{0.5, 1.0, 2.0, 4.0, 8.0};
    for (std::size_t i = 0; i < offsets.size(); ++i) {
      cuts[2 * i] = center - offsets[i] * width;
      cuts[2 * i + 1] = center + offsets[i] * width;
    }
    cuts[10] = center;
    auto g = [&](double s) { return safe_exp(log_kernel(x - s, t) + log_source(s, xi) - peak); };
    const auto res = integrate_adaptive(g, center - 40.0 * width, center + 40.0 * width, 1e-300,
                                        inner_rel, 2000, cuts);
    if (!res.converged)
      fail(ErrorCode::QuadratureDiverged, "inner convolution quadrature did not converge");
    return res.value * std::exp(peak);
  };

  const double p = cfg.power_for(delta);
  auto outer = [&](double w) {
    const double xi = tau * std::pow(w, p);
    return inner(xi) * tau * p * std::pow(w, p - 1.0);
  };
  const auto res = integrate_adaptive(outer, 0.0, 1.0, 1e-300, cfg.rel_tol, cfg.max_subdivisions);
  if (!res.converged)
    fail(ErrorCode::QuadratureDiverged, "outer convolution quadrature did not converge", res.value);
  return res.value;
}

double price_asymptotic(const ModelSpec& model, const MarketParams& mkt, double S, double tau,
                        const QuadratureConfig& cfg) {
  model.validate();
  const double v0 = bs_eval(mkt, S, tau).price;
  if (model.kind == ModelKind::Linear || model.parameter == 0.0 || tau <= 0.0) return v0;
  const auto gen = as_generalized(model, mkt);
  return v0 + gen.epsilon * v1_correction(gen, mkt, S, tau, cfg);
}

}  // namespace nlbs
