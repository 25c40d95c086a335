#include "nlbs/models.hpp"

#include <cmath>

#include "nlbs/errors.hpp"

namespace nlbs {

void MarketParams::validate() const {
  require(std::isfinite(sigma_tilde) && sigma_tilde > 0.0, "sigma_tilde must be positive");
  require(std::isfinite(strike) && strike > 0.0, "strike must be positive");
  require(std::isfinite(maturity) && maturity > 0.0, "maturity must be positive");
  require(std::isfinite(q) && q >= 0.0, "dividend yield must be nonnegative");
  require(std::isfinite(r), "rate must be finite");
}

void ModelSpec::validate() const {
  require(clamp_floor > 0.0 && clamp_floor < 1.0, "clamp_floor must lie in (0, 1)");
  if (kind != ModelKind::Linear)
    require(std::isfinite(parameter) && parameter >= 0.0, "model parameter must be nonnegative");
}

double sigma_squared(const ModelSpec& model, const MarketParams& mkt, double /*S*/,
                     double gamma_term, ClampTally* tally) {
  const double s2 = mkt.sigma_tilde * mkt.sigma_tilde;
  switch (model.kind) {
    case ModelKind::Linear:
      return s2;
    case ModelKind::FreyPatie: {
      double denom = 1.0 - model.parameter * gamma_term;
      if (denom < model.clamp_floor) {
        denom = model.clamp_floor;
        if (tally) ++tally->events;
      }
      return s2 / (denom * denom);
    }
    case ModelKind::Rapm:
      return s2 * (1.0 + model.parameter * std::cbrt(gamma_term));
  }
  return s2;
}

double dsigma_squared_dgamma(const ModelSpec& model, const MarketParams& mkt, double gamma_term) {
  const double s2 = mkt.sigma_tilde * mkt.sigma_tilde;
  switch (model.kind) {
    case ModelKind::Linear:
      return 0.0;
    case ModelKind::FreyPatie: {
      const double denom = 1.0 - model.parameter * gamma_term;
      if (denom < model.clamp_floor) return 0.0;
      return 2.0 * s2 * model.parameter / (denom * denom * denom);
    }
    case ModelKind::Rapm: {
      // cube root has an unbounded slope at 0; substitute 0 there
      if (gamma_term == 0.0) return 0.0;
      const double c = std::cbrt(std::abs(gamma_term));
      return s2 * model.parameter / (3.0 * c * c);
    }
  }
  return 0.0;
}

std::array<double, 3> grad_sigma_squared(const ModelSpec& model, const MarketParams& mkt,
                                         double S_i, double V_im1, double V_i, double V_ip1,
                                         double dS) {
  require(dS > 0.0, "grid step must be positive");
  const double scale = S_i / (dS * dS);
  const double h = scale * (V_ip1 - 2.0 * V_i + V_im1);
  const double d = dsigma_squared_dgamma(model, mkt, h) * scale;
  return {d, -2.0 * d, d};
}

GeneralizedVolSpec as_generalized(const ModelSpec& model, const MarketParams& mkt) {
  const double s2 = mkt.sigma_tilde * mkt.sigma_tilde;
  switch (model.kind) {
    case ModelKind::FreyPatie:
      return {model.parameter, 1.0, 2.0, [s2](double) { return s2; }};
    case ModelKind::Rapm:
      return {model.parameter, 1.0, 4.0 / 3.0, [s2](double) { return 0.5 * s2; }};
    case ModelKind::Linear:
      break;
  }
  fail(ErrorCode::NotExpandable, "linear model has no small parameter; use the closed form");
}

}  // namespace nlbs
