#pragma once

#include <array>
#include <cstddef>
#include <functional>

namespace nlbs {

enum class OptionKind { Call, Put };

struct MarketParams {
  double sigma_tilde = 0.4;
  double r = 0.03;
  double q = 0.0;
  double strike = 100.0;
  double maturity = 1.0 / 12.0;
  OptionKind kind = OptionKind::Call;

  void validate() const;
};

enum class ModelKind { Linear, FreyPatie, Rapm };

/// Nonlinear volatility model. `parameter` is rho for Frey-Patie, mu for RAPM
/// and unused for the linear model.
struct ModelSpec {
  ModelKind kind = ModelKind::Linear;
  double parameter = 0.0;
  double clamp_floor = 0.05;

  static ModelSpec linear() { return {}; }
  static ModelSpec frey_patie(double rho, double clamp_floor = 0.05) {
    return {ModelKind::FreyPatie, rho, clamp_floor};
  }
  static ModelSpec rapm(double mu) { return {ModelKind::Rapm, mu, 0.05}; }

  ModelSpec with_parameter(double value) const {
    ModelSpec copy = *this;
    copy.parameter = value;
    return copy;
  }

  void validate() const;
};

/// sigma^2 = sigma_tilde^2 + 2 eps A(tau) S^(gamma-1) H^(delta-1), H = S V_SS.
struct GeneralizedVolSpec {
  double epsilon = 0.0;
  double gamma = 1.0;
  double delta = 2.0;
  std::function<double(double)> A;
};

/// Counts how often the Frey-Patie denominator was clamped.
struct ClampTally {
  std::size_t events = 0;
};

/// Variance rate for a given gamma term h = S * d2V/dS2.
double sigma_squared(const ModelSpec& model, const MarketParams& mkt, double S, double gamma_term,
                     ClampTally* tally = nullptr);

/// d(sigma^2)/dh. Zero inside the clamped region and, for RAPM, at h = 0.
double dsigma_squared_dgamma(const ModelSpec& model, const MarketParams& mkt, double gamma_term);

/// Gradient of sigma^2_i with respect to (V_{i-1}, V_i, V_{i+1}) through the
/// central second difference h_i = S_i (V_{i+1} - 2 V_i + V_{i-1}) / dS^2.
std::array<double, 3> grad_sigma_squared(const ModelSpec& model, const MarketParams& mkt,
                                         double S_i, double V_im1, double V_i, double V_ip1,
                                         double dS);

/// Throws NotExpandable for the linear model.
GeneralizedVolSpec as_generalized(const ModelSpec& model, const MarketParams& mkt);

}  // namespace nlbs
