#pragma once

#include "nlbs/models.hpp"
#include "nlbs/quadrature.hpp"

namespace nlbs {

/// Constants of the log-price / exponential-weight transformation that turns
/// the first-order correction problem into a forced heat equation.
struct AsymptoticConstants {
  double alpha = 0.0;
  double beta = 0.0;
  double P = 0.0;
  double K = 0.0;
};

struct QuadratureConfig {
  double abs_tol = 1e-10;
  double rel_tol = 1e-8;
  int max_subdivisions = 400;
  /// Exponent p of the substitution xi = tau * w^p. Zero selects 2 / (3 - delta),
  /// the smallest power that removes the xi^{-(delta-1)/2} endpoint singularity.
  double endpoint_power_p = 0.0;

  double power_for(double delta) const;
};

/// Throws UnsupportedDelta unless 1 < delta <= 2.
AsymptoticConstants constants(const GeneralizedVolSpec& gen, const MarketParams& mkt);

/// First-order correction V1(S, tau) from the closed single-integral formula.
double v1_correction(const GeneralizedVolSpec& gen, const MarketParams& mkt, double S, double tau,
                     const QuadratureConfig& cfg = {});

/// Same quantity in heat-equation variables: u(x, tau) = exp(-alpha x - beta tau) V1(E e^x, tau).
double u_closed_form(const GeneralizedVolSpec& gen, const MarketParams& mkt, double x, double tau,
                     const QuadratureConfig& cfg = {});

/// u(x, tau) evaluated as the space-time convolution of the Gaussian heat kernel
/// with the transformed source. Slow; kept as an independent check of the
/// closed formula.
double u_convolution(const GeneralizedVolSpec& gen, const MarketParams& mkt, double x, double tau,
                     const QuadratureConfig& cfg = {});

/// V0 + eps * V1. The linear model returns the Black-Scholes price.
double price_asymptotic(const ModelSpec& model, const MarketParams& mkt, double S, double tau,
                        const QuadratureConfig& cfg = {});

}  // namespace nlbs
