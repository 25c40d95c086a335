#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nlbs/asymptotic.hpp"
#include "nlbs/errors.hpp"
#include "nlbs/fd_engine.hpp"

namespace nlbs {

struct QuoteRecord {
  double tau = 0.0;
  double S = 0.0;
  double v_bid = 0.0;
  double v_ask = 0.0;
  double strike = 0.0;
  double r = 0.0;
  double q = 0.0;

  /// Throws CrossedQuote when bid > ask, InvalidArgument for other violations.
  void validate(long line = -1) const;
};

enum class PricingEngine { Asym, Newton };
enum class Anchor { BidAnchored, MidAnchored };

struct CalibrationOptions {
  PricingEngine engine = PricingEngine::Asym;
  Anchor anchor = Anchor::BidAnchored;
  double bracket_hi = 0.05;
  double price_tol = 1e-4;
  double width_tol = 1e-7;
  int max_iter = 200;
  /// Grid used by the Newton engine; the spot is placed exactly on a node.
  int newton_M = 800;
  int newton_N = 800;
  SolverConfig solver{};
  QuadratureConfig quad{};
};

struct CalibrationResult {
  double sigma_impl = 0.0;
  double rho_star = 0.0;
  int iterations = 0;
  double residual = 0.0;
  PricingEngine engine = PricingEngine::Asym;
};

struct SeriesRow {
  QuoteRecord quote;
  std::optional<CalibrationResult> result;
  std::optional<Error> error;
};

/// CSV with header tau,S,bid,ask,strike,r,q (columns in any order).
std::vector<QuoteRecord> load_quotes(const std::string& path);
std::vector<QuoteRecord> parse_quotes(std::istream& in);

/// Frey-Patie call price for the quote's (S, tau) at liquidity parameter rho.
double model_price(const QuoteRecord& quote, double sigma, double rho,
                   const CalibrationOptions& opts);

/// Implied volatility at the anchor price, then bisection on rho so that the
/// model price meets the ask.
CalibrationResult calibrate(const QuoteRecord& quote, const CalibrationOptions& opts = {});

/// Calibrates each row independently; a failing row keeps its error and does
/// not stop the series.
std::vector<SeriesRow> calibrate_series(const std::vector<QuoteRecord>& quotes,
                                        const CalibrationOptions& opts = {});

const char* to_string(PricingEngine engine);

inline constexpr const char* kCalibrationCsvHeader =
    "tau,S,sigma_impl,rho_star,iterations,residual,engine";

void write_calibration_csv(std::ostream& out, const std::vector<SeriesRow>& rows);
std::string calibration_json(const std::vector<SeriesRow>& rows);

}  // namespace nlbs
