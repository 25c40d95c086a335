#include "nlbs/calibration.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "nlbs/analytic_bs.hpp"

namespace nlbs {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& cell, long line) {
  double v = 0.0;
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
    fail(ErrorCode::BadNumber, "bad number '" + cell + "' on line " + std::to_string(line), 0.0,
         line);
  return v;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

MarketParams quote_market(const QuoteRecord& quote, double sigma) {
  MarketParams m;
  m.sigma_tilde = sigma;
  m.r = quote.r;
  m.q = quote.q;
  m.strike = quote.strike;
  m.maturity = quote.tau;
  m.kind = OptionKind::Call;
  return m;
}

}  // namespace

void QuoteRecord::validate(long line) const {
  const std::string where = line >= 0 ? " on line " + std::to_string(line) : "";
  if (v_bid > v_ask) fail(ErrorCode::CrossedQuote, "bid above ask" + where, v_bid - v_ask, line);
  if (!(v_bid > 0.0)) fail(ErrorCode::InvalidArgument, "bid must be positive" + where, 0.0, line);
  if (!(tau > 0.0) || !(S > 0.0) || !(strike > 0.0))
    fail(ErrorCode::InvalidArgument, "tau, S and strike must be positive" + where, 0.0, line);
  if (q < 0.0) fail(ErrorCode::InvalidArgument, "dividend yield must be nonnegative" + where, 0.0, line);
}

std::vector<QuoteRecord> parse_quotes(std::istream& in) {
  std::string line;
  long line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) header = split(line);
  }
  if (header.empty()) fail(ErrorCode::EmptyFile, "quote file is empty");
  if (!header.front().empty() && header.front().rfind("\xEF\xBB\xBF", 0) == 0)
    header.front().erase(0, 3);

  static constexpr std::array<const char*, 7> kColumns = {"tau", "S", "bid", "ask", "strike", "r", "q"};
  std::map<std::string, std::size_t> where;
  for (std::size_t i = 0; i < header.size(); ++i) where[header[i]] = i;
  std::array<std::size_t, 7> col{};
  for (std::size_t c = 0; c < kColumns.size(); ++c) {
    const auto it = where.find(kColumns[c]);
    if (it == where.end())
      fail(ErrorCode::MissingColumn, std::string("missing column '") + kColumns[c] + "'");
    col[c] = it->second;
  }

  std::vector<QuoteRecord> quotes;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      fail(ErrorCode::BadNumber, "wrong number of fields on line " + std::to_string(line_no), 0.0,
           line_no);
    std::array<double, 7> v{};
    for (std::size_t c = 0; c < kColumns.size(); ++c) v[c] = parse_number(cells[col[c]], line_no);
    QuoteRecord q{v[0], v[1], v[2], v[3], v[4], v[5], v[6]};
    q.validate(line_no);
    quotes.push_back(q);
  }
  if (quotes.empty()) fail(ErrorCode::EmptyFile, "quote file has no data rows");
  return quotes;
}

std::vector<QuoteRecord> load_quotes(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open quote file '" + path + "'");
  return parse_quotes(in);
}

double model_price(const QuoteRecord& quote, double sigma, double rho,
                   const CalibrationOptions& opts) {
  const auto mkt = quote_market(quote, sigma);
  const auto model = ModelSpec::frey_patie(rho);
  if (opts.engine == PricingEngine::Asym)
    return price_asymptotic(model, mkt, quote.S, quote.tau, opts.quad);

  // put the spot on a node with S_max close to three strikes
  const int intervals = opts.newton_M - 1;
  const long k = std::max(1L, std::lround(quote.S * intervals / (3.0 * quote.strike)));
  const double S_max = quote.S / static_cast<double>(k) * intervals;
  require(S_max > quote.S, "Newton grid too coarse for the quote");
  const auto grid = SolveGrid::make(S_max, opts.newton_M, opts.newton_N, quote.tau);
  const auto report = solve(model, mkt, grid, opts.solver);
  return report.final_slice[k];
}

CalibrationResult calibrate(const QuoteRecord& quote, const CalibrationOptions& opts) {
  quote.validate();
  require(opts.bracket_hi > 0.0, "bracket_hi must be positive");
  require(opts.price_tol > 0.0 && opts.width_tol > 0.0, "tolerances must be positive");

  CalibrationResult out;
  out.engine = opts.engine;
  const double anchor =
      opts.anchor == Anchor::BidAnchored ? quote.v_bid : 0.5 * (quote.v_bid + quote.v_ask);
  const double target = quote.v_ask;
  out.sigma_impl = implied_vol(quote_market(quote, 0.4), quote.S, quote.tau, anchor);

  auto f = [&](double rho) { return model_price(quote, out.sigma_impl, rho, opts) - target; };

  double lo = 0.0;
  const double f_lo = f(lo);
  if (std::abs(f_lo) <= opts.price_tol) {
    out.residual = std::abs(f_lo);
    return out;
  }
  if (f_lo > 0.0)
    fail(ErrorCode::BracketFail, "target lies below the rho = 0 model price", f_lo);

  auto check_monotone = [&](double hi) {
    double prev = f_lo;
    for (int k = 1; k <= 4; ++k) {
      const double val = f(hi * k / 4.0);
      if (val < prev - 1e-10 * (1.0 + std::abs(target)))
        fail(ErrorCode::NonMonotonePrice, "model price decreases in rho near " +
                                              std::to_string(hi * k / 4.0), hi * k / 4.0);
      prev = val;
    }
    return prev;
  };

  // an engine that cannot converge at the bracket end gets a shorter bracket
  double hi = opts.bracket_hi;
  for (int shrink = 0;; ++shrink) {
    try {
      f(hi);
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonConvergence || shrink == 6) throw;
      hi *= 0.5;
    }
  }
  double f_hi = check_monotone(hi);
  for (int doubling = 0; f_hi < 0.0; ++doubling) {
    if (doubling == 4)
      fail(ErrorCode::BracketFail, "model price at bracket_hi stays below target", hi);
    hi *= 2.0;
    f_hi = check_monotone(hi);
  }

  double mid = hi;
  double f_mid = f_hi;
  for (int it = 1; it <= opts.max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    f_mid = f(mid);
    out.iterations = it;
    if (std::abs(f_mid) <= opts.price_tol) break;
    if (f_mid < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= opts.width_tol) {
      mid = 0.5 * (lo + hi);
      f_mid = f(mid);
      break;
    }
  }
  out.rho_star = mid;
  out.residual = std::abs(f_mid);
  return out;
}

std::vector<SeriesRow> calibrate_series(const std::vector<QuoteRecord>& quotes,
                                        const CalibrationOptions& opts) {
  std::vector<SeriesRow> rows;
  rows.reserve(quotes.size());
  for (const auto& q : quotes) {
    SeriesRow row{q, std::nullopt, std::nullopt};
    try {
      row.result = calibrate(q, opts);
    } catch (const Error& e) {
      row.error = e;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

const char* to_string(PricingEngine engine) {
  return engine == PricingEngine::Asym ? "asym" : "newton";
}

void write_calibration_csv(std::ostream& out, const std::vector<SeriesRow>& rows) {
  out << kCalibrationCsvHeader << '\n';
  for (const auto& row : rows) {
    out << number(row.quote.tau) << ',' << number(row.quote.S) << ',';
    if (row.result) {
      const auto& r = *row.result;
      out << number(r.sigma_impl) << ',' << number(r.rho_star) << ',' << r.iterations << ','
          << number(r.residual) << ',' << to_string(r.engine) << '\n';
    } else {
      out << ",,,,\n";
    }
  }
}

std::string calibration_json(const std::vector<SeriesRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json j{{"tau", row.quote.tau}, {"S", row.quote.S}};
    if (row.result) {
      const auto& r = *row.result;
      j["sigma_impl"] = r.sigma_impl;
      j["rho_star"] = r.rho_star;
      j["iterations"] = r.iterations;
      j["residual"] = r.residual;
      j["engine"] = to_string(r.engine);
    } else if (row.error) {
      j["error"] = {{"code", to_string(row.error->code())}, {"message", row.error->what()}};
    }
    arr.push_back(std::move(j));
  }
  return nlohmann::json{{"results", arr}}.dump(2);
}

}  // namespace nlbs
