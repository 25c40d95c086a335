#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "nlbs/analytic_bs.hpp"
#include "nlbs/asymptotic.hpp"
#include "nlbs/calibration.hpp"
#include "nlbs/errors.hpp"

using namespace nlbs;

namespace {

const char* kHeader = "tau,S,bid,ask,strike,r,q\n";

ErrorCode parse_code(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_quotes(in);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse error");
  return ErrorCode::Io;
}

// Quote whose bid is the linear price at sigma 0.4 and whose ask is the
// asymptotic price at rho_star with the same sigma.
QuoteRecord synthetic(double rho_star, double S = 107.67, double tau = 0.0753) {
  MarketParams m;
  m.sigma_tilde = 0.4;
  m.strike = 106.0;
  m.r = 0.01;
  m.maturity = tau;
  QuoteRecord q{tau, S, 0.0, 0.0, 106.0, 0.01, 0.0};
  q.v_bid = bs_eval(m, S, tau).price;
  q.v_ask = price_asymptotic(ModelSpec::frey_patie(rho_star), m, S, tau);
  return q;
}

}  // namespace

TEST_CASE("parse_quotes: first table row") {
  std::istringstream in(std::string(kHeader) + "0.0753,107.67,6.100,6.200,106,0.01,0\n");
  const auto q = parse_quotes(in);
  REQUIRE(q.size() == 1);
  CHECK(q[0].tau == 0.0753);
  CHECK(q[0].S == 107.67);
  CHECK(q[0].v_bid == 6.1);
  CHECK(q[0].v_ask == 6.2);
  CHECK(q[0].strike == 106.0);
  CHECK(q[0].r == 0.01);
  CHECK(q[0].q == 0.0);
}

TEST_CASE("parse_quotes: columns in another order") {
  std::istringstream in("S,tau,ask,bid,q,r,strike\n107.67,0.0753,6.2,6.1,0,0.01,106\n");
  const auto q = parse_quotes(in);
  CHECK(q[0].S == 107.67);
  CHECK(q[0].v_ask == 6.2);
}

TEST_CASE("parse_quotes: malformed input") {
  CHECK(parse_code("") == ErrorCode::EmptyFile);
  CHECK(parse_code(kHeader) == ErrorCode::EmptyFile);
  CHECK(parse_code("tau,S,bid,ask,strike,r\n0.1,100,1,2,100,0.01\n") == ErrorCode::MissingColumn);
  CHECK(parse_code(std::string(kHeader) + "0.1,abc,1,2,100,0.01,0\n") == ErrorCode::BadNumber);

  std::istringstream in(std::string(kHeader) + "0.1,100,1,2,100,0.01,0\n0.1,100,3,2,100,0.01,0\n");
  try {
    parse_quotes(in);
    FAIL("expected CrossedQuote");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CrossedQuote);
    CHECK(e.index() == 3);
  }
}

TEST_CASE("load_quotes: shipped dataset has eight rows") {
  const auto q = load_quotes(NLBS_DATA_DIR "/aapl_quotes.csv");
  CHECK(q.size() == 8);
  CHECK_THROWS_AS(load_quotes(NLBS_DATA_DIR "/no_such_file.csv"), Error);
}

TEST_CASE("calibrate: synthetic round trip with the asymptotic engine") {
  CalibrationOptions opts;
  opts.price_tol = 1e-6;
  for (double rho : {1e-3, 3e-3, 5e-3}) {
    const auto r = calibrate(synthetic(rho), opts);
    CHECK(r.sigma_impl == doctest::Approx(0.4).epsilon(1e-8));
    CHECK(std::abs(r.rho_star - rho) <= 1e-6);
    CHECK(r.iterations <= 40);
    CHECK(r.residual <= opts.price_tol);
    CHECK(r.engine == PricingEngine::Asym);
  }
}

TEST_CASE("calibrate: target at the rho = 0 price gives a zero root") {
  auto q = synthetic(0.0);
  q.v_ask = q.v_bid;
  const auto r = calibrate(q);
  CHECK(r.rho_star <= 1e-6);
}

TEST_CASE("calibrate: bracket failures") {
  auto q = synthetic(3e-3);
  q.v_ask = q.v_bid * 10.0;
  try {
    calibrate(q);
    FAIL("expected BracketFail");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BracketFail);
  }
}

TEST_CASE("calibrate: mid anchoring raises sigma and lowers rho") {
  const auto q = synthetic(3e-3);
  CalibrationOptions mid;
  mid.anchor = Anchor::MidAnchored;
  const auto b = calibrate(q);
  const auto m = calibrate(q, mid);
  CHECK(m.sigma_impl > b.sigma_impl);
  CHECK(m.rho_star < b.rho_star);
  CHECK(m.rho_star > 0.0);
}

TEST_CASE("calibrate_series keeps going past a bad row") {
  std::vector<QuoteRecord> quotes;
  for (int k = 0; k < 8; ++k) quotes.push_back(synthetic(1e-3 * (k + 1) / 2.0));
  std::swap(quotes[3].v_bid, quotes[3].v_ask);
  const auto rows = calibrate_series(quotes);
  REQUIRE(rows.size() == 8);
  int ok = 0;
  for (const auto& r : rows) ok += r.result.has_value();
  CHECK(ok == 7);
  REQUIRE(rows[3].error);
  CHECK(rows[3].error->code() == ErrorCode::CrossedQuote);

  std::ostringstream csv;
  write_calibration_csv(csv, rows);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == kCalibrationCsvHeader);
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 8);

  const auto j = nlohmann::json::parse(calibration_json(rows));
  CHECK(j["results"].size() == 8);
  CHECK(j["results"][3]["error"]["code"] == "CrossedQuote");
}

TEST_CASE("engines agree on price at the recovered parameter") {
  const auto quotes = load_quotes(NLBS_DATA_DIR "/aapl_quotes.csv");
  CalibrationOptions asym;
  const auto r = calibrate(quotes[0], asym);
  CalibrationOptions newton;
  newton.engine = PricingEngine::Newton;
  newton.newton_M = newton.newton_N = 200;
  const double pa = model_price(quotes[0], r.sigma_impl, r.rho_star, asym);
  const double pn = model_price(quotes[0], r.sigma_impl, r.rho_star, newton);
  CHECK(std::abs(pa - pn) / pa <= 1e-2);
}

TEST_CASE("model price rises with rho for both engines") {
  const auto q = synthetic(3e-3);
  for (auto engine : {PricingEngine::Asym, PricingEngine::Newton}) {
    CalibrationOptions o;
    o.engine = engine;
    o.newton_M = o.newton_N = 200;
    double prev = 0.0;
    for (double rho : {0.0, 2e-3, 4e-3}) {
      const double p = model_price(q, 0.4, rho, o);
      CHECK(p > prev);
      prev = p;
    }
  }
}
