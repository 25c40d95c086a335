#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "nlbs/analytic_bs.hpp"
#include "nlbs/errors.hpp"
#include "nlbs/harness.hpp"

using namespace nlbs;

namespace {

const MarketParams kMkt;

RefinementLadder linear_ladder(int levels) {
  RefinementLadder l;
  l.base = SolveGrid::make(300.0, 11, 11, kMkt.maturity);
  l.levels = levels;
  return l;
}

}  // namespace

TEST_CASE("eoc: the tabulated error pair gives 4.09") {
  const double a = eoc(2.93e-5, 1.72e-6, 1.0, 0.5);
  CHECK(std::round(a * 100.0) / 100.0 == doctest::Approx(4.09).epsilon(1e-12));
}

TEST_CASE("eoc: quartering errors give exactly 2") {
  CHECK(eoc(1.0, 0.25, 0.2, 0.1) == 2.0);
  CHECK(eoc(0.08, 0.02, 3.0, 1.5) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("eotc: tabulated timing pair and flat cost") {
  const double e = eotc(0.291, 0.467, 1.0, 0.5);
  CHECK(std::round(e * 1000.0) / 1000.0 == doctest::Approx(0.682).epsilon(1e-12));
  CHECK(eotc(0.3, 0.3, 1.0, 0.5) == 0.0);
}

TEST_CASE("error_norm: identity, scaling and norm ordering") {
  const auto g = SolveGrid::make(300.0, 301, 10, kMkt.maturity);
  const auto ref = closed_form_slice(kMkt, g);
  for (auto n : {NormKind::Linf, NormKind::L2}) {
    CHECK(error_norm(ref, ref, g, kMkt, n) == 0.0);
    std::vector<double> scaled(ref);
    for (double& v : scaled) v *= 1.01;
    CHECK(error_norm(scaled, ref, g, kMkt, n) == doctest::Approx(0.01).epsilon(1e-12));
  }

  // brute-force check: the sup of |e| dominates its normalised L2 mean, and the
  // restricted L2 norm equals a direct trapezoid sum
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  std::vector<double> noisy(ref);
  for (double& v : noisy) v += u(rng);
  double num = 0.0, den = 0.0, emax = 0.0, wsum = 0.0;
  std::vector<int> idx;
  for (int i = 0; i < g.M; ++i)
    if (g.S(i) >= 50.0 - 1e-12 && g.S(i) <= 150.0 + 1e-12) idx.push_back(i);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const int i = idx[k];
    const double w = (k == 0 || k + 1 == idx.size()) ? 0.5 * g.dS() : g.dS();
    const double e = noisy[i] - ref[i];
    num += w * e * e;
    den += w * ref[i] * ref[i];
    wsum += w;
    emax = std::max(emax, std::abs(e));
  }
  CHECK(error_norm(noisy, ref, g, kMkt, NormKind::L2) ==
        doctest::Approx(std::sqrt(num / den)).epsilon(1e-12));
  CHECK(emax >= std::sqrt(num / wsum));
}

TEST_CASE("error_norm: empty window") {
  MarketParams far = kMkt;
  far.strike = 1000.0;
  const auto g = SolveGrid::make(300.0, 31, 10, far.maturity);
  std::vector<double> v(g.M, 1.0);
  try {
    error_norm(v, v, g, far, NormKind::Linf);
    FAIL("expected EmptyDomain");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyDomain);
  }
}

TEST_CASE("ladders keep their ratio invariant") {
  auto l = linear_ladder(4);
  const double base = l.base.dS() * l.base.dS() / l.base.dtau();
  for (int k = 1; k < 4; ++k) {
    const auto g = l.grid_at(k);
    CHECK(g.dS() * g.dS() / g.dtau() == doctest::Approx(base).epsilon(1e-12));
    CHECK(g.dS() == doctest::Approx(l.base.dS() * std::pow(0.5, k)).epsilon(1e-12));
  }
  l.constraint = LadderConstraint::LinearRatio;
  const auto g2 = l.grid_at(2);
  CHECK(g2.dS() / g2.dtau() == doctest::Approx(l.base.dS() / l.base.dtau()).epsilon(1e-12));
}

TEST_CASE("linear ladder against the closed form converges at second order") {
  const auto t = eoc_table(SolverConfig{}, ModelSpec::linear(), kMkt, linear_ladder(4),
                           Reference::ClosedFormLinear);
  REQUIRE_FALSE(t.failure);
  REQUIRE(t.records.size() == 4);
  CHECK_FALSE(t.records[0].eoc_linf);
  CHECK(*t.records.back().eoc_linf >= 1.5);
  CHECK(*t.records.back().eoc_l2 >= 1.5);

  // recomputation from the stored errors is bit-identical
  auto copy = t.records;
  for (auto& r : copy) r.eoc_linf = r.eoc_l2 = r.eotc = std::nullopt;
  recompute_rates(copy);
  for (std::size_t k = 1; k < copy.size(); ++k) {
    CHECK(*copy[k].eoc_linf == *t.records[k].eoc_linf);
    CHECK(*copy[k].eoc_l2 == *t.records[k].eoc_l2);
  }

  const auto self = eoc_table(SolverConfig{}, ModelSpec::linear(), kMkt, linear_ladder(4),
                              Reference::FinestSelf);
  REQUIRE_FALSE(self.failure);
  CHECK(std::abs(*self.records.back().eoc_linf - *t.records.back().eoc_linf) < 0.3);
}

TEST_CASE("closed-form reference is refused for a nonlinear model") {
  CHECK_THROWS_AS(eoc_table(SolverConfig{}, ModelSpec::frey_patie(0.01), kMkt, linear_ladder(2),
                            Reference::ClosedFormLinear),
                  Error);
}

TEST_CASE("a failing level keeps the earlier records") {
  SolverConfig cfg;
  cfg.max_iter = 2;
  auto l = linear_ladder(3);
  l.base = SolveGrid::make(300.0, 41, 41, kMkt.maturity);
  const auto t = eoc_table(cfg, ModelSpec::frey_patie(0.05), kMkt, l, Reference::FinestSelf, 1);
  REQUIRE(t.failure);
  CHECK(t.failure->code() == ErrorCode::NonConvergence);
}

TEST_CASE("eotc table: times are recorded for every level") {
  RefinementLadder l;
  l.base = SolveGrid::make(300.0, 21, 21, kMkt.maturity);
  l.levels = 3;
  l.constraint = LadderConstraint::LinearRatio;
  const auto t = eotc_table(TimedEngine{false, SolverConfig{}}, ModelSpec::frey_patie(0.01), kMkt,
                            l, 1);
  REQUIRE_FALSE(t.failure);
  REQUIRE(t.records.size() == 3);
  CHECK_FALSE(t.records[0].eotc);
  for (const auto& r : t.records) CHECK(r.wall_time > 0.0);
  CHECK(t.records[1].eotc.has_value());
}

TEST_CASE("sweep at zero parameter equals the plain discretisation error") {
  const std::vector<int> sizes{100};
  const std::vector<double> params{0.0};
  const auto rows = method_difference_sweep(kMkt, 300.0, sizes, params, ModelKind::FreyPatie,
                                            SolverConfig{});
  REQUIRE(rows.size() == 1);
  const auto g = SolveGrid::make(300.0, 100, 100, kMkt.maturity);
  const auto r = solve(ModelSpec::frey_patie(0.0), kMkt, g, SolverConfig{});
  const double fd = error_norm(r.final_slice, closed_form_slice(kMkt, g), g, kMkt, NormKind::Linf);
  CHECK(rows[0].rel_diff_linf == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("CSV header and optional timing columns") {
  ExperimentRecord a;
  a.grid = SolveGrid::make(300.0, 11, 11, kMkt.maturity);
  a.err_linf = 0.1;
  a.err_l2 = 0.05;
  a.wall_time = 1.5;
  std::ostringstream out;
  write_experiment_csv(out, {a});
  const auto text = out.str();
  CHECK(text.rfind(std::string(kExperimentCsvHeader) + "\n", 0) == 0);
  std::ostringstream quiet;
  write_experiment_csv(quiet, {a}, false);
  CHECK(quiet.str().find("1.5") == std::string::npos);
  CHECK(experiment_json({a}).find("\"err_linf\"") != std::string::npos);
}
