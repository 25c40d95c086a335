#include "nlbs/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "nlbs/analytic_bs.hpp"

namespace nlbs {
namespace {

bool in_window(double S, const MarketParams& mkt) {
  return S >= 0.5 * mkt.strike - 1e-12 && S <= 1.5 * mkt.strike + 1e-12;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string optional_number(const std::optional<double>& v) { return v ? number(*v) : ""; }

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

// Linear interpolation of a fine slice onto the nodes of a coarser grid; exact
// node sampling when the grids nest.
std::vector<double> sample_onto(const SolveGrid& fine, std::span<const double> slice,
                                const SolveGrid& coarse) {
  std::vector<double> out(coarse.M);
  for (int i = 0; i < coarse.M; ++i) {
    const double pos = coarse.S(i) / fine.dS();
    const int left = std::clamp(static_cast<int>(std::floor(pos + 1e-9)), 0, fine.M - 1);
    const double t = pos - left;
    out[i] = (left + 1 < fine.M && t > 1e-9) ? (1.0 - t) * slice[left] + t * slice[left + 1]
                                              : slice[left];
  }
  return out;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SolveGrid RefinementLadder::grid_at(int level) const {
  const double dS = base.dS() * std::pow(space_ratio, level);
  const double time_ratio =
      constraint == LadderConstraint::DiffusiveRatio ? space_ratio * space_ratio : space_ratio;
  const double dtau = base.dtau() * std::pow(time_ratio, level);
  const int M = static_cast<int>(std::lround(base.S_max / dS)) + 1;
  const int N = static_cast<int>(std::lround(base.T / dtau)) + 1;
  return SolveGrid::make(base.S_max, M, N, base.T);
}

void RefinementLadder::validate() const {
  base.validate();
  require(levels >= 1, "ladder needs at least one level");
  require(space_ratio > 0.0 && space_ratio < 1.0, "space ratio must lie in (0, 1)");
}

double error_norm(std::span<const double> V, std::span<const double> V_ref, const SolveGrid& grid,
                  const MarketParams& mkt, NormKind norm) {
  require(V.size() == V_ref.size() && static_cast<int>(V.size()) == grid.M,
          "slices must share the grid");
  std::vector<int> idx;
  for (int i = 0; i < grid.M; ++i)
    if (in_window(grid.S(i), mkt)) idx.push_back(i);
  if (idx.empty()) fail(ErrorCode::EmptyDomain, "no grid nodes in [0.5E, 1.5E]");

  if (norm == NormKind::Linf) {
    double num = 0.0, den = 0.0;
    for (int i : idx) {
      num = std::max(num, std::abs(V[i] - V_ref[i]));
      den = std::max(den, std::abs(V_ref[i]));
    }
    return num / den;
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const double w = (idx.size() > 1 && (k == 0 || k + 1 == idx.size())) ? 0.5 : 1.0;
    const int i = idx[k];
    num += w * (V[i] - V_ref[i]) * (V[i] - V_ref[i]);
    den += w * V_ref[i] * V_ref[i];
  }
  return std::sqrt(num / den);
}

double eoc(double err_prev, double err_next, double dS_prev, double dS_next) {
  return std::log(err_next / err_prev) / std::log(dS_next / dS_prev);
}

double eotc(double time_prev, double time_next, double dtau_prev, double dtau_next) {
  return -std::log(time_next / time_prev) / std::log(dtau_next / dtau_prev);
}

void recompute_rates(std::vector<ExperimentRecord>& records) {
  for (std::size_t m = 0; m < records.size(); ++m) {
    auto& rec = records[m];
    rec.eoc_linf.reset();
    rec.eoc_l2.reset();
    rec.eotc.reset();
    if (m == 0) continue;
    const auto& prev = records[m - 1];
    if (prev.err_linf && rec.err_linf)
      rec.eoc_linf = eoc(*prev.err_linf, *rec.err_linf, prev.grid.dS(), rec.grid.dS());
    if (prev.err_l2 && rec.err_l2)
      rec.eoc_l2 = eoc(*prev.err_l2, *rec.err_l2, prev.grid.dS(), rec.grid.dS());
    if (prev.wall_time > 0.0 && rec.wall_time > 0.0)
      rec.eotc = eotc(prev.wall_time, rec.wall_time, prev.grid.dtau(), rec.grid.dtau());
  }
}

std::vector<double> closed_form_slice(const MarketParams& mkt, const SolveGrid& grid) {
  std::vector<double> v(grid.M);
  for (int i = 0; i < grid.M; ++i) {
    const double S = grid.S(i);
    if (S > 0.0)
      v[i] = bs_eval(mkt, S, grid.T).price;
    else
      v[i] = mkt.kind == OptionKind::Call ? 0.0 : mkt.strike * std::exp(-mkt.r * grid.T);
  }
  return v;
}

std::vector<double> asymptotic_slice(const ModelSpec& model, const MarketParams& mkt,
                                     const SolveGrid& grid, const QuadratureConfig& cfg,
                                     bool window_only) {
  std::vector<double> v(grid.M, std::numeric_limits<double>::quiet_NaN());
  v[0] = mkt.kind == OptionKind::Call ? 0.0 : mkt.strike * std::exp(-mkt.r * grid.T);
  for (int i = 1; i < grid.M; ++i) {
    const double S = grid.S(i);
    if (window_only && !in_window(S, mkt)) continue;
    v[i] = price_asymptotic(model, mkt, S, grid.T, cfg);
  }
  return v;
}

ExperimentTable eoc_table(const SolverConfig& solver, const ModelSpec& model,
                          const MarketParams& mkt, const RefinementLadder& ladder,
                          Reference reference, int reference_extra_levels) {
  ladder.validate();
  require(ladder.levels >= 2, "EOC needs at least two ladder levels");
  if (reference == Reference::ClosedFormLinear)
    require(model.kind == ModelKind::Linear || model.parameter == 0.0,
            "closed-form reference is only valid for the linear model");
  require(reference_extra_levels >= 1, "self-convergence needs a finer reference level");

  ExperimentTable table;
  try {
    SolveGrid ref_grid;
    std::vector<double> ref_slice;
    if (reference == Reference::FinestSelf) {
      ref_grid = ladder.grid_at(ladder.levels - 1 + reference_extra_levels);
      ref_slice = solve(model, mkt, ref_grid, solver).final_slice;
    }
    for (int m = 0; m < ladder.levels; ++m) {
      ExperimentRecord rec;
      rec.grid = ladder.grid_at(m);
      const auto report = solve(model, mkt, rec.grid, solver);
      const auto exact = reference == Reference::ClosedFormLinear
                             ? closed_form_slice(mkt, rec.grid)
                             : sample_onto(ref_grid, ref_slice, rec.grid);
      rec.err_linf = error_norm(report.final_slice, exact, rec.grid, mkt, NormKind::Linf);
      rec.err_l2 = error_norm(report.final_slice, exact, rec.grid, mkt, NormKind::L2);
      rec.wall_time = report.wall_time;
      table.records.push_back(rec);
      recompute_rates(table.records);
    }
  } catch (const Error& e) {
    table.failure = e;
  }
  return table;
}

ExperimentTable eotc_table(const TimedEngine& engine, const ModelSpec& model,
                           const MarketParams& mkt, const RefinementLadder& ladder,
                           int repetitions) {
  ladder.validate();
  require(repetitions >= 1, "need at least one timing repetition");
  ExperimentTable table;
  try {
    for (int m = 0; m < ladder.levels; ++m) {
      ExperimentRecord rec;
      rec.grid = ladder.grid_at(m);
      auto run = [&] {
        const auto start = std::chrono::steady_clock::now();
        if (engine.asymptotic) {
          volatile double sink = asymptotic_slice(model, mkt, rec.grid).back();
          (void)sink;
        } else {
          volatile double sink = solve(model, mkt, rec.grid, engine.solver).final_slice.back();
          (void)sink;
        }
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      };
      run();  // warm-up
      std::vector<double> times;
      for (int k = 0; k < repetitions; ++k) times.push_back(run());
      rec.wall_time = median(times);
      table.records.push_back(rec);
      recompute_rates(table.records);
    }
  } catch (const Error& e) {
    table.failure = e;
  }
  return table;
}

std::vector<SweepRow> method_difference_sweep(const MarketParams& mkt, double S_max,
                                              std::span<const int> grid_sizes,
                                              std::span<const double> param_values,
                                              ModelKind family, const SolverConfig& solver,
                                              const QuadratureConfig& quad) {
  require(family != ModelKind::Linear, "sweep needs a nonlinear model family");
  for (std::size_t k = 0; k < param_values.size(); ++k) {
    require(param_values[k] >= 0.0, "sweep parameters must be nonnegative");
    if (k > 0) require(param_values[k] >= param_values[k - 1], "sweep parameters must ascend");
  }
  std::vector<SweepRow> rows;
  for (int size : grid_sizes) {
    const auto grid = SolveGrid::make(S_max, size, size, mkt.maturity);
    for (double p : param_values) {
      const ModelSpec model{family, p, 0.05};
      const auto newton = solve(model, mkt, grid, solver).final_slice;
      const auto asym = asymptotic_slice(model, mkt, grid, quad, true);
      rows.push_back({size, size, p, error_norm(newton, asym, grid, mkt, NormKind::Linf)});
    }
  }
  return rows;
}

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRecord>& records,
                          bool include_timing) {
  out << kExperimentCsvHeader << '\n';
  for (const auto& r : records) {
    out << number(r.grid.dS()) << ',' << number(r.grid.dtau()) << ',' << optional_number(r.err_linf)
        << ',' << optional_number(r.eoc_linf) << ',' << optional_number(r.err_l2) << ','
        << optional_number(r.eoc_l2) << ',' << (include_timing ? number(r.wall_time) : "") << ','
        << (include_timing ? optional_number(r.eotc) : "") << '\n';
  }
}

std::string experiment_json(const std::vector<ExperimentRecord>& records, bool include_timing) {
  auto arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"grid_dS", r.grid.dS()},
                   {"grid_dtau", r.grid.dtau()},
                   {"M", r.grid.M},
                   {"N", r.grid.N},
                   {"err_linf", optional_json(r.err_linf)},
                   {"eoc_linf", optional_json(r.eoc_linf)},
                   {"err_l2", optional_json(r.err_l2)},
                   {"eoc_l2", optional_json(r.eoc_l2)},
                   {"wall_time_s", include_timing ? nlohmann::json(r.wall_time) : nlohmann::json()},
                   {"eotc", include_timing ? optional_json(r.eotc) : nlohmann::json()}});
  }
  return nlohmann::json{{"records", arr}}.dump(2);
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "M,N,parameter,rel_diff_linf\n";
  for (const auto& r : rows)
    out << r.M << ',' << r.N << ',' << number(r.parameter) << ',' << number(r.rel_diff_linf) << '\n';
}

std::string sweep_json(const std::vector<SweepRow>& rows) {
  auto arr = nlohmann::json::array();
  for (const auto& r : rows)
    arr.push_back({{"M", r.M}, {"N", r.N}, {"parameter", r.parameter},
                   {"rel_diff_linf", r.rel_diff_linf}});
  return nlohmann::json{{"rows", arr}}.dump(2);
}

}  // namespace nlbs
