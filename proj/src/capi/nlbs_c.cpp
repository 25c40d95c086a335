#include "nlbs/nlbs.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlbs/analytic_bs.hpp"
#include "nlbs/calibration.hpp"
#include "nlbs/harness.hpp"

struct nlbs_report {
  nlbs::SolveGrid grid;
  nlbs::SolveReport report;
};

struct nlbs_table {
  nlbs::ExperimentTable table;
  std::string failure_message;
};

struct nlbs_sweep {
  std::vector<nlbs::SweepRow> rows;
};

struct nlbs_series {
  std::vector<nlbs::SeriesRow> rows;
  std::vector<std::string> messages;
};

namespace {

thread_local std::string g_last_error;

nlbs_status status_of(nlbs::ErrorCode code) {
  return static_cast<nlbs_status>(static_cast<int>(code) + 1);
}

nlbs_status set_error(nlbs_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
nlbs_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return NLBS_OK;
  } catch (const nlbs::Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(NLBS_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(NLBS_INTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) nlbs::fail(nlbs::ErrorCode::InvalidArgument, std::string(what) + " is null");
}

nlbs::MarketParams to_cpp(const nlbs_market& m) {
  nlbs::MarketParams out;
  out.sigma_tilde = m.sigma_tilde;
  out.r = m.r;
  out.q = m.q;
  out.strike = m.strike;
  out.maturity = m.maturity;
  out.kind = m.kind == NLBS_PUT ? nlbs::OptionKind::Put : nlbs::OptionKind::Call;
  return out;
}

nlbs::ModelKind to_cpp(nlbs_model_kind k) {
  switch (k) {
    case NLBS_LINEAR: return nlbs::ModelKind::Linear;
    case NLBS_FREY_PATIE: return nlbs::ModelKind::FreyPatie;
    case NLBS_RAPM: return nlbs::ModelKind::Rapm;
  }
  nlbs::fail(nlbs::ErrorCode::InvalidArgument, "unknown model kind");
}

nlbs::ModelSpec to_cpp(const nlbs_model& m) {
  return {to_cpp(m.kind), m.parameter, m.clamp_floor};
}

nlbs::SolverConfig to_cpp(const nlbs_solver& s) {
  nlbs::SolverConfig out;
  switch (s.method) {
    case NLBS_FROZEN: out.method = nlbs::Method::Frozen; break;
    case NLBS_NM1: out.method = nlbs::Method::NM1; break;
    case NLBS_NM2: out.method = nlbs::Method::NM2; break;
    default: nlbs::fail(nlbs::ErrorCode::InvalidArgument, "unknown solver method");
  }
  out.derivative_mode = s.derivative_mode == NLBS_FINITE_DIFFERENCE
                            ? nlbs::DerivativeMode::FiniteDifference
                            : nlbs::DerivativeMode::Analytic;
  out.tol = s.tol;
  out.max_iter = s.max_iter;
  out.first_level_guess = s.first_level_guess;
  return out;
}

nlbs::QuadratureConfig to_cpp(const nlbs_quadrature* q) {
  nlbs::QuadratureConfig out;
  if (q == nullptr) return out;
  out.abs_tol = q->abs_tol;
  out.rel_tol = q->rel_tol;
  out.max_subdivisions = q->max_subdivisions;
  out.endpoint_power_p = q->endpoint_power_p;
  return out;
}

nlbs::RefinementLadder to_cpp(const nlbs_ladder& l, double T) {
  nlbs::RefinementLadder out;
  out.base = nlbs::SolveGrid::make(l.base.S_max, l.base.M, l.base.N, T);
  out.levels = l.levels;
  out.space_ratio = l.space_ratio;
  out.constraint = l.constraint == NLBS_LINEAR_RATIO ? nlbs::LadderConstraint::LinearRatio
                                                     : nlbs::LadderConstraint::DiffusiveRatio;
  return out;
}

nlbs::CalibrationOptions to_cpp(const nlbs_calibration_options& o) {
  nlbs::CalibrationOptions out;
  out.engine = o.engine == NLBS_ENGINE_NEWTON ? nlbs::PricingEngine::Newton
                                              : nlbs::PricingEngine::Asym;
  out.anchor = o.anchor == NLBS_MID_ANCHORED ? nlbs::Anchor::MidAnchored
                                             : nlbs::Anchor::BidAnchored;
  out.bracket_hi = o.bracket_hi;
  out.price_tol = o.price_tol;
  out.width_tol = o.width_tol;
  out.max_iter = o.max_iter;
  out.newton_M = o.newton_M;
  out.newton_N = o.newton_N;
  out.solver = to_cpp(o.solver);
  out.quad = to_cpp(&o.quad);
  return out;
}

nlbs_calibration_result to_c(const nlbs::CalibrationResult& r) {
  return {r.sigma_impl, r.rho_star, r.iterations, r.residual,
          r.engine == nlbs::PricingEngine::Newton ? NLBS_ENGINE_NEWTON : NLBS_ENGINE_ASYM};
}

template <class Writer>
void write_to(const char* path, Writer&& writer) {
  if (path == nullptr || std::string(path) == "-") {
    writer(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) nlbs::fail(nlbs::ErrorCode::Io, std::string("cannot open '") + path + "' for writing");
  writer(out);
  out.flush();
  if (!out) nlbs::fail(nlbs::ErrorCode::Io, std::string("write to '") + path + "' failed");
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double or_nan(const std::optional<double>& v) {
  return v ? *v : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

extern "C" {

const char* nlbs_last_error(void) { return g_last_error.c_str(); }

const char* nlbs_status_name(nlbs_status status) {
  if (status == NLBS_OK) return "Ok";
  if (status == NLBS_INTERNAL) return "Internal";
  if (status > NLBS_OK && status < NLBS_INTERNAL)
    return nlbs::to_string(static_cast<nlbs::ErrorCode>(static_cast<int>(status) - 1));
  return "Unknown";
}

void nlbs_market_defaults(nlbs_market* out) {
  if (out) *out = {0.4, 0.03, 0.0, 100.0, 1.0 / 12.0, NLBS_CALL};
}

void nlbs_model_defaults(nlbs_model* out) {
  if (out) *out = {NLBS_LINEAR, 0.0, 0.05};
}

void nlbs_grid_defaults(nlbs_grid* out) {
  if (out) *out = {300.0, 200, 200};
}

void nlbs_solver_defaults(nlbs_solver* out) {
  if (out) *out = {NLBS_NM1, NLBS_ANALYTIC, 1e-8, 100, 1.0};
}

void nlbs_quadrature_defaults(nlbs_quadrature* out) {
  if (!out) return;
  const nlbs::QuadratureConfig q;
  *out = {q.abs_tol, q.rel_tol, q.max_subdivisions, q.endpoint_power_p};
}

void nlbs_ladder_defaults(nlbs_ladder* out) {
  if (out) *out = {{300.0, 11, 11}, 4, 0.5, NLBS_DIFFUSIVE_RATIO};
}

void nlbs_calibration_defaults(nlbs_calibration_options* out) {
  if (!out) return;
  const nlbs::CalibrationOptions o;
  out->engine = NLBS_ENGINE_ASYM;
  out->anchor = NLBS_BID_ANCHORED;
  out->bracket_hi = o.bracket_hi;
  out->price_tol = o.price_tol;
  out->width_tol = o.width_tol;
  out->max_iter = o.max_iter;
  out->newton_M = o.newton_M;
  out->newton_N = o.newton_N;
  nlbs_solver_defaults(&out->solver);
  nlbs_quadrature_defaults(&out->quad);
}

nlbs_status nlbs_price_bs(const nlbs_market* mkt, double S, double tau, double* price) {
  return guarded([&] {
    need(mkt, "market");
    need(price, "output");
    const auto m = to_cpp(*mkt);
    m.validate();
    *price = nlbs::bs_eval(m, S, tau).price;
  });
}

nlbs_status nlbs_price_asymptotic(const nlbs_model* model, const nlbs_market* mkt, double S,
                                  double tau, const nlbs_quadrature* quad, double* price) {
  return guarded([&] {
    need(model, "model");
    need(mkt, "market");
    need(price, "output");
    *price = nlbs::price_asymptotic(to_cpp(*model), to_cpp(*mkt), S, tau, to_cpp(quad));
  });
}

nlbs_status nlbs_implied_vol(const nlbs_market* mkt, double S, double tau, double price,
                             double* sigma) {
  return guarded([&] {
    need(mkt, "market");
    need(sigma, "output");
    *sigma = nlbs::implied_vol(to_cpp(*mkt), S, tau, price);
  });
}

nlbs_status nlbs_solve(const nlbs_model* model, const nlbs_market* mkt, const nlbs_grid* grid,
                       const nlbs_solver* solver, nlbs_report** out) {
  return guarded([&] {
    need(model, "model");
    need(mkt, "market");
    need(grid, "grid");
    need(out, "output");
    *out = nullptr;
    nlbs_solver s;
    nlbs_solver_defaults(&s);
    if (solver) s = *solver;
    const auto g = nlbs::SolveGrid::make(grid->S_max, grid->M, grid->N, mkt->maturity);
    auto report = nlbs::solve(to_cpp(*model), to_cpp(*mkt), g, to_cpp(s));
    *out = new nlbs_report{g, std::move(report)};
  });
}

size_t nlbs_report_size(const nlbs_report* r) { return r ? r->report.final_slice.size() : 0; }

const double* nlbs_report_slice(const nlbs_report* r) {
  return r ? r->report.final_slice.data() : nullptr;
}

size_t nlbs_report_levels(const nlbs_report* r) {
  return r ? r->report.iterations_per_level.size() : 0;
}

const int* nlbs_report_iterations(const nlbs_report* r) {
  return r ? r->report.iterations_per_level.data() : nullptr;
}

double nlbs_report_wall_time(const nlbs_report* r) { return r ? r->report.wall_time : 0.0; }

size_t nlbs_report_clamp_events(const nlbs_report* r) { return r ? r->report.clamp_events : 0; }

int nlbs_report_diagonally_dominant(const nlbs_report* r) {
  return r && r->report.diagonally_dominant ? 1 : 0;
}

nlbs_status nlbs_report_price_at(const nlbs_report* r, double S, double* price) {
  return guarded([&] {
    need(r, "report");
    need(price, "output");
    *price = nlbs::interpolate_slice(r->grid, r->report.final_slice, S);
  });
}

nlbs_status nlbs_report_write(const nlbs_report* r, nlbs_format format, int include_timing,
                              const char* path) {
  return guarded([&] {
    need(r, "report");
    const auto& rep = r->report;
    write_to(path, [&](std::ostream& os) {
      if (format == NLBS_CSV) {
        os << "S,V\n";
        for (std::size_t i = 0; i < rep.final_slice.size(); ++i)
          os << number(r->grid.S(static_cast<int>(i))) << ',' << number(rep.final_slice[i])
             << '\n';
        return;
      }
      nlohmann::json j{{"S_max", r->grid.S_max},
                       {"M", r->grid.M},
                       {"N", r->grid.N},
                       {"T", r->grid.T},
                       {"final_slice", rep.final_slice},
                       {"iterations_per_level", rep.iterations_per_level},
                       {"residual_norms", rep.residual_norms},
                       {"clamp_events", rep.clamp_events},
                       {"diagonally_dominant", rep.diagonally_dominant}};
      if (include_timing) j["wall_time_s"] = rep.wall_time;
      os << j.dump(2) << '\n';
    });
  });
}

nlbs_status nlbs_report_write_iterations(const nlbs_report* r, const char* path) {
  return guarded([&] {
    need(r, "report");
    write_to(path, [&](std::ostream& os) {
      os << "level,iterations\n";
      const auto& its = r->report.iterations_per_level;
      for (std::size_t n = 0; n < its.size(); ++n) os << n + 1 << ',' << its[n] << '\n';
    });
  });
}

void nlbs_report_free(nlbs_report* r) { delete r; }

nlbs_status nlbs_eoc(const nlbs_model* model, const nlbs_market* mkt, const nlbs_ladder* ladder,
                     const nlbs_solver* solver, nlbs_reference reference, nlbs_table** out) {
  return guarded([&] {
    need(model, "model");
    need(mkt, "market");
    need(ladder, "ladder");
    need(out, "output");
    *out = nullptr;
    nlbs_solver s;
    nlbs_solver_defaults(&s);
    if (solver) s = *solver;
    auto table = nlbs::eoc_table(to_cpp(s), to_cpp(*model), to_cpp(*mkt),
                                 to_cpp(*ladder, mkt->maturity),
                                 reference == NLBS_REF_FINEST_SELF
                                     ? nlbs::Reference::FinestSelf
                                     : nlbs::Reference::ClosedFormLinear);
    std::string msg = table.failure ? table.failure->what() : "";
    *out = new nlbs_table{std::move(table), std::move(msg)};
  });
}

nlbs_status nlbs_eotc(const nlbs_model* model, const nlbs_market* mkt, const nlbs_ladder* ladder,
                      const nlbs_solver* solver, int asymptotic, int repetitions,
                      nlbs_table** out) {
  return guarded([&] {
    need(model, "model");
    need(mkt, "market");
    need(ladder, "ladder");
    need(out, "output");
    *out = nullptr;
    nlbs_solver s;
    nlbs_solver_defaults(&s);
    if (solver) s = *solver;
    auto table = nlbs::eotc_table(nlbs::TimedEngine{asymptotic != 0, to_cpp(s)}, to_cpp(*model),
                                  to_cpp(*mkt), to_cpp(*ladder, mkt->maturity), repetitions);
    std::string msg = table.failure ? table.failure->what() : "";
    *out = new nlbs_table{std::move(table), std::move(msg)};
  });
}

size_t nlbs_table_rows(const nlbs_table* t) { return t ? t->table.records.size() : 0; }

nlbs_status nlbs_table_row(const nlbs_table* t, size_t index, nlbs_record* out) {
  return guarded([&] {
    need(t, "table");
    need(out, "output");
    if (index >= t->table.records.size())
      nlbs::fail(nlbs::ErrorCode::InvalidArgument, "table row out of range");
    const auto& r = t->table.records[index];
    *out = {r.grid.dS(),    r.grid.dtau(),  or_nan(r.err_linf), or_nan(r.eoc_linf),
            or_nan(r.err_l2), or_nan(r.eoc_l2), r.wall_time,     or_nan(r.eotc)};
  });
}

nlbs_status nlbs_table_failure(const nlbs_table* t) {
  if (!t || !t->table.failure) return NLBS_OK;
  return status_of(t->table.failure->code());
}

const char* nlbs_table_failure_message(const nlbs_table* t) {
  return t ? t->failure_message.c_str() : "";
}

nlbs_status nlbs_table_write(const nlbs_table* t, nlbs_format format, int include_timing,
                             const char* path) {
  return guarded([&] {
    need(t, "table");
    write_to(path, [&](std::ostream& os) {
      if (format == NLBS_CSV)
        nlbs::write_experiment_csv(os, t->table.records, include_timing != 0);
      else
        os << nlbs::experiment_json(t->table.records, include_timing != 0) << '\n';
    });
  });
}

void nlbs_table_free(nlbs_table* t) { delete t; }

nlbs_status nlbs_compare(const nlbs_market* mkt, double S_max, const int* grid_sizes,
                         size_t n_sizes, const double* params, size_t n_params,
                         nlbs_model_kind family, const nlbs_solver* solver,
                         const nlbs_quadrature* quad, nlbs_sweep** out) {
  return guarded([&] {
    need(mkt, "market");
    need(out, "output");
    *out = nullptr;
    if (n_sizes > 0) need(grid_sizes, "grid sizes");
    if (n_params > 0) need(params, "parameters");
    nlbs_solver s;
    nlbs_solver_defaults(&s);
    if (solver) s = *solver;
    auto rows = nlbs::method_difference_sweep(
        to_cpp(*mkt), S_max, std::span<const int>(grid_sizes, n_sizes),
        std::span<const double>(params, n_params), to_cpp(family), to_cpp(s), to_cpp(quad));
    *out = new nlbs_sweep{std::move(rows)};
  });
}

size_t nlbs_sweep_rows(const nlbs_sweep* s) { return s ? s->rows.size() : 0; }

nlbs_status nlbs_sweep_row_at(const nlbs_sweep* s, size_t index, nlbs_sweep_row* out) {
  return guarded([&] {
    need(s, "sweep");
    need(out, "output");
    if (index >= s->rows.size())
      nlbs::fail(nlbs::ErrorCode::InvalidArgument, "sweep row out of range");
    const auto& r = s->rows[index];
    *out = {r.M, r.N, r.parameter, r.rel_diff_linf};
  });
}

nlbs_status nlbs_sweep_write(const nlbs_sweep* s, nlbs_format format, const char* path) {
  return guarded([&] {
    need(s, "sweep");
    write_to(path, [&](std::ostream& os) {
      if (format == NLBS_CSV)
        nlbs::write_sweep_csv(os, s->rows);
      else
        os << nlbs::sweep_json(s->rows) << '\n';
    });
  });
}

void nlbs_sweep_free(nlbs_sweep* s) { delete s; }

nlbs_status nlbs_calibrate(const nlbs_quote* quote, const nlbs_calibration_options* opts,
                           nlbs_calibration_result* out) {
  return guarded([&] {
    need(quote, "quote");
    need(out, "output");
    nlbs_calibration_options o;
    nlbs_calibration_defaults(&o);
    if (opts) o = *opts;
    const nlbs::QuoteRecord q{quote->tau, quote->S,      quote->bid, quote->ask,
                              quote->strike, quote->r, quote->q};
    *out = to_c(nlbs::calibrate(q, to_cpp(o)));
  });
}

nlbs_status nlbs_calibrate_file(const char* quotes_path, const nlbs_calibration_options* opts,
                                nlbs_series** out) {
  return guarded([&] {
    need(quotes_path, "quote path");
    need(out, "output");
    *out = nullptr;
    nlbs_calibration_options o;
    nlbs_calibration_defaults(&o);
    if (opts) o = *opts;
    auto rows = nlbs::calibrate_series(nlbs::load_quotes(quotes_path), to_cpp(o));
    std::vector<std::string> messages;
    for (const auto& r : rows) messages.emplace_back(r.error ? r.error->what() : "");
    *out = new nlbs_series{std::move(rows), std::move(messages)};
  });
}

size_t nlbs_series_rows(const nlbs_series* s) { return s ? s->rows.size() : 0; }

nlbs_status nlbs_series_row(const nlbs_series* s, size_t index, nlbs_calibration_result* out) {
  if (!s || !out || index >= s->rows.size())
    return set_error(NLBS_INVALID_ARGUMENT, "series row out of range");
  const auto& row = s->rows[index];
  if (row.error) return set_error(status_of(row.error->code()), row.error->what());
  *out = to_c(*row.result);
  return NLBS_OK;
}

const char* nlbs_series_row_message(const nlbs_series* s, size_t index) {
  if (!s || index >= s->messages.size()) return "";
  return s->messages[index].c_str();
}

nlbs_status nlbs_series_write(const nlbs_series* s, nlbs_format format, const char* path) {
  return guarded([&] {
    need(s, "series");
    write_to(path, [&](std::ostream& os) {
      if (format == NLBS_CSV)
        nlbs::write_calibration_csv(os, s->rows);
      else
        os << nlbs::calibration_json(s->rows) << '\n';
    });
  });
}

void nlbs_series_free(nlbs_series* s) { delete s; }

}  // extern "C"
