#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nlbs/nlbs.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(nlbs_status s) {
  switch (s) {
    case NLBS_OK:
      return 0;
    case NLBS_QUADRATURE_DIVERGED:
    case NLBS_NO_IMPLIED_VOL:
    case NLBS_SINGULAR_TRIDIAGONAL:
    case NLBS_NON_CONVERGENCE:
    case NLBS_BRACKET_FAIL:
    case NLBS_NON_MONOTONE_PRICE:
    case NLBS_INTERNAL:
      return kExitNumerical;
    default:
      return kExitInput;
  }
}

int report(nlbs_status s) {
  if (s != NLBS_OK) std::fprintf(stderr, "nlbs: %s: %s\n", nlbs_status_name(s), nlbs_last_error());
  return exit_code_for(s);
}

struct Options {
  nlbs_market market{};
  nlbs_model model{};
  nlbs_grid grid{};
  nlbs_solver solver{};
  nlbs_quadrature quad{};
  std::string option_kind = "call";
  std::string model_name = "frey-patie";
  double rho = 0.0;
  double mu = 0.0;
  std::string method = "nm1";
  std::string derivative = "analytic";
  std::string output_dir = "results";
  std::string format = "csv";
  bool no_timing = false;

  double S = 100.0;
  double tau = -1.0;

  std::vector<int> grid_sizes{50, 100, 200};
  std::vector<double> params{0.001, 0.005, 0.01, 0.02};

  int levels = 4;
  double space_ratio = 0.5;
  std::string constraint;
  std::string reference;
  std::string engine = "newton";
  std::string calib_engine = "asym";
  nlbs_grid ladder_base{300.0, 11, 11};
  int repetitions = 3;

  std::string quotes;
  std::string anchor = "bid";
  nlbs_calibration_options calib{};
};

const std::map<std::string, nlbs_model_kind> kModels{
    {"linear", NLBS_LINEAR}, {"frey-patie", NLBS_FREY_PATIE}, {"rapm", NLBS_RAPM}};
const std::map<std::string, nlbs_method> kMethods{
    {"frozen", NLBS_FROZEN}, {"nm1", NLBS_NM1}, {"nm2", NLBS_NM2}};
const std::map<std::string, nlbs_derivative_mode> kDerivatives{
    {"analytic", NLBS_ANALYTIC}, {"fd", NLBS_FINITE_DIFFERENCE}};

void add_market(CLI::App* app, Options& o) {
  app->add_option("--sigma", o.market.sigma_tilde, "base volatility")->capture_default_str();
  app->add_option("--E,--strike", o.market.strike, "strike")->capture_default_str();
  app->add_option("--r,--rate", o.market.r, "risk-free rate")->capture_default_str();
  app->add_option("--q,--dividend", o.market.q, "dividend yield")->capture_default_str();
  app->add_option("--T,--maturity", o.market.maturity, "maturity in years")->capture_default_str();
  app->add_option("--option", o.option_kind, "call or put")
      ->check(CLI::IsMember({"call", "put"}))
      ->capture_default_str();
}

void add_model(CLI::App* app, Options& o) {
  app->add_option("--model", o.model_name, "linear, frey-patie or rapm")
      ->check(CLI::IsMember({"linear", "frey-patie", "rapm"}))
      ->capture_default_str();
  app->add_option("--rho", o.rho, "Frey-Patie liquidity parameter")->capture_default_str();
  app->add_option("--mu", o.mu, "RAPM risk parameter")->capture_default_str();
  app->add_option("--clamp-floor", o.model.clamp_floor, "Frey-Patie denominator floor")
      ->capture_default_str();
}

void add_solver(CLI::App* app, Options& o) {
  app->add_option("--method", o.method, "frozen, nm1 or nm2")
      ->check(CLI::IsMember({"frozen", "nm1", "nm2"}))
      ->capture_default_str();
  app->add_option("--derivative", o.derivative, "analytic or fd")
      ->check(CLI::IsMember({"analytic", "fd"}))
      ->capture_default_str();
  app->add_option("--tol", o.solver.tol, "Newton tolerance")->capture_default_str();
  app->add_option("--max-iter", o.solver.max_iter, "iterations per level")->capture_default_str();
  app->add_option("--first-guess", o.solver.first_level_guess, "constant first-level iterate")
      ->capture_default_str();
}

void add_grid(CLI::App* app, nlbs_grid& grid, int M, int N) {
  grid.M = M;
  grid.N = N;
  app->add_option("--s-max", grid.S_max, "upper end of the price grid")->capture_default_str();
  app->add_option("--M", grid.M, "spatial points")->capture_default_str();
  app->add_option("--N", grid.N, "time levels")->capture_default_str();
}

void add_quad(CLI::App* app, Options& o) {
  app->add_option("--quad-abs-tol", o.quad.abs_tol, "quadrature absolute tolerance")
      ->capture_default_str();
  app->add_option("--quad-rel-tol", o.quad.rel_tol, "quadrature relative tolerance")
      ->capture_default_str();
  app->add_option("--quad-max-subdivisions", o.quad.max_subdivisions)->capture_default_str();
}

void add_output(CLI::App* app, Options& o) {
  app->add_option("--output-dir", o.output_dir, "directory for result files")
      ->capture_default_str();
  app->add_option("--format", o.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app->add_flag("--no-timing", o.no_timing, "leave wall-clock fields empty");
}

void finalize(Options& o) {
  o.market.kind = o.option_kind == "put" ? NLBS_PUT : NLBS_CALL;
  o.model.kind = kModels.at(o.model_name);
  o.model.parameter = o.model.kind == NLBS_RAPM ? o.mu : o.rho;
  o.solver.method = kMethods.at(o.method);
  o.solver.derivative_mode = kDerivatives.at(o.derivative);
}

nlbs_format format_of(const Options& o) { return o.format == "json" ? NLBS_JSON : NLBS_CSV; }

std::string out_path(const Options& o, const std::string& stem, const std::string& ext = "") {
  fs::create_directories(o.output_dir);
  return (fs::path(o.output_dir) / (stem + "." + (ext.empty() ? o.format : ext))).string();
}

int run_price(Options& o) {
  const double tau = o.tau < 0.0 ? o.market.maturity : o.tau;
  double price = 0.0;
  if (const auto s = nlbs_price_asymptotic(&o.model, &o.market, o.S, tau, &o.quad, &price); s)
    return report(s);
  double linear = 0.0;
  if (const auto s = nlbs_price_bs(&o.market, o.S, tau, &linear); s) return report(s);
  std::printf("%.17g\n", price);

  const auto path = out_path(o, "price", "json");
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) {
    std::fprintf(stderr, "nlbs: Io: cannot open '%s' for writing\n", path.c_str());
    return kExitInput;
  }
  std::fprintf(f,
               "{\n  \"model\": \"%s\",\n  \"parameter\": %.17g,\n  \"S\": %.17g,\n"
               "  \"tau\": %.17g,\n  \"price\": %.17g,\n  \"linear_price\": %.17g\n}\n",
               o.model_name.c_str(), o.model.parameter, o.S, tau, price, linear);
  std::fclose(f);
  return 0;
}

int run_solve(Options& o) {
  nlbs_report* rep = nullptr;
  if (const auto s = nlbs_solve(&o.model, &o.market, &o.grid, &o.solver, &rep); s)
    return report(s);
  auto s = nlbs_report_write(rep, format_of(o), !o.no_timing, out_path(o, "solve").c_str());
  if (s == NLBS_OK && format_of(o) == NLBS_CSV)
    s = nlbs_report_write_iterations(rep, out_path(o, "solve_iterations", "csv").c_str());
  if (s == NLBS_OK) {
    double at_strike = 0.0;
    nlbs_report_price_at(rep, o.market.strike, &at_strike);
    std::printf("price at strike %.10g, levels %zu, clamp events %zu\n", at_strike,
                nlbs_report_levels(rep), nlbs_report_clamp_events(rep));
  }
  nlbs_report_free(rep);
  return report(s);
}

int run_compare(Options& o) {
  nlbs_sweep* sweep = nullptr;
  if (const auto s = nlbs_compare(&o.market, o.grid.S_max, o.grid_sizes.data(),
                                  o.grid_sizes.size(), o.params.data(), o.params.size(),
                                  o.model.kind, &o.solver, &o.quad, &sweep);
      s)
    return report(s);
  auto s = nlbs_sweep_write(sweep, format_of(o), out_path(o, "compare").c_str());
  if (s == NLBS_OK) s = nlbs_sweep_write(sweep, NLBS_CSV, "-");
  nlbs_sweep_free(sweep);
  return report(s);
}

nlbs_ladder ladder_of(const Options& o, nlbs_ladder_constraint fallback) {
  nlbs_ladder l;
  l.base = o.ladder_base;
  l.levels = o.levels;
  l.space_ratio = o.space_ratio;
  l.constraint = o.constraint.empty() ? fallback
                 : o.constraint == "linear" ? NLBS_LINEAR_RATIO
                                            : NLBS_DIFFUSIVE_RATIO;
  return l;
}

int finish_table(const Options& o, nlbs_table* table, const std::string& stem) {
  auto s = nlbs_table_write(table, format_of(o), !o.no_timing, out_path(o, stem).c_str());
  if (s == NLBS_OK) s = nlbs_table_write(table, NLBS_CSV, !o.no_timing, "-");
  const auto failure = nlbs_table_failure(table);
  if (s == NLBS_OK && failure != NLBS_OK) {
    std::fprintf(stderr, "nlbs: %s: %s\n", nlbs_status_name(failure),
                 nlbs_table_failure_message(table));
    nlbs_table_free(table);
    return exit_code_for(failure);
  }
  nlbs_table_free(table);
  return report(s);
}

int run_eoc(Options& o) {
  const auto ladder = ladder_of(o, NLBS_DIFFUSIVE_RATIO);
  nlbs_reference ref = o.model.kind == NLBS_LINEAR || o.model.parameter == 0.0
                           ? NLBS_REF_CLOSED_FORM
                           : NLBS_REF_FINEST_SELF;
  if (o.reference == "closed-form") ref = NLBS_REF_CLOSED_FORM;
  if (o.reference == "finest-self") ref = NLBS_REF_FINEST_SELF;
  nlbs_table* table = nullptr;
  if (const auto s = nlbs_eoc(&o.model, &o.market, &ladder, &o.solver, ref, &table); s)
    return report(s);
  return finish_table(o, table, "eoc");
}

int run_eotc(Options& o) {
  const auto ladder = ladder_of(o, NLBS_LINEAR_RATIO);
  nlbs_table* table = nullptr;
  if (const auto s = nlbs_eotc(&o.model, &o.market, &ladder, &o.solver, o.engine == "asym",
                               o.repetitions, &table);
      s)
    return report(s);
  return finish_table(o, table, "eotc");
}

int run_calibrate(Options& o) {
  o.calib.engine = o.calib_engine == "asym" ? NLBS_ENGINE_ASYM : NLBS_ENGINE_NEWTON;
  o.calib.anchor = o.anchor == "mid" ? NLBS_MID_ANCHORED : NLBS_BID_ANCHORED;
  o.calib.solver = o.solver;
  o.calib.quad = o.quad;
  nlbs_series* series = nullptr;
  if (const auto s = nlbs_calibrate_file(o.quotes.c_str(), &o.calib, &series); s)
    return report(s);
  auto s = nlbs_series_write(series, format_of(o), out_path(o, "calibrate").c_str());
  if (s == NLBS_OK) s = nlbs_series_write(series, NLBS_CSV, "-");
  int code = report(s);
  for (std::size_t i = 0; i < nlbs_series_rows(series); ++i) {
    nlbs_calibration_result r;
    const auto row = nlbs_series_row(series, i, &r);
    if (row != NLBS_OK) {
      std::fprintf(stderr, "nlbs: row %zu: %s: %s\n", i + 1, nlbs_status_name(row),
                   nlbs_series_row_message(series, i));
      if (code == 0) code = exit_code_for(row);
    }
  }
  nlbs_series_free(series);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  nlbs_market_defaults(&o.market);
  nlbs_model_defaults(&o.model);
  nlbs_grid_defaults(&o.grid);
  nlbs_solver_defaults(&o.solver);
  nlbs_quadrature_defaults(&o.quad);
  nlbs_calibration_defaults(&o.calib);

  CLI::App app{"Option pricing under nonlinear Black-Scholes models"};
  app.require_subcommand(1);

  auto* price = app.add_subcommand("price", "asymptotic price at one point");
  add_market(price, o);
  add_model(price, o);
  add_quad(price, o);
  add_output(price, o);
  price->add_option("--S", o.S, "underlying price")->capture_default_str();
  price->add_option("--tau", o.tau, "time to maturity (default: maturity)");

  auto* solve = app.add_subcommand("solve", "finite-difference solve over the full grid");
  add_market(solve, o);
  add_model(solve, o);
  add_solver(solve, o);
  add_grid(solve, o.grid, 200, 200);
  add_output(solve, o);

  auto* compare = app.add_subcommand("compare", "asymptotic vs Newton gap over grids and parameters");
  add_market(compare, o);
  add_model(compare, o);
  add_solver(compare, o);
  add_quad(compare, o);
  add_output(compare, o);
  compare->add_option("--s-max", o.grid.S_max, "upper end of the price grid")->capture_default_str();
  compare->add_option("--grid-sizes", o.grid_sizes, "M = N values")->delimiter(',')
      ->capture_default_str();
  compare->add_option("--params", o.params, "model parameter values")->delimiter(',')
      ->capture_default_str();

  auto* eoc = app.add_subcommand("eoc", "convergence order over a refinement ladder");
  add_market(eoc, o);
  add_model(eoc, o);
  add_solver(eoc, o);
  add_output(eoc, o);
  eoc->add_option("--levels", o.levels)->capture_default_str();
  eoc->add_option("--ratio", o.space_ratio, "dS ratio between levels")->capture_default_str();
  eoc->add_option("--constraint", o.constraint, "diffusive or linear")
      ->check(CLI::IsMember({"diffusive", "linear"}));
  eoc->add_option("--reference", o.reference, "closed-form or finest-self")
      ->check(CLI::IsMember({"closed-form", "finest-self"}));

  auto* eotc = app.add_subcommand("eotc", "time-convergence order over a refinement ladder");
  add_market(eotc, o);
  add_model(eotc, o);
  add_solver(eotc, o);
  add_output(eotc, o);
  eotc->add_option("--levels", o.levels)->capture_default_str();
  eotc->add_option("--ratio", o.space_ratio, "dS ratio between levels")->capture_default_str();
  eotc->add_option("--constraint", o.constraint, "diffusive or linear")
      ->check(CLI::IsMember({"diffusive", "linear"}));
  eotc->add_option("--repetitions", o.repetitions, "timed runs per level")->capture_default_str();

  auto* calibrate = app.add_subcommand("calibrate", "fit rho to each row of a quote file");
  add_solver(calibrate, o);
  add_quad(calibrate, o);
  add_output(calibrate, o);
  calibrate->add_option("--quotes", o.quotes, "CSV with tau,S,bid,ask,strike,r,q")->required();
  calibrate->add_option("--anchor", o.anchor, "bid or mid")
      ->check(CLI::IsMember({"bid", "mid"}))
      ->capture_default_str();
  calibrate->add_option("--bracket-hi", o.calib.bracket_hi)->capture_default_str();
  calibrate->add_option("--price-tol", o.calib.price_tol)->capture_default_str();
  calibrate->add_option("--newton-M", o.calib.newton_M)->capture_default_str();
  calibrate->add_option("--newton-N", o.calib.newton_N)->capture_default_str();

  // the grid flags of eoc and eotc describe the ladder's first level
  nlbs_grid eotc_base{300.0, 41, 41};
  add_grid(eoc, o.ladder_base, 11, 11);
  add_grid(eotc, eotc_base, 41, 41);
  eotc->add_option("--engine", o.engine, "asym or newton")
      ->check(CLI::IsMember({"asym", "newton"}))
      ->capture_default_str();
  calibrate->add_option("--engine", o.calib_engine, "asym or newton")
      ->check(CLI::IsMember({"asym", "newton"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "nlbs: %s\n", e.what());
    return kExitInput;
  }
  finalize(o);

  try {
    if (*price) return run_price(o);
    if (*solve) return run_solve(o);
    if (*compare) return run_compare(o);
    if (*eoc) return run_eoc(o);
    if (*eotc) {
      o.ladder_base = eotc_base;
      return run_eotc(o);
    }
    if (*calibrate) return run_calibrate(o);
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "nlbs: Io: %s\n", e.what());
    return kExitInput;
  }
  return kExitInput;
}
