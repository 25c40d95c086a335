#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlbs/asymptotic.hpp"
#include "nlbs/errors.hpp"
#include "nlbs/fd_engine.hpp"

namespace nlbs {

enum class NormKind { Linf, L2 };

/// How a ladder shrinks the time step alongside dS -> ratio * dS.
enum class LadderConstraint {
  DiffusiveRatio,  ///< (dS)^2 / dtau fixed: dtau -> ratio^2 * dtau
  LinearRatio,     ///< dS / dtau fixed: dtau -> ratio * dtau
};

struct RefinementLadder {
  SolveGrid base;
  int levels = 4;
  double space_ratio = 0.5;
  LadderConstraint constraint = LadderConstraint::DiffusiveRatio;

  SolveGrid grid_at(int level) const;
  void validate() const;
};

struct ExperimentRecord {
  SolveGrid grid;
  std::optional<double> err_linf;
  std::optional<double> err_l2;
  std::optional<double> eoc_linf;
  std::optional<double> eoc_l2;
  double wall_time = 0.0;
  std::optional<double> eotc;
};

/// Records produced before a failure are kept; `failure` holds the error that
/// stopped the run.
struct ExperimentTable {
  std::vector<ExperimentRecord> records;
  std::optional<Error> failure;
};

enum class Reference { ClosedFormLinear, FinestSelf };

/// Which pricer an EOTC ladder times.
struct TimedEngine {
  bool asymptotic = false;
  SolverConfig solver;
};

struct SweepRow {
  int M = 0;
  int N = 0;
  double parameter = 0.0;
  double rel_diff_linf = 0.0;
};

/// Relative error ||V - V_ref|| / ||V_ref|| over nodes with 0.5E <= S_i <= 1.5E.
/// L2 uses trapezoid weights over the restricted window.
double error_norm(std::span<const double> V, std::span<const double> V_ref, const SolveGrid& grid,
                  const MarketParams& mkt, NormKind norm);

double eoc(double err_prev, double err_next, double dS_prev, double dS_next);
double eotc(double time_prev, double time_next, double dtau_prev, double dtau_next);

/// Fills eoc_* and eotc from the stored errors, times and grids.
void recompute_rates(std::vector<ExperimentRecord>& records);

/// Closed-form linear price on every grid node at tau = T.
std::vector<double> closed_form_slice(const MarketParams& mkt, const SolveGrid& grid);

/// Asymptotic price on nodes S_i > 0 (S_0 keeps its boundary value).
std::vector<double> asymptotic_slice(const ModelSpec& model, const MarketParams& mkt,
                                     const SolveGrid& grid, const QuadratureConfig& cfg = {},
                                     bool window_only = false);

/// FinestSelf solves a reference `reference_extra_levels` beyond the last
/// ladder level and samples it onto each coarser grid.
ExperimentTable eoc_table(const SolverConfig& solver, const ModelSpec& model,
                          const MarketParams& mkt, const RefinementLadder& ladder,
                          Reference reference, int reference_extra_levels = 2);

/// Wall time per level is the median of `repetitions` runs after one warm-up.
/// Levels run strictly one after another.
ExperimentTable eotc_table(const TimedEngine& engine, const ModelSpec& model,
                           const MarketParams& mkt, const RefinementLadder& ladder,
                           int repetitions = 3);

/// Relative sup-norm gap between a Newton solve and the asymptotic formula on
/// [0.5E, 1.5E], one row per (grid size, parameter). Grid sizes are M = N.
std::vector<SweepRow> method_difference_sweep(const MarketParams& mkt, double S_max,
                                              std::span<const int> grid_sizes,
                                              std::span<const double> param_values,
                                              ModelKind family, const SolverConfig& solver,
                                              const QuadratureConfig& quad = {});

inline constexpr const char* kExperimentCsvHeader =
    "grid_dS,grid_dtau,err_linf,eoc_linf,err_l2,eoc_l2,wall_time_s,eotc";

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRecord>& records,
                          bool include_timing = true);
std::string experiment_json(const std::vector<ExperimentRecord>& records,
                            bool include_timing = true);
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::string sweep_json(const std::vector<SweepRow>& rows);

}  // namespace nlbs
