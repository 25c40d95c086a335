#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nlbs/models.hpp"
#include "nlbs/tridiagonal.hpp"

namespace nlbs {

/// Uniform grid S_i = i * dS (i = 0..M-1) and tau_n = n * dtau (n = 0..N-1).
struct SolveGrid {
  double S_max = 300.0;
  int M = 200;
  int N = 200;
  double T = 1.0 / 12.0;

  static SolveGrid make(double S_max, int M, int N, double T);
  double dS() const { return S_max / (M - 1); }
  double dtau() const { return T / (N - 1); }
  double S(int i) const { return i * dS(); }
  void validate() const;
};

enum class Method { Frozen, NM1, NM2 };
enum class DerivativeMode { Analytic, FiniteDifference };

struct SolverConfig {
  Method method = Method::NM1;
  DerivativeMode derivative_mode = DerivativeMode::Analytic;
  double tol = 1e-8;
  int max_iter = 100;
  double first_level_guess = 1.0;
  bool keep_surface = false;

  void validate() const;
};

/// Implicit-scheme matrices for one iterate: H = Diag(sigma^2) H1 + H2, with
/// identity rows at both Dirichlet boundaries.
struct Assembly {
  Tridiagonal H;
  std::vector<double> sigma2;
  Tridiagonal H1;
  Tridiagonal H2;
};

struct SolveReport {
  std::vector<double> final_slice;
  std::optional<std::vector<std::vector<double>>> full_surface;
  std::vector<int> iterations_per_level;
  std::vector<std::vector<double>> residual_norms;
  double wall_time = 0.0;
  std::size_t clamp_events = 0;
  bool diagonally_dominant = true;
};

struct StepResult {
  std::vector<double> V;
  int iterations = 0;
  std::vector<double> residuals;
};

/// Dirichlet values (V(0, tau), V(S_max, tau)).
std::pair<double, double> boundary_values(const MarketParams& mkt, const SolveGrid& grid,
                                          double tau);
std::vector<double> payoff(const MarketParams& mkt, const SolveGrid& grid);

Assembly assemble(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                  std::span<const double> V, ClampTally* tally = nullptr);

/// G(V) = H(V) V - b, where b is V_prev with its boundary entries replaced by
/// the Dirichlet values at tau.
std::vector<double> residual(const ModelSpec& model, const MarketParams& mkt,
                             const SolveGrid& grid, std::span<const double> V,
                             std::span<const double> V_prev, double tau,
                             ClampTally* tally = nullptr);

/// dG/dV. Analytic: H + Diag(H1 V) grad(Sigma). FiniteDifference: central
/// differences of each row residual in its three stencil entries.
Tridiagonal jacobian(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                     std::span<const double> V, DerivativeMode mode);

StepResult step_nm1(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                    const SolverConfig& cfg, std::span<const double> V_prev,
                    std::span<const double> V_guess, double tau, ClampTally* tally = nullptr);
StepResult step_nm2(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                    const SolverConfig& cfg, std::span<const double> V_prev,
                    std::span<const double> V_guess, double tau, ClampTally* tally = nullptr);
StepResult step_frozen(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                       const SolverConfig& cfg, std::span<const double> V_prev,
                       std::span<const double> V_guess, double tau, ClampTally* tally = nullptr);

/// Marches the implicit scheme from the pay-off at tau = 0 to tau = T.
SolveReport solve(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                  const SolverConfig& cfg);

/// Cubic Lagrange interpolation of a grid slice at S.
double interpolate_slice(const SolveGrid& grid, std::span<const double> slice, double S);

}  // namespace nlbs
