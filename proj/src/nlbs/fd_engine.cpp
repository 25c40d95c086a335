#include "nlbs/fd_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "nlbs/errors.hpp"

namespace nlbs {
namespace {

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Per-row constants of the scheme: a = dtau S^2 / (2 dS^2), b = dtau (r-q) S / (2 dS).
struct RowCoeffs {
  double S, a, b, rdt;
};

RowCoeffs row_coeffs(const MarketParams& mkt, const SolveGrid& grid, int i) {
  const double S = grid.S(i);
  const double dS = grid.dS();
  const double dt = grid.dtau();
  return {S, dt * S * S / (2.0 * dS * dS), dt * (mkt.r - mkt.q) * S / (2.0 * dS), mkt.r * dt};
}

double row_gamma(const SolveGrid& grid, double S, double vm, double v0, double vp) {
  const double dS = grid.dS();
  return S * (vp - 2.0 * v0 + vm) / (dS * dS);
}

// (H(V) V)_i for an interior row, as a function of the three stencil values only.
double row_apply(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                 const RowCoeffs& c, double vm, double v0, double vp, ClampTally* tally) {
  const double s2 = sigma_squared(model, mkt, c.S, row_gamma(grid, c.S, vm, v0, vp), tally);
  return (-s2 * c.a + c.b) * vm + (1.0 + 2.0 * s2 * c.a + c.rdt) * v0 + (-s2 * c.a - c.b) * vp;
}

std::vector<double> dirichlet_rhs(const MarketParams& mkt, const SolveGrid& grid,
                                  std::span<const double> V_prev, double tau) {
  std::vector<double> b(V_prev.begin(), V_prev.end());
  const auto [lo, hi] = boundary_values(mkt, grid, tau);
  b.front() = lo;
  b.back() = hi;
  return b;
}

void check_lengths(const SolveGrid& grid, std::span<const double> a, std::span<const double> b) {
  require(static_cast<int>(a.size()) == grid.M && static_cast<int>(b.size()) == grid.M,
          "slice length must equal the number of spatial nodes");
}

// Full Newton step unless it fails to lower ||G||; then halve it. Across the
// Frey-Patie clamp the Jacobian jumps and undamped steps can cycle.
std::vector<double> damped_update(const ModelSpec& model, const MarketParams& mkt,
                                  const SolveGrid& grid, std::span<const double> V_prev,
                                  double tau, const std::vector<double>& V,
                                  const std::vector<double>& dV, double sign, double norm) {
  std::vector<double> trial(V.size());
  double lambda = 1.0;
  for (int halving = 0;; ++halving) {
    for (std::size_t i = 0; i < V.size(); ++i) trial[i] = V[i] + sign * lambda * dV[i];
    if (halving == 30) return trial;
    const double next = sup_norm(residual(model, mkt, grid, trial, V_prev, tau));
    if (next < (1.0 - 1e-4 * lambda) * norm) return trial;
    lambda *= 0.5;
  }
}

[[noreturn]] void non_convergence(const char* method, double last) {
  fail(ErrorCode::NonConvergence,
       std::string(method) + " exceeded max_iter; last norm " + std::to_string(last), last);
}

}  // namespace

SolveGrid SolveGrid::make(double S_max, int M, int N, double T) {
  SolveGrid g{S_max, M, N, T};
  g.validate();
  return g;
}

void SolveGrid::validate() const {
  require(M >= 3, "grid needs at least 3 spatial nodes");
  require(N >= 2, "grid needs at least 2 time levels");
  require(S_max > 0.0 && std::isfinite(S_max), "S_max must be positive");
  require(T > 0.0 && std::isfinite(T), "grid horizon must be positive");
}

void SolverConfig::validate() const {
  require(tol > 0.0, "tolerance must be positive");
  require(max_iter >= 1, "max_iter must be at least 1");
}

std::pair<double, double> boundary_values(const MarketParams& mkt, const SolveGrid& grid,
                                          double tau) {
  const double pv_strike = mkt.strike * std::exp(-mkt.r * tau);
  if (mkt.kind == OptionKind::Call) return {0.0, grid.S_max - pv_strike};
  return {pv_strike, 0.0};
}

std::vector<double> payoff(const MarketParams& mkt, const SolveGrid& grid) {
  std::vector<double> v(grid.M);
  for (int i = 0; i < grid.M; ++i) {
    const double S = grid.S(i);
    v[i] = mkt.kind == OptionKind::Call ? std::max(S - mkt.strike, 0.0)
                                        : std::max(mkt.strike - S, 0.0);
  }
  return v;
}

Assembly assemble(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                  std::span<const double> V, ClampTally* tally) {
  require(static_cast<int>(V.size()) == grid.M, "slice length must equal the number of nodes");
  const auto n = static_cast<std::size_t>(grid.M);
  Assembly out{Tridiagonal(n), std::vector<double>(n, 0.0), Tridiagonal(n), Tridiagonal(n)};
  for (int i = 1; i + 1 < grid.M; ++i) {
    const auto c = row_coeffs(mkt, grid, i);
    const double s2 =
        sigma_squared(model, mkt, c.S, row_gamma(grid, c.S, V[i - 1], V[i], V[i + 1]), tally);
    out.sigma2[i] = s2;
    out.H1.lower[i] = -c.a;
    out.H1.diag[i] = 2.0 * c.a;
    out.H1.upper[i] = -c.a;
    out.H2.lower[i] = c.b;
    out.H2.diag[i] = 1.0 + c.rdt;
    out.H2.upper[i] = -c.b;
    out.H.lower[i] = s2 * out.H1.lower[i] + out.H2.lower[i];
    out.H.diag[i] = s2 * out.H1.diag[i] + out.H2.diag[i];
    out.H.upper[i] = s2 * out.H1.upper[i] + out.H2.upper[i];
  }
  for (auto* T : {&out.H, &out.H1, &out.H2}) {
    T->set_identity_row(0);
    T->set_identity_row(n - 1);
  }
  // boundary rows carry no diffusion
  out.H1.diag[0] = out.H1.diag[n - 1] = 0.0;
  out.sigma2[0] = sigma_squared(model, mkt, 0.0, 0.0);
  out.sigma2[n - 1] = out.sigma2[0];
  return out;
}

std::vector<double> residual(const ModelSpec& model, const MarketParams& mkt,
                             const SolveGrid& grid, std::span<const double> V,
                             std::span<const double> V_prev, double tau, ClampTally* tally) {
  check_lengths(grid, V, V_prev);
  const auto b = dirichlet_rhs(mkt, grid, V_prev, tau);
  std::vector<double> G(V.size());
  G.front() = V.front() - b.front();
  G.back() = V.back() - b.back();
  for (int i = 1; i + 1 < grid.M; ++i) {
    const auto c = row_coeffs(mkt, grid, i);
    G[i] = row_apply(model, mkt, grid, c, V[i - 1], V[i], V[i + 1], tally) - b[i];
  }
  return G;
}

Tridiagonal jacobian(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                     std::span<const double> V, DerivativeMode mode) {
  const auto n = static_cast<std::size_t>(grid.M);
  require(V.size() == n, "slice length must equal the number of nodes");
  if (mode == DerivativeMode::Analytic) {
    auto asm_ = assemble(model, mkt, grid, V);
    Tridiagonal J = std::move(asm_.H);
    const auto H1V = asm_.H1.apply(V);
    for (int i = 1; i + 1 < grid.M; ++i) {
      const auto g = grad_sigma_squared(model, mkt, grid.S(i), V[i - 1], V[i], V[i + 1], grid.dS());
      J.lower[i] += H1V[i] * g[0];
      J.diag[i] += H1V[i] * g[1];
      J.upper[i] += H1V[i] * g[2];
    }
    return J;
  }

  Tridiagonal J(n);
  J.set_identity_row(0);
  J.set_identity_row(n - 1);
  for (int i = 1; i + 1 < grid.M; ++i) {
    const auto c = row_coeffs(mkt, grid, i);
    double v[3] = {V[i - 1], V[i], V[i + 1]};
    double d[3];
    for (int j = 0; j < 3; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(v[j]));
      const double keep = v[j];
      auto at = [&](double shift) {
        v[j] = keep + shift;
        return row_apply(model, mkt, grid, c, v[0], v[1], v[2], nullptr);
      };
      // fourth-order central difference: near S_max the step is a few percent
      // of S V_SS, and the RAPM cube root makes second order too coarse there
      d[j] = (8.0 * (at(h) - at(-h)) - (at(2.0 * h) - at(-2.0 * h))) / (12.0 * h);
      v[j] = keep;
    }
    J.lower[i] = d[0];
    J.diag[i] = d[1];
    J.upper[i] = d[2];
  }
  return J;
}

StepResult step_nm1(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                    const SolverConfig& cfg, std::span<const double> V_prev,
                    std::span<const double> V_guess, double tau, ClampTally* tally) {
  check_lengths(grid, V_prev, V_guess);
  StepResult out{{V_guess.begin(), V_guess.end()}, 0, {}};
  for (int k = 0;; ++k) {
    const auto G = residual(model, mkt, grid, out.V, V_prev, tau, tally);
    const double norm = sup_norm(G);
    out.residuals.push_back(norm);
    if (norm <= cfg.tol) {
      out.iterations = k;
      return out;
    }
    if (k == cfg.max_iter || !std::isfinite(norm)) non_convergence("NM1", norm);
    const auto J = jacobian(model, mkt, grid, out.V, cfg.derivative_mode);
    const auto dV = thomas_solve(J, G);
    out.V = damped_update(model, mkt, grid, V_prev, tau, out.V, dV, -1.0, norm);
  }
}

StepResult step_nm2(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                    const SolverConfig& cfg, std::span<const double> V_prev,
                    std::span<const double> V_guess, double tau, ClampTally* tally) {
  check_lengths(grid, V_prev, V_guess);
  StepResult out{{V_guess.begin(), V_guess.end()}, 0, {}};
  // corrections vanish on the boundary, so start from a boundary-consistent iterate
  const auto [lo, hi] = boundary_values(mkt, grid, tau);
  out.V.front() = lo;
  out.V.back() = hi;

  const auto n = static_cast<std::size_t>(grid.M);
  const double dS = grid.dS();
  const double dt = grid.dtau();
  for (int k = 1; k <= cfg.max_iter; ++k) {
    // dtau * F(V*) on interior rows, zero on the boundary
    auto rhs = residual(model, mkt, grid, out.V, V_prev, tau, tally);
    const double g_norm = sup_norm(rhs);
    rhs.front() = rhs.back() = 0.0;
    for (double& x : rhs) x = -x;

    Tridiagonal Hs(n);
    Hs.set_identity_row(0);
    Hs.set_identity_row(n - 1);
    const auto& V = out.V;
    for (int i = 1; i + 1 < grid.M; ++i) {
      const double S = grid.S(i);
      const double vss = (V[i + 1] - 2.0 * V[i] + V[i - 1]) / (dS * dS);
      // F = V_tau - 1/2 sigma^2(S V_SS) S^2 V_SS - (r-q) S V_S + r V
      auto diffusion = [&](double x) { return -0.5 * sigma_squared(model, mkt, S, S * x) * S * S * x; };
      double F_ss;
      if (cfg.derivative_mode == DerivativeMode::Analytic) {
        const double s2 = sigma_squared(model, mkt, S, S * vss);
        F_ss = -0.5 * S * S * (s2 + vss * S * dsigma_squared_dgamma(model, mkt, S * vss));
      } else {
        const double h = 1e-6 * std::max(1.0, std::abs(vss));
        F_ss = (diffusion(vss + h) - diffusion(vss - h)) / (2.0 * h);
      }
      const double F_s = -(mkt.r - mkt.q) * S;
      const double F_v = mkt.r;
      Hs.lower[i] = dt * (F_ss / (dS * dS) - F_s / (2.0 * dS));
      Hs.diag[i] = 1.0 + dt * (-2.0 * F_ss / (dS * dS) + F_v);
      Hs.upper[i] = dt * (F_ss / (dS * dS) + F_s / (2.0 * dS));
    }
    const auto v = thomas_solve(Hs, rhs);
    out.V = damped_update(model, mkt, grid, V_prev, tau, out.V, v, 1.0, g_norm);
    const double norm = sup_norm(v);
    out.residuals.push_back(norm);
    if (!std::isfinite(norm)) break;
    if (norm <= cfg.tol) {
      out.iterations = k;
      return out;
    }
  }
  non_convergence("NM2", out.residuals.empty() ? 0.0 : out.residuals.back());
}

StepResult step_frozen(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                       const SolverConfig& cfg, std::span<const double> V_prev,
                       std::span<const double> V_guess, double tau, ClampTally* tally) {
  check_lengths(grid, V_prev, V_guess);
  StepResult out{{V_guess.begin(), V_guess.end()}, 0, {}};
  const auto b = dirichlet_rhs(mkt, grid, V_prev, tau);
  for (int k = 1; k <= cfg.max_iter; ++k) {
    const auto asm_ = assemble(model, mkt, grid, out.V, tally);
    auto next = thomas_solve(asm_.H, b);
    double step = 0.0;
    for (std::size_t i = 0; i < next.size(); ++i) step = std::max(step, std::abs(next[i] - out.V[i]));
    out.V = std::move(next);
    out.residuals.push_back(step);
    if (!std::isfinite(step)) break;
    // a fixed point of the frozen map is a root of G; accept either test
    if (step <= cfg.tol || sup_norm(residual(model, mkt, grid, out.V, V_prev, tau)) <= cfg.tol) {
      out.iterations = k;
      return out;
    }
  }
  non_convergence("Frozen", out.residuals.empty() ? 0.0 : out.residuals.back());
}

SolveReport solve(const ModelSpec& model, const MarketParams& mkt, const SolveGrid& grid,
                  const SolverConfig& cfg) {
  model.validate();
  mkt.validate();
  grid.validate();
  cfg.validate();
  require(std::abs(grid.T - mkt.maturity) <= 1e-12 * mkt.maturity,
          "grid horizon must equal the option maturity");

  const auto start = std::chrono::steady_clock::now();
  SolveReport report;
  ClampTally tally;
  auto V = payoff(mkt, grid);
  if (cfg.keep_surface) report.full_surface.emplace().push_back(V);
  const std::vector<double> first_guess(V.size(), cfg.first_level_guess);

  for (int n = 1; n < grid.N; ++n) {
    const double tau = n * grid.dtau();
    const std::span<const double> guess = n == 1 ? std::span<const double>(first_guess) : V;
    StepResult step;
    try {
      switch (cfg.method) {
        case Method::NM1: step = step_nm1(model, mkt, grid, cfg, V, guess, tau, &tally); break;
        case Method::NM2: step = step_nm2(model, mkt, grid, cfg, V, guess, tau, &tally); break;
        case Method::Frozen: step = step_frozen(model, mkt, grid, cfg, V, guess, tau, &tally); break;
      }
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " at time level " + std::to_string(n),
                  e.value(), n);
    }
    V = std::move(step.V);
    if (!assemble(model, mkt, grid, V).H.diagonally_dominant()) report.diagonally_dominant = false;
    report.iterations_per_level.push_back(step.iterations);
    report.residual_norms.push_back(std::move(step.residuals));
    if (cfg.keep_surface) report.full_surface->push_back(V);
  }
  report.final_slice = std::move(V);
  report.clamp_events = tally.events;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

double interpolate_slice(const SolveGrid& grid, std::span<const double> slice, double S) {
  require(static_cast<int>(slice.size()) == grid.M, "slice length must equal the number of nodes");
  require(S >= 0.0 && S <= grid.S_max, "interpolation point outside the grid");
  const double pos = S / grid.dS();
  if (grid.M < 4) {
    const int left = std::min(static_cast<int>(pos), grid.M - 2);
    const double t = pos - left;
    return (1.0 - t) * slice[left] + t * slice[left + 1];
  }
  const int near = static_cast<int>(std::lround(pos));
  if (std::abs(pos - near) < 1e-12) return slice[near];
  int first = static_cast<int>(std::floor(pos)) - 1;
  first = std::clamp(first, 0, grid.M - 4);
  double value = 0.0;
  for (int j = 0; j < 4; ++j) {
    double w = 1.0;
    for (int k = 0; k < 4; ++k)
      if (k != j) w *= (pos - (first + k)) / static_cast<double>(j - k);
    value += w * slice[first + j];
  }
  return value;
}

}  // namespace nlbs
