#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nlburgers/exact.hpp"
#include "nlburgers/kernels.hpp"
#include "nlburgers/mesh.hpp"

namespace nlb {

enum class Method { LaxFriedrichs, Godunov };
enum class Problem { Local, Nonlocal };

struct SchemeKind {
  Method method = Method::Godunov;
  Problem problem = Problem::Local;

  friend bool operator==(const SchemeKind&, const SchemeKind&) = default;
};

inline std::string_view to_string(Method m) { return m == Method::LaxFriedrichs ? "lf" : "godunov"; }
inline std::string_view to_string(Problem p) { return p == Problem::Local ? "local" : "nonlocal"; }
inline std::string to_string(SchemeKind s) {
  return std::string(to_string(s.method)) + "-" + std::string(to_string(s.problem));
}

inline Method parse_method(std::string_view s) {
  if (s == "lf") return Method::LaxFriedrichs;
  if (s == "godunov") return Method::Godunov;
  throw std::invalid_argument("unknown scheme '" + std::string(s) + "'");
}

inline Problem parse_problem(std::string_view s) {
  if (s == "local") return Problem::Local;
  if (s == "nonlocal") return Problem::Nonlocal;
  throw std::invalid_argument("unknown problem '" + std::string(s) + "'");
}

/** Which convolution sample the nonlocal Godunov flux uses as the interface
 *  velocity V_{j+1/2}:
 *
 *    NextCell   c_{j+1} = sum_k gamma_k rho_{j-k+1}  (default)
 *    Interface  c_j     = sum_k gamma_k rho_{j-k}
 *
 *  c_j already approximates the convolution at x_{j+1/2}; c_{j+1} samples it
 *  one cell downstream. The Lax-Friedrichs flux is unaffected.
 */
enum class VelocitySample { NextCell, Interface };

inline std::string_view to_string(VelocitySample v) { return v == VelocitySample::NextCell ? "next-cell" : "interface"; }

inline VelocitySample parse_velocity_sample(std::string_view s) {
  if (s == "next-cell") return VelocitySample::NextCell;
  if (s == "interface") return VelocitySample::Interface;
  throw std::invalid_argument("unknown velocity sample '" + std::string(s) + "'");
}

/// Raised when a run produces non-finite or runaway values.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::size_t step) : std::runtime_error(what), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

/** Godunov flux for f(rho) = rho^2: the minimum of rho^2 over [l, r] when
 *  l <= r, the maximum over [r, l] otherwise.
 */
inline double godunov_local_flux(double rho_l, double rho_r) {
  if (rho_l <= rho_r) {
    if (rho_l <= 0.0 && rho_r >= 0.0) return 0.0;
    return std::min(rho_l * rho_l, rho_r * rho_r);
  }
  return std::max(rho_l * rho_l, rho_r * rho_r);
}

/** One conservative update rho_j -= dt/h (F_{j+1/2} - F_{j-1/2}) for any of
 *  the four flux variants. Owns its scratch buffers so a run allocates once.
 *
 *  Interface fluxes are stored left to right, F[i] sitting between cells
 *  i-1 and i; ghosts must be fresh on entry and are refreshed on exit.
 */
class Stepper {
 public:
  Stepper(SchemeKind scheme, const Grid& grid, std::optional<QuadratureWeights> weights = std::nullopt,
          BoundaryPolicy policy = {}, VelocitySample velocity = VelocitySample::NextCell)
      : scheme_(scheme), grid_(grid), weights_(std::move(weights)), policy_(policy), velocity_(velocity),
        flux_(grid.n_cells + 1) {
    if (grid.n_ghost < 1) throw std::invalid_argument("Stepper: need at least one ghost cell");
    if (scheme.problem == Problem::Nonlocal) {
      if (!weights_) throw std::invalid_argument("Stepper: nonlocal scheme needs quadrature weights");
      if (grid.n_ghost < static_cast<std::size_t>(weights_->ell) + 1)
        throw std::invalid_argument("Stepper: need at least ell + 1 = " + std::to_string(weights_->ell + 1) +
                                    " ghost cells, grid has " + std::to_string(grid.n_ghost));
      taps_.emplace(*weights_);
      conv_.resize(grid.n_cells + 2);
    } else if (weights_) {
      throw std::invalid_argument("Stepper: local scheme takes no kernel");
    }
  }

  const SchemeKind& scheme() const { return scheme_; }

  void step(CellField& field, double dt) {
    if (!(dt > 0.0) || dt > grid_.dt * (1.0 + 1e-12))
      throw std::invalid_argument("Stepper::step: dt must lie in (0, grid.dt]");
    compute_fluxes(field, dt);
    const double ratio = dt / grid_.h;
    for (std::size_t j = 0; j < grid_.n_cells; ++j) {
      const auto jj = static_cast<std::ptrdiff_t>(j);
      field[jj] -= ratio * (flux_[j + 1] - flux_[j]);
    }
    field.time += dt;
    refresh_ghosts(field, policy_);
  }

  /// Interface fluxes from the last step.
  std::span<const double> fluxes() const { return flux_; }

 private:
  void compute_fluxes(const CellField& field, double dt) {
    const std::size_t n = grid_.n_cells;
    const double visc = grid_.h / (2.0 * dt);
    const auto rho = [&field](std::size_t i) { return field[static_cast<std::ptrdiff_t>(i)]; };

    if (scheme_.problem == Problem::Local) {
      for (std::size_t i = 0; i <= n; ++i) {
        const double l = field[static_cast<std::ptrdiff_t>(i) - 1];
        const double r = rho(i);
        flux_[i] = scheme_.method == Method::LaxFriedrichs ? visc * (l - r) + 0.5 * (l * l + r * r)
                                                           : godunov_local_flux(l, r);
      }
      return;
    }

    // conv_[m] = c_{m-1} for cells -1 .. n.
    taps_->apply(field, -1, static_cast<std::ptrdiff_t>(n) + 1, conv_);
    if (scheme_.method == Method::LaxFriedrichs) {
      for (std::size_t i = 0; i <= n; ++i) {
        const double l = field[static_cast<std::ptrdiff_t>(i) - 1];
        const double r = rho(i);
        flux_[i] = visc * (l - r) + 0.5 * (l * conv_[i] + r * conv_[i + 1]);
      }
    } else {
      const std::size_t shift = velocity_ == VelocitySample::NextCell ? 1 : 0;
      for (std::size_t i = 0; i <= n; ++i) {
        const double v = conv_[i + shift];  // c_i or c_{i-1}
        flux_[i] = v >= 0.0 ? v * field[static_cast<std::ptrdiff_t>(i) - 1] : v * rho(i);
      }
    }
  }

  SchemeKind scheme_;
  Grid grid_;
  std::optional<QuadratureWeights> weights_;
  std::optional<detail::ConvolutionTaps> taps_;
  BoundaryPolicy policy_;
  VelocitySample velocity_;
  std::vector<double> flux_;
  std::vector<double> conv_;
};

/// rho_j' = (rho_{j+1} + rho_{j-1})/2 - dt/(2h) (rho_{j+1}^2 - rho_{j-1}^2).
inline CellField lf_local_step(const CellField& field, const Grid& grid, double dt) {
  CellField out = field;
  Stepper({Method::LaxFriedrichs, Problem::Local}, grid).step(out, dt);
  return out;
}

/// rho_j' = (rho_{j+1} + rho_{j-1})/2 - dt/(2h) (rho_{j+1} c_{j+1} - rho_{j-1} c_{j-1}).
inline CellField lf_nonlocal_step(const CellField& field, const Grid& grid, const QuadratureWeights& w,
                                  double dt) {
  CellField out = field;
  Stepper({Method::LaxFriedrichs, Problem::Nonlocal}, grid, w).step(out, dt);
  return out;
}

inline CellField godunov_local_step(const CellField& field, const Grid& grid, double dt) {
  CellField out = field;
  Stepper({Method::Godunov, Problem::Local}, grid).step(out, dt);
  return out;
}

/// Upwind in the sign of V_{j+1/2}: F = V rho_j for V >= 0, V rho_{j+1} otherwise.
inline CellField godunov_nonlocal_step(const CellField& field, const Grid& grid, const QuadratureWeights& w,
                                       double dt, VelocitySample velocity = VelocitySample::NextCell) {
  CellField out = field;
  Stepper({Method::Godunov, Problem::Nonlocal}, grid, w, {}, velocity).step(out, dt);
  return out;
}

struct RunConfig {
  SchemeKind scheme;
  Grid grid;
  InitialDatumId datum = InitialDatumId::A;
  std::optional<KernelSpec> kernel;
  std::vector<double> snapshot_times;
  BoundaryPolicy boundary;
  VelocitySample velocity = VelocitySample::NextCell;
  double blowup_factor = 10.0;  // abort once max|rho| exceeds this times the initial max; 0 disables
};

struct StepDiagnostics {
  std::size_t step = 0;
  double time = 0.0;
  double total_mass = 0.0;
  double right_mass = 0.0;  // h * sum |rho_j| over centers x_j > 0
  double right_sup = 0.0;   // max |rho_j| over cells with x_{j-1/2} >= 0
};

struct Snapshot {
  double requested = 0.0;
  double time = 0.0;
  std::size_t step = 0;
  CellField field;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  std::vector<StepDiagnostics> diagnostics;
  CellField final_field;
  std::size_t n_steps = 0;
};

inline StepDiagnostics diagnose(const CellField& field, const Grid& grid, std::size_t step) {
  StepDiagnostics d;
  d.step = step;
  d.time = field.time;
  double mass = 0.0;
  double right = 0.0;
  for (std::size_t j = 0; j < grid.n_cells; ++j) {
    const auto jj = static_cast<std::ptrdiff_t>(j);
    const double v = field[jj];
    mass += v;
    if (grid.center(jj) > 0.0) right += std::abs(v);
    if (grid.interface(jj) >= 0.0) d.right_sup = std::max(d.right_sup, std::abs(v));
  }
  d.total_mass = mass * grid.h;
  d.right_mass = right * grid.h;
  return d;
}

/// Called after every accepted step (and once for the initial state).
using StepObserver = std::function<void(const StepDiagnostics&, const CellField&)>;

/** Marches from t = 0 to grid.t_final with dt = grid.dt, shortening the last
 *  step so it lands on t_final exactly. Each requested snapshot is taken at
 *  the last step whose time does not exceed it; the initial state is always
 *  the first snapshot.
 */
inline Trajectory run(const RunConfig& config, const StepObserver& observer = {}) {
  const Grid& grid = config.grid;
  if ((config.scheme.problem == Problem::Nonlocal) != config.kernel.has_value())
    throw std::invalid_argument("run: a kernel is required for nonlocal problems and forbidden for local ones");
  for (double t : config.snapshot_times)
    if (t < 0.0 || t > grid.t_final * (1.0 + 1e-12) + 1e-15)
      throw std::invalid_argument("run: snapshot time " + std::to_string(t) + " outside [0, t_final]");

  std::optional<QuadratureWeights> weights;
  if (config.kernel) weights = quadrature_weights(*config.kernel, grid.h);
  Stepper stepper(config.scheme, grid, weights, config.boundary, config.velocity);

  Trajectory traj;
  CellField field = project_initial(config.datum, grid, config.boundary);

  double initial_peak = 0.0;
  for (double v : field.interior()) initial_peak = std::max(initial_peak, std::abs(v));
  const double blowup = config.blowup_factor > 0.0 ? config.blowup_factor * initial_peak
                                                   : std::numeric_limits<double>::infinity();

  std::vector<double> pending = config.snapshot_times;
  std::sort(pending.begin(), pending.end());
  auto next_request = pending.begin();
  const double tol = 1e-9 * grid.dt;

  const auto record = [&](std::size_t step, double requested) {
    if (!traj.snapshots.empty() && traj.snapshots.back().step == step) return;
    traj.snapshots.push_back({requested, field.time, step, field});
  };

  record(0, 0.0);
  traj.diagnostics.push_back(diagnose(field, grid, 0));
  if (observer) observer(traj.diagnostics.back(), field);

  // Step times are n * dt, never accumulated; a final partial step lands on t_final.
  auto n_full = static_cast<std::size_t>(std::floor(grid.t_final / grid.dt));
  double last_dt = grid.t_final - static_cast<double>(n_full) * grid.dt;
  if (last_dt >= grid.dt * (1.0 - 1e-9)) {
    ++n_full;
    last_dt = 0.0;
  }
  if (last_dt <= tol) last_dt = 0.0;
  const std::size_t n_total = n_full + (last_dt > 0.0 ? 1 : 0);

  std::size_t step = 0;
  while (step < n_total) {
    const bool partial = step == n_full;
    const double dt = partial ? last_dt : grid.dt;
    const double t_next = partial ? grid.t_final : static_cast<double>(step + 1) * grid.dt;
    while (next_request != pending.end() && t_next > *next_request + tol) record(step, *next_request++);

    stepper.step(field, dt);
    ++step;
    field.time = step == n_total ? grid.t_final : t_next;

    double peak = 0.0;
    for (double v : field.interior()) {
      if (!std::isfinite(v)) throw SolverError("run: non-finite value at step " + std::to_string(step), step);
      peak = std::max(peak, std::abs(v));
    }
    if (peak > blowup)
      throw SolverError("run: max|rho| = " + std::to_string(peak) + " exceeds " + std::to_string(config.blowup_factor) +
                            "x the initial maximum at step " + std::to_string(step),
                        step);
    traj.diagnostics.push_back(diagnose(field, grid, step));
    if (observer) observer(traj.diagnostics.back(), field);
  }
  while (next_request != pending.end()) record(step, *next_request++);

  traj.n_steps = step;
  traj.final_field = std::move(field);
  return traj;
}

}  // namespace nlb
