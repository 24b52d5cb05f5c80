#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fracpme/field.hpp"
#include "fracpme/fracops.hpp"
#include "fracpme/params.hpp"
#include "fracpme/trajectory.hpp"

namespace fracpme {

enum class PressureBackend { automatic, quadrature, spectral };

struct SolverOptions {
  // automatic: kernel quadrature for s < 1/2, padded spectral otherwise.
  PressureBackend pressure = PressureBackend::automatic;
  double sigma = 0.4;
  double kappa = 1e-30;
  int pad = 8;
  // closed: no flux through the two outermost faces, so mass stays in the
  // box as in the integrated formulation. open: upwind flux against the
  // zero exterior, mass may leave.
  bool closed_boundary = true;
  // Donor cells above donor_floor * max u also bound dt by the outflow
  // condition dt |V| mob(u) <= h u / 2; below it step rejection guards
  // positivity. Values >= 1 disable the bound; m = 1 never uses it.
  double donor_floor = 1e-3;
  long max_steps = 20'000'000;
  bool record_steps = true;
};

struct SolverState {
  double t = 0.0;
  Field u;
  ModelParams params;
  double dt_last = 0.0;
  long step_count = 0;
  long rejected_steps = 0;
  // trapezoid sums of the two dissipation terms, missing the last half step
  double visc_accum = 0.0;
  double gradH_accum = 0.0;
  double pending_half_dt = 0.0;
  double dt_first = 0.0;
};

// Called with the initial state and after every accepted step.
using StepObserver = std::function<void(const SolverState&)>;

// Explicit conservative upwind scheme for
//   u_t = delta u_xx + (mob(u) p_x)_x,  p = K_eps u,  mob = (u+mu)^(m-1)
// on a truncated line with zero density outside. The grid must span [-R, R].
class Solver {
 public:
  Solver(const ModelParams& params, const Grid& grid, const SolverOptions& opts = {});

  const ModelParams& params() const { return params_; }
  const Grid& grid() const { return grid_; }
  const SolverOptions& options() const { return opts_; }
  Backend pressure_backend() const { return pot_.backend(); }

  SolverState initial_state(const Field& u0) const;
  // One accepted step that does not pass t_stop; lands on t_stop exactly
  // when clipped. Throws NumericalError on dt underflow.
  void advance(SolverState& st, double t_stop) const;
  SolverState step(const SolverState& st, double t_stop) const;

  // Pressure on the n cells.
  std::vector<double> pressure(const Field& u) const;
  // Energy bookkeeping for a state; f0 is the initial energy.
  EnergyReport report(const SolverState& st, double f0) const;

  // snapshot_times are merged with {0, T}.
  Trajectory run(const Field& u0, double T, const std::vector<double>& snapshot_times,
                 const StepObserver& observer = {}) const;

 private:
  struct Work;
  void fluxes(const std::vector<double>& ue, Work& w) const;

  ModelParams params_;
  Grid grid_;
  SolverOptions opts_;
  PotentialOperator pot_;
};

SolverState step(const Solver& solver, const SolverState& st, double t_stop);
Trajectory run(const ModelParams& params, const Field& u0, double T,
               const std::vector<double>& snapshot_times, const SolverOptions& opts = {});

// Energy functional value used in reports: F_mu for mu > 0, its mu -> 0
// limit where finite, else 0.
double energy_value(const Field& u, const ModelParams& p);

struct Rung {
  double delta = 0.0;
  double mu = 0.0;
  double eps = 0.0;
  double R = 50.0;
};

struct SweepResult {
  std::vector<Rung> ladder;
  std::vector<std::optional<Trajectory>> runs;
  std::vector<std::string> errors;  // empty string on success
  // L1 distance of final solutions between rung k and k+1, NaN if either
  // failed. Grids of different R are compared after zero extension.
  std::vector<double> distances;
  bool decreasing = false;
};

// u0 is zero-extended or restricted onto each rung's grid [-R, R] at the
// same h; (R - x) / h must be integral.
SweepResult vanishing_sweep(const ModelParams& params, const Field& u0, double T,
                            const std::vector<Rung>& ladder, const SolverOptions& opts = {},
                            int jobs = 1);

// Centred grid [-R, R] with spacing h (2R/h must be an integer).
Grid line_grid(double R, double h);
// Zero extension / restriction of a density onto an aligned grid.
Field regrid(const Field& u, const Grid& target);

}  // namespace fracpme
