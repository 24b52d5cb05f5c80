#pragma once

#include <functional>
#include <vector>

#include "fracpme/field.hpp"
#include "fracpme/fracops.hpp"
#include "fracpme/params.hpp"
#include "fracpme/trajectory.hpp"

namespace fracpme {

// v_i = h * sum_{j<=i} u_j is the integrated variable at the right face of
// cell i, x_i + h/2. The exterior is 0 on the left and M on the right.
struct IntegratedState {
  double t = 0.0;
  Field v;
  double M = 0.0;
  double v_left = 0.0;
  ModelParams params;
  double dt_last = 0.0;
  long step_count = 0;
  long rejected_steps = 0;
  double dt_first = 0.0;
};

struct IntegratedOptions {
  double sigma = 0.4;
  double kappa = 1e-30;
  long max_steps = 20'000'000;
};

struct IntegratedTrajectory {
  ModelParams params;
  double M = 0.0;
  std::vector<Snapshot> snapshots;  // v fields, kind integrated
  long step_count = 0;
  long rejected_steps = 0;

  const Field& initial() const { return snapshots.front().u; }
  const Field& final() const { return snapshots.back().u; }
};

using IntegratedObserver = std::function<void(const IntegratedState&)>;

// Explicit scheme for v_t = -(v_x)_+^(m-1) (-Laplacian)^alpha v, alpha = 1-s,
// with the quadrature fractional Laplacian and constant tails (v_left, M).
class IntegratedSolver {
 public:
  IntegratedSolver(const ModelParams& params, const Grid& grid,
                   const IntegratedOptions& opts = {});

  const Grid& grid() const { return grid_; }
  const ModelParams& params() const { return params_; }

  // v_left is the left exterior value, 0 for an integrated density.
  IntegratedState initial_state(const Field& v0, double M, double v_left = 0.0) const;
  IntegratedState from_density(const Field& u0) const;

  // Rate r with v_t = -r, on the current state.
  std::vector<double> rate(const IntegratedState& st) const;
  // Largest step the controller would try.
  double stable_dt(const IntegratedState& st) const;

  // Adaptive step not passing t_stop; reject/halve on loss of monotonicity
  // or bounds. Throws NumericalError on dt underflow.
  void advance(IntegratedState& st, double t_stop) const;
  IntegratedState istep(const IntegratedState& st, double t_stop) const;
  // Single step with a prescribed dt; returns false (state untouched) when
  // the result would violate monotonicity or bounds.
  bool advance_fixed(IntegratedState& st, double dt) const;

  IntegratedTrajectory run(const Field& v0, double M, double T,
                           const std::vector<double>& snapshot_times,
                           const IntegratedObserver& observer = {},
                           double v_left = 0.0) const;

 private:
  bool try_update(const IntegratedState& st, const std::vector<double>& r, double dt,
                  std::vector<double>& out) const;

  ModelParams params_;
  Grid grid_;
  IntegratedOptions opts_;
  FracLaplacianQuadrature lap_;
};

IntegratedState istep(const IntegratedSolver& solver, const IntegratedState& st, double t_stop);

struct CrossCheckPoint {
  double t = 0.0;
  double distance = 0.0;  // L1(cumulative(u), v) / M
};

struct CrossCheckReport {
  std::vector<CrossCheckPoint> points;
  double max_distance = 0.0;
};

// Compares cumulative(u(t)) with v(t) at the requested times; both
// trajectories must have snapshots at exactly those times.
CrossCheckReport cross_check(const Trajectory& u_traj, const IntegratedTrajectory& v_traj,
                             const std::vector<double>& times);

// True when the finer run's distance is not smaller.
bool grows_under_refinement(const CrossCheckReport& coarse, const CrossCheckReport& fine);

}  // namespace fracpme
