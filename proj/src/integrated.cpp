#include "fracpme/integrated.hpp"

#include <algorithm>
#include <cmath>

namespace fracpme {

namespace {

constexpr double kMonoTol = 1e-14;

double face_x0(const Grid& g) { return g.x(0) + 0.5 * g.h; }

}  // namespace

IntegratedSolver::IntegratedSolver(const ModelParams& params, const Grid& grid,
                                   const IntegratedOptions& opts)
    : params_(params), grid_(grid), opts_(opts), lap_(grid.n, grid.h, params.alpha()) {
  params_.validate();
  require(grid.topology == Topology::truncated_line,
          "integrated solver needs a truncated_line grid");
  require(opts.sigma > 0.0 && opts.sigma <= 1.0, "sigma must lie in (0,1]");
}

IntegratedState IntegratedSolver::initial_state(const Field& v0, double M, double v_left) const {
  require(v0.grid() == grid_, "initial datum is on a different grid");
  require(M >= 0.0 && v_left >= 0.0 && v_left <= M, "tails must satisfy 0 <= v_left <= M");
  double prev = v_left;
  for (int i = 0; i < v0.size(); ++i) {
    require(v0[i] - prev >= -1e-12 * std::max(M, 1e-300), "v0 must be nondecreasing");
    require(v0[i] >= -1e-12 * M && v0[i] <= M * (1 + 1e-12), "v0 must lie in [0, M]");
    prev = v0[i];
  }
  Field v(grid_, v0.vec(), FieldKind::integrated);
  return IntegratedState{0.0, std::move(v), M, v_left, params_, 0.0, 0, 0, 0.0};
}

IntegratedState IntegratedSolver::from_density(const Field& u0) const {
  Field v = cumulative(u0);
  return initial_state(v, mass(u0));
}

std::vector<double> IntegratedSolver::rate(const IntegratedState& st) const {
  const int n = grid_.n;
  const double h = grid_.h, m = params_.m;
  auto L = lap_.apply(st.v.values(), TailModel::constant(st.v_left, st.M), face_x0(grid_));
  std::vector<double> r(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double lo = i > 0 ? st.v[i - 1] : st.v_left;
    const double hi = i < n - 1 ? st.v[i + 1] : st.M;
    // donor slope: L > 0 moves mass right across the face, so the left cell
    // gives; an empty donor cell cannot be drained further
    const double Li = L[static_cast<size_t>(i)];
    const double donor = std::max(Li > 0.0 ? st.v[i] - lo : hi - st.v[i], 0.0) / h;
    const double mob = m == 1.0 ? 1.0 : std::pow(donor, m - 1.0);
    r[static_cast<size_t>(i)] = mob * Li;
  }
  return r;
}

double IntegratedSolver::stable_dt(const IntegratedState& st) const {
  const int n = grid_.n;
  const double h = grid_.h, m = params_.m;
  double vxmax = 0.0;
  for (int i = 0; i < n; ++i) {
    const double lo = i > 0 ? st.v[i - 1] : st.v_left;
    const double hi = i < n - 1 ? st.v[i + 1] : st.M;
    vxmax = std::max({vxmax, (st.v[i] - lo) / h, (hi - st.v[i]) / h});
  }
  const double g = m == 1.0 ? 1.0 : std::pow(vxmax, m - 1.0);
  return opts_.sigma / (g * lap_.diagonal() + opts_.kappa);
}

bool IntegratedSolver::try_update(const IntegratedState& st, const std::vector<double>& r,
                                  double dt, std::vector<double>& out) const {
  const int n = grid_.n;
  const double M = st.M, tol = kMonoTol * std::max(M, 1e-300);
  out.resize(static_cast<size_t>(n));
  double prev = st.v_left;
  for (int i = 0; i < n; ++i) {
    const double val = st.v[i] - dt * r[static_cast<size_t>(i)];
    if (!std::isfinite(val) || val - prev < -tol || val < -tol || val > M + tol) return false;
    out[static_cast<size_t>(i)] = val;
    prev = val;
  }
  if (M - prev < -tol) return false;
  for (double& x : out) x = std::clamp(x, st.v_left, M);
  return true;
}

void IntegratedSolver::advance(IntegratedState& st, double t_stop) const {
  require(t_stop > st.t, "t_stop must exceed the current time");
  const auto r = rate(st);
  double dt = stable_dt(st);
  if (st.dt_first == 0.0) st.dt_first = dt;
  bool clipped = false;
  if (dt >= t_stop - st.t) {
    dt = t_stop - st.t;
    clipped = true;
  }
  std::vector<double> vn;
  while (!try_update(st, r, dt, vn)) {
    dt *= 0.5;
    clipped = false;
    ++st.rejected_steps;
    if (dt < 1e-14 * st.dt_first)
      throw NumericalError("integrated step size underflow at t=" + format_double(st.t));
  }
  st.v = Field(grid_, std::move(vn), FieldKind::integrated);
  st.t = clipped ? t_stop : st.t + dt;
  st.dt_last = dt;
  ++st.step_count;
}

IntegratedState IntegratedSolver::istep(const IntegratedState& st, double t_stop) const {
  IntegratedState out = st;
  advance(out, t_stop);
  return out;
}

bool IntegratedSolver::advance_fixed(IntegratedState& st, double dt) const {
  require(dt > 0.0, "dt must be > 0");
  std::vector<double> vn;
  if (!try_update(st, rate(st), dt, vn)) return false;
  st.v = Field(grid_, std::move(vn), FieldKind::integrated);
  st.t += dt;
  st.dt_last = dt;
  ++st.step_count;
  return true;
}

IntegratedTrajectory IntegratedSolver::run(const Field& v0, double M, double T,
                                           const std::vector<double>& snapshot_times,
                                           const IntegratedObserver& observer,
                                           double v_left) const {
  require(std::isfinite(T) && T > 0.0, "T must be > 0");
  std::vector<double> times = snapshot_times;
  times.push_back(0.0);
  times.push_back(T);
  for (double t : times)
    require(std::isfinite(t) && t >= 0.0 && t <= T, "snapshot times must lie in [0, T]");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  IntegratedTrajectory tr;
  tr.params = params_;
  tr.M = M;
  IntegratedState st = initial_state(v0, M, v_left);
  tr.snapshots.push_back({0.0, st.v});
  if (observer) observer(st);
  for (size_t k = 1; k < times.size(); ++k) {
    while (st.t < times[k]) {
      if (st.step_count >= opts_.max_steps)
        throw NumericalError("step budget exhausted at t=" + format_double(st.t));
      advance(st, times[k]);
      if (observer) observer(st);
    }
    tr.snapshots.push_back({st.t, st.v});
  }
  tr.step_count = st.step_count;
  tr.rejected_steps = st.rejected_steps;
  return tr;
}

IntegratedState istep(const IntegratedSolver& solver, const IntegratedState& st, double t_stop) {
  return solver.istep(st, t_stop);
}

namespace {

const Snapshot& at_time(const std::vector<Snapshot>& snaps, double t, const char* what) {
  for (const auto& s : snaps)
    if (std::abs(s.t - t) <= 1e-12 * std::max(1.0, std::abs(t))) return s;
  throw PreconditionError(std::string(what) + " trajectory has no snapshot at t=" +
                          format_double(t));
}

}  // namespace

CrossCheckReport cross_check(const Trajectory& u_traj, const IntegratedTrajectory& v_traj,
                             const std::vector<double>& times) {
  require(!times.empty(), "cross_check needs at least one time");
  require(u_traj.params.m == v_traj.params.m && u_traj.params.s == v_traj.params.s,
          "cross_check needs matching (m, s)");
  require(v_traj.M > 0.0, "cross_check needs positive mass");
  CrossCheckReport rep;
  for (double t : times) {
    const Field& u = at_time(u_traj.snapshots, t, "direct").u;
    const Field& v = at_time(v_traj.snapshots, t, "integrated").u;
    require(u.grid() == v.grid(), "cross_check grids differ");
    Field cu = cumulative(u);
    double d = 0.0;
    for (int i = 0; i < u.size(); ++i) d += std::abs(cu[i] - v[i]);
    d *= u.grid().h / v_traj.M;
    rep.points.push_back({t, d});
    rep.max_distance = std::max(rep.max_distance, d);
  }
  return rep;
}

bool grows_under_refinement(const CrossCheckReport& coarse, const CrossCheckReport& fine) {
  return !(fine.max_distance < coarse.max_distance);
}

}  // namespace fracpme
