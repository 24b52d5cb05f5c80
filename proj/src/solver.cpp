#include "fracpme/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracpme/diagnostics.hpp"
#include "fracpme/parallel.hpp"

namespace fracpme {

namespace {

PotentialOperator make_pressure(const ModelParams& p, int cells, double h,
                                const SolverOptions& o) {
  PressureBackend b = o.pressure;
  if (b == PressureBackend::automatic)
    b = p.s < 0.5 ? PressureBackend::quadrature : PressureBackend::spectral;
  if (b == PressureBackend::quadrature) return PotentialOperator::quadrature(cells, h, p.s, p.eps);
  return PotentialOperator::padded_spectral(cells, h, p.s, p.eps, o.pad);
}

std::vector<double> with_ghosts(const Field& u) {
  std::vector<double> ue(static_cast<size_t>(u.size()) + 2, 0.0);
  std::copy(u.values().begin(), u.values().end(), ue.begin() + 1);
  return ue;
}

}  // namespace

struct Solver::Work {
  std::vector<double> p;     // n+2 pressure values incl. ghosts
  std::vector<double> flux;  // n+1 faces
  double max_v = 0.0;
  double max_speed = 0.0;  // |V| mob(u_d) / u_d over donors above the floor
  double floor = 0.0;
  double d_gradH = 0.0;
  double d_visc = 0.0;
};

Solver::Solver(const ModelParams& params, const Grid& grid, const SolverOptions& opts)
    : params_(params),
      grid_(grid),
      opts_(opts),
      pot_(make_pressure(params, grid.n + 2, grid.h, opts)) {
  params_.validate();
  require(grid.topology == Topology::truncated_line, "solver needs a truncated_line grid");
  require(std::abs(grid.x_left + params.R) <= 1e-9 * grid.h &&
              std::abs(grid.x_right() - params.R) <= 1e-9 * grid.h,
          "grid must span [-R, R] for R=" + format_double(params.R));
  require(opts.sigma > 0.0 && opts.sigma <= 1.0, "sigma must lie in (0,1]");
}

void Solver::fluxes(const std::vector<double>& ue, Work& w) const {
  const double h = grid_.h, m = params_.m, mu = params_.mu, delta = params_.delta;
  w.p = pot_.apply(ue);
  const size_t faces = ue.size() - 1;
  w.flux.assign(faces, 0.0);
  std::vector<double> mob(ue.size());
  for (size_t j = 0; j < ue.size(); ++j) mob[j] = m == 1.0 ? 1.0 : std::pow(ue[j] + mu, m - 1.0);
  w.max_v = 0.0;
  w.max_speed = 0.0;
  w.d_gradH = 0.0;
  w.d_visc = 0.0;
  for (size_t f = 0; f < faces; ++f) {
    const double du = ue[f + 1] - ue[f];
    const double dp = w.p[f + 1] - w.p[f];
    const double V = dp / h;
    // material moves along -p_x, so the donor sits on the high-pressure side
    const double mb = V > 0.0 ? mob[f + 1] : mob[f];
    w.flux[f] = mb * V + delta * du / h;
    if (opts_.closed_boundary && (f == 0 || f + 1 == faces)) w.flux[f] = 0.0;
    w.max_v = std::max(w.max_v, std::abs(V));
    const double ud = V > 0.0 ? ue[f + 1] : ue[f];
    if (m != 1.0 && ud > w.floor) w.max_speed = std::max(w.max_speed, std::abs(V) * mb / ud);
    w.d_gradH += du * dp / h;
    if (delta > 0.0 && du != 0.0) {
      const double ubar = 0.5 * (ue[f] + ue[f + 1]);
      w.d_visc += delta * du * du / h / std::pow(ubar + mu, m - 1.0);
    }
  }
}

SolverState Solver::initial_state(const Field& u0) const {
  require(u0.kind() == FieldKind::density, "initial datum must be a density");
  require(u0.grid() == grid_, "initial datum is on a different grid");
  return SolverState{0.0, u0, params_, 0.0, 0, 0, 0.0, 0.0, 0.0, 0.0};
}

void Solver::advance(SolverState& st, double t_stop) const {
  require(t_stop > st.t, "t_stop must exceed the current time");
  const double h = grid_.h;
  const int n = grid_.n;
  const auto ue = with_ghosts(st.u);
  const double umax = st.u.max();
  Work w;
  w.floor = opts_.donor_floor * umax;
  fluxes(ue, w);
  const double mm = params_.m == 1.0 ? 1.0 : std::pow(umax + params_.mu, params_.m - 1.0);
  const double k = opts_.kappa;
  double dt = std::min({h * h / (2.0 * params_.delta + k), h / (w.max_v * mm + k),
                        0.5 * h / (w.max_speed + k),
                        2.0 / (mm * 4.0 * pot_.nyquist_symbol() / (h * h) + k)});
  dt *= opts_.sigma;
  if (st.dt_first == 0.0) st.dt_first = dt;
  const double dt_floor = 1e-14 * st.dt_first;
  bool clipped = false;
  if (dt >= t_stop - st.t) {
    dt = t_stop - st.t;
    clipped = true;
  }
  std::vector<double> un(static_cast<size_t>(n));
  for (;;) {
    double lo = 0.0, hi = 0.0;
    bool finite = true;
    for (int i = 0; i < n; ++i) {
      const size_t f = static_cast<size_t>(i);
      un[f] = st.u[i] + dt * (w.flux[f + 1] - w.flux[f]) / h;
      lo = std::min(lo, un[f]);
      hi = std::max(hi, un[f]);
      if (!std::isfinite(un[f])) finite = false;
    }
    if (finite && lo >= 0.0 && hi <= umax * (1.0 + 1e-12)) break;
    dt *= 0.5;
    clipped = false;
    ++st.rejected_steps;
    if (dt < dt_floor)
      throw NumericalError("step size underflow at t=" + format_double(st.t) +
                           " (dt=" + format_double(dt) + ")");
  }
  // trapezoid in time: D(t_k) gets half of the previous and half of this step
  st.gradH_accum += (st.pending_half_dt + 0.5 * dt) * w.d_gradH;
  st.visc_accum += (st.pending_half_dt + 0.5 * dt) * w.d_visc;
  st.pending_half_dt = 0.5 * dt;
  st.u = Field(grid_, std::move(un), FieldKind::density);
  st.t = clipped ? t_stop : st.t + dt;
  st.dt_last = dt;
  ++st.step_count;
}

SolverState Solver::step(const SolverState& st, double t_stop) const {
  SolverState out = st;
  advance(out, t_stop);
  return out;
}

std::vector<double> Solver::pressure(const Field& u) const {
  auto p = pot_.apply(with_ghosts(u));
  return std::vector<double>(p.begin() + 1, p.end() - 1);
}

double energy_value(const Field& u, const ModelParams& p) {
  if (p.mu > 0.0) return fmu_integral(u, p.mu, p.m);
  if (fmu_limit_defined(p.m)) return fmu_integral(u, 0.0, p.m);
  return 0.0;
}

EnergyReport Solver::report(const SolverState& st, double f0) const {
  Work w;
  fluxes(with_ghosts(st.u), w);
  EnergyReport r;
  r.t = st.t;
  r.mass = mass(st.u);
  r.linf = st.u.max();
  r.fmu_integral = energy_value(st.u, params_);
  r.visc_dissip_accum = st.visc_accum + st.pending_half_dt * w.d_visc;
  r.gradH_dissip_accum = st.gradH_accum + st.pending_half_dt * w.d_gradH;
  const double lhs = r.fmu_integral + r.visc_dissip_accum + r.gradH_dissip_accum;
  r.identity_residual = f0 > 0.0 ? std::abs(lhs - f0) / f0 : 0.0;
  r.u3m_integral = params_.m <= 3.0 ? u3m_integral(st.u, params_.m) : 0.0;
  return r;
}

Trajectory Solver::run(const Field& u0, double T, const std::vector<double>& snapshot_times,
                       const StepObserver& observer) const {
  require(std::isfinite(T) && T > 0.0, "T must be > 0");
  std::vector<double> times = snapshot_times;
  times.push_back(0.0);
  times.push_back(T);
  for (double t : times)
    require(std::isfinite(t) && t >= 0.0 && t <= T, "snapshot times must lie in [0, T]");
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  Trajectory traj;
  traj.params = params_;
  SolverState st = initial_state(u0);
  const double f0 = energy_value(u0, params_);
  traj.snapshots.push_back({0.0, st.u});
  traj.diagnostics.push_back(report(st, f0));
  if (observer) observer(st);
  for (size_t k = 1; k < times.size(); ++k) {
    while (st.t < times[k]) {
      if (st.step_count >= opts_.max_steps)
        throw NumericalError("step budget exhausted at t=" + format_double(st.t));
      advance(st, times[k]);
      if (opts_.record_steps) traj.steps.push_back({st.t, st.dt_last, mass(st.u), st.u.max()});
      if (observer) observer(st);
    }
    traj.snapshots.push_back({st.t, st.u});
    traj.diagnostics.push_back(report(st, f0));
  }
  traj.step_count = st.step_count;
  traj.rejected_steps = st.rejected_steps;
  return traj;
}

SolverState step(const Solver& solver, const SolverState& st, double t_stop) {
  return solver.step(st, t_stop);
}

Trajectory run(const ModelParams& params, const Field& u0, double T,
               const std::vector<double>& snapshot_times, const SolverOptions& opts) {
  return Solver(params, u0.grid(), opts).run(u0, T, snapshot_times);
}

Grid line_grid(double R, double h) {
  require(R > 0.0 && h > 0.0, "line grid needs R > 0 and h > 0");
  const double cells = 2.0 * R / h;
  const long n = std::lround(cells);
  require(std::abs(cells - static_cast<double>(n)) <= 1e-9 * cells,
          "2R/h must be an integer (R=" + format_double(R) + ", h=" + format_double(h) + ")");
  return Grid::make(static_cast<int>(n), h, -R, Topology::truncated_line);
}

Field regrid(const Field& u, const Grid& target) {
  const Grid& g = u.grid();
  require(std::abs(g.h - target.h) <= 1e-12 * g.h, "regrid needs equal spacing");
  const double off = (g.x_left - target.x_left) / g.h;
  const long shift = std::lround(off);
  require(std::abs(off - static_cast<double>(shift)) <= 1e-9, "regrid grids are not aligned");
  std::vector<double> v(static_cast<size_t>(target.n), 0.0);
  for (int i = 0; i < g.n; ++i) {
    long j = i + shift;
    if (j >= 0 && j < target.n)
      v[static_cast<size_t>(j)] = u[i];
    else
      require(u[i] == 0.0, "restriction would drop nonzero density");
  }
  return Field(target, std::move(v), u.kind());
}

SweepResult vanishing_sweep(const ModelParams& params, const Field& u0, double T,
                            const std::vector<Rung>& ladder, const SolverOptions& opts, int jobs) {
  require(!ladder.empty(), "sweep ladder is empty");
  for (size_t k = 1; k < ladder.size(); ++k) {
    const Rung &a = ladder[k - 1], &b = ladder[k];
    require(b.delta <= a.delta && b.mu <= a.mu && b.eps <= a.eps && b.R >= a.R,
            "ladder must have nonincreasing delta, mu, eps and nondecreasing R");
  }
  SweepResult res;
  res.ladder = ladder;
  res.runs.resize(ladder.size());
  res.errors.assign(ladder.size(), "");
  parallel_for(ladder.size(), jobs, [&](size_t k) {
    try {
      ModelParams p = params;
      p.delta = ladder[k].delta;
      p.mu = ladder[k].mu;
      p.eps = ladder[k].eps;
      p.R = ladder[k].R;
      Grid g = line_grid(p.R, u0.grid().h);
      Field start = regrid(u0, g);
      res.runs[k] = Solver(p, g, opts).run(start, T, {});
    } catch (const std::exception& e) {
      res.errors[k] = e.what();
    }
  });
  for (size_t k = 1; k < ladder.size(); ++k) {
    if (!res.runs[k - 1] || !res.runs[k]) {
      res.distances.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const Field& a = res.runs[k - 1]->final();
    const Field& b = res.runs[k]->final();
    const Field& big = a.size() >= b.size() ? a : b;
    const Field& small = a.size() >= b.size() ? b : a;
    res.distances.push_back(l1_distance(big, regrid(small, big.grid())));
  }
  res.decreasing = true;
  for (size_t k = 0; k < res.distances.size(); ++k) {
    if (!std::isfinite(res.distances[k])) res.decreasing = false;
    if (k > 0 && !(res.distances[k] < res.distances[k - 1])) res.decreasing = false;
  }
  return res;
}

}  // namespace fracpme
