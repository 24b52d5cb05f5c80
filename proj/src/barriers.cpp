#include "fracpme/barriers.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "fracpme/fracops.hpp"
#include "fracpme/parallel.hpp"

namespace fracpme {

// ------------------------------------------------------------ upper parabola

void UpperBarrier::validate() const {
  require(a > 0.0 && std::isfinite(a), "barrier amplitude a must be > 0");
  require(b > 0.0 && std::isfinite(b), "barrier radius b must be > 0");
  require(C >= 0.0 && std::isfinite(C), "barrier speed C must be >= 0");
}

double UpperBarrier::operator()(double x, double t) const {
  const double z = std::max(C * t - (std::abs(x) - b), 0.0);
  return a * z * z;
}

UpperReport check_upper(const Trajectory& traj, const UpperBarrier& barrier) {
  barrier.validate();
  require(!traj.snapshots.empty(), "trajectory is empty");
  const Field& u0 = traj.initial();
  const Grid& g = u0.grid();
  for (int i = 0; i < g.n; ++i)
    if (u0[i] > barrier(g.x(i), 0.0))
      throw PreconditionError("u0 exceeds the barrier at x=" + format_double(g.x(i)));
  UpperReport rep;
  rep.barrier = barrier;
  rep.margin_min = std::numeric_limits<double>::infinity();
  for (const auto& sn : traj.snapshots) {
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < g.n; ++i) {
      const double U = barrier(g.x(i), sn.t);
      const double d = U - sn.u[i];
      mn = std::min(mn, d);
      if (d < 0.0 && !rep.first_violation) rep.first_violation = {sn.t, g.x(i), sn.u[i], U};
    }
    rep.margin_curve.emplace_back(sn.t, mn);
    rep.margin_min = std::min(rep.margin_min, mn);
  }
  rep.holds = rep.margin_min >= 0.0;
  return rep;
}

double required_speed(const Field& u, double t, double a, double b) {
  require(t > 0.0, "required_speed needs t > 0");
  double c = 0.0;
  for (int i = 0; i < u.size(); ++i)
    if (u[i] > 0.0) c = std::max(c, ((std::abs(u.grid().x(i)) - b) + std::sqrt(u[i] / a)) / t);
  return c;
}

SpeedResult find_speed(const ModelParams& params, const Field& u0, double a, double b, double T,
                       const SpeedOptions& opts) {
  require(params.m > 2.0, "find_speed needs m > 2");
  require(opts.C_max > 0.0 && opts.rel_tol > 0.0, "find_speed needs C_max > 0 and rel_tol > 0");
  UpperBarrier probe{a, b, 0.0};
  probe.validate();
  const Grid& g = u0.grid();
  for (int i = 0; i < g.n; ++i) {
    require(std::abs(g.x(i)) <= b || u0[i] == 0.0, "u0 support must lie in [-b, b]");
    require(u0[i] <= probe(g.x(i), 0.0), "u0 must satisfy u0 <= a (|x| - b)^2");
  }
  SpeedResult res;
  std::vector<double> times;
  for (int k = 1; k < opts.snapshots; ++k) times.push_back(T * k / opts.snapshots);
  Solver solver(params, g, opts.solver);
  res.traj = solver.run(u0, T, times, [&](const SolverState& st) {
    if (st.t <= 0.0) return;
    res.required = std::max(res.required, required_speed(st.u, st.t, a, b));
    ++res.steps_checked;
  });
  auto passes = [&](double C) { return C >= res.required; };
  if (passes(0.0)) {
    res.found = true;
    res.C_star = 0.0;
  } else if (!passes(opts.C_max)) {
    res.found = false;
    res.C_star = opts.C_max;
  } else {
    double lo = 0.0, hi = opts.C_max;
    while (hi - lo > opts.rel_tol * hi) {
      const double mid = 0.5 * (lo + hi);
      (passes(mid) ? hi : lo) = mid;
      ++res.bisections;
    }
    res.found = true;
    res.C_star = hi;
  }
  res.report = check_upper(res.traj, {a, b, res.C_star});
  return res;
}

// ------------------------------------------------------------------- G bump

void GSpec::validate() const {
  require(x0 > 0.0, "GSpec x0 must be > 0");
  require(radius > 0.0, "GSpec radius must be > 0");
  require(amplitude > 0.0, "GSpec amplitude must be > 0");
  require(center - radius > -x0, "G support must lie in (-x0, inf)");
}

double GSpec::operator()(double x) const {
  const double z = (x - center) / radius;
  if (std::abs(z) >= 1.0) return 0.0;
  return amplitude * std::exp(-1.0 / (1.0 - z * z));
}

double GSpec::derivative(double x) const {
  const double z = (x - center) / radius;
  if (std::abs(z) >= 1.0) return 0.0;
  const double q = 1.0 - z * z;
  return amplitude * std::exp(-1.0 / q) * (-2.0 * z / (q * q)) / radius;
}

double GSpec::integral() const {
  auto f = [](double z) { return std::exp(-1.0 / (1.0 - z * z)); };
  const double unit =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 15, 1e-14);
  return amplitude * radius * unit;
}

GReport check_G(const GSpec& g, double s, const GWindow& w) {
  g.validate();
  require(s > 0.0 && s < 1.0, "check_G needs s in (0,1)");
  require(w.X > g.x0, "window must extend left of -x0");
  require(w.far > g.x0 && w.far <= w.X, "far-field point must lie in the window");
  require(w.h > 0.0, "window spacing must be > 0");
  const double left = -w.X - 4.0 * w.h;
  const double right = g.center + g.radius + 4.0 * w.h;
  const int n = static_cast<int>(std::ceil((right - left) / w.h));
  Grid grid = Grid::make(n, w.h, left, Topology::truncated_line);
  Field L = frac_laplacian(grid, [&](double x) { return g(x); }, s, TailModel::zero());
  GReport rep;
  rep.window_left = -w.X;
  rep.window_right = -g.x0;
  rep.C1_observed = g.amplitude * std::exp(-1.0);
  rep.C2_observed = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double x = grid.x(i);
    if (x < -w.X || x > -g.x0) continue;
    rep.C2_observed = std::min(rep.C2_observed, -L[i] * std::pow(std::abs(x), 1.0 + 2.0 * s));
  }
  // linear interpolation of the operator at -far
  const double pos = (-w.far - grid.x(0)) / w.h;
  const int i0 = static_cast<int>(std::floor(pos));
  const double f = pos - i0;
  const double Lfar = (1.0 - f) * L[i0] + f * L[i0 + 1];
  rep.far_ratio = -Lfar * std::pow(w.far, 1.0 + 2.0 * s);
  rep.far_expected = laplacian_constant(s) * g.integral();
  rep.pass = rep.C2_observed > 0.0;
  return rep;
}

// ------------------------------------------------------------ lower barrier

double barrier_gamma(const ModelParams& p) {
  if (p.m >= 2.0) throw PreconditionError("gamma undefined for m ≥ 2");
  return (2.0 * p.alpha() + p.m) / (2.0 - p.m);
}

LowerBarrier LowerBarrier::make(const ModelParams& p, double tau, double xi, double eps, double b,
                                const GSpec& G) {
  const double gamma = barrier_gamma(p);
  require(p.m > 1.0, "lower barrier needs m in (1,2)");
  require(tau > 0.0 && xi > 0.0 && eps >= 0.0 && b > 0.0,
          "lower barrier needs tau, xi, b > 0 and eps >= 0");
  G.validate();
  LowerBarrier phi;
  phi.tau = tau;
  phi.xi = xi;
  phi.eps_level = eps;
  phi.b_exp = b;
  phi.gamma = gamma;
  phi.m = p.m;
  phi.alpha = p.alpha();
  phi.G = G;
  return phi;
}

double LowerBarrier::psi(double x) const { return std::pow(std::abs(x) + xi, -gamma); }

double LowerBarrier::operator()(double x, double t) const {
  return std::pow(t + tau, b_exp * gamma) * spatial(x) - eps_level;
}

namespace {

void check_lower_regime(const ModelParams& p) {
  barrier_gamma(p);
  require(p.m > 1.0, "lower barrier needs m in (1,2)");
  require(p.s > 0.0 && p.s < 0.5, "lower barrier needs s in (0,1/2)");
}

// (-Lap)^alpha of psi and of unit-amplitude bumps on one quadrature grid.
class ProfileOperator {
 public:
  ProfileOperator(double alpha, const QuadratureWindow& q)
      : grid_(line_grid(q.X, q.h)), lap_(grid_.n, grid_.h, alpha) {}

  const Grid& grid() const { return grid_; }

  int node(double x) const {
    const long i = std::lround((x - grid_.x(0)) / grid_.h);
    require(i >= 0 && i < grid_.n, "lattice point outside the quadrature window");
    return static_cast<int>(i);
  }

  std::vector<double> psi_part(double gamma, double xi) const {
    auto psi = [=](double x) { return std::pow(std::abs(x) + xi, -gamma); };
    std::vector<double> f(static_cast<size_t>(grid_.n));
    for (int i = 0; i < grid_.n; ++i) f[static_cast<size_t>(i)] = psi(grid_.x(i));
    TailModel tail{0.0, 0.0, psi, psi};
    return lap_.apply(f, tail, grid_.x(0));
  }

  std::vector<double> bump_part(const GSpec& unit) const {
    require(unit.center + unit.radius < grid_.x_right(), "G support leaves the quadrature window");
    std::vector<double> f(static_cast<size_t>(grid_.n));
    for (int i = 0; i < grid_.n; ++i) f[static_cast<size_t>(i)] = unit(grid_.x(i));
    return lap_.apply(f, TailModel::zero(), grid_.x(0));
  }

 private:
  Grid grid_;
  FracLaplacianQuadrature lap_;
};

// Barrier profile data on lattice nodes.
struct NodeData {
  std::vector<double> x, psi, dpsi, g, dg, Lpsi, Lg;
};

NodeData node_data(const ProfileOperator& op, const std::vector<double>& xs, double gamma,
                   double xi, const GSpec& unit, const std::vector<double>& Lpsi,
                   const std::vector<double>& Lg) {
  NodeData d;
  for (double xr : xs) {
    const int i = op.node(xr);
    const double x = op.grid().x(i);
    d.x.push_back(x);
    d.psi.push_back(std::pow(std::abs(x) + xi, -gamma));
    d.dpsi.push_back(gamma * std::pow(std::abs(x) + xi, -gamma - 1.0));
    d.g.push_back(unit(x));
    d.dg.push_back(unit.derivative(x));
    d.Lpsi.push_back(Lpsi[static_cast<size_t>(i)]);
    d.Lg.push_back(Lg[static_cast<size_t>(i)]);
  }
  return d;
}

struct Terms {
  double time, space;
};

// |psi'| is the magnitude; on the left half line psi' > 0, G' adds with sign.
Terms terms_at(const NodeData& d, size_t j, double t, double tau, double bg, double A, double m) {
  const double S = d.psi[j] + A * d.g[j];
  const double sgn = d.x[j] < 0.0 ? 1.0 : -1.0;
  const double Sx = sgn * d.dpsi[j] + A * d.dg[j];
  const double LS = d.Lpsi[j] + A * d.Lg[j];
  const double T = t + tau;
  return {bg * std::pow(T, bg - 1.0) * S, std::pow(T, bg * m) * std::pow(std::abs(Sx), m - 1.0) * LS};
}

SubsolutionReport max_residual(const NodeData& d, const std::vector<double>& ts, double tau,
                               double bg, double A, double m) {
  SubsolutionReport r;
  r.residual_max = -std::numeric_limits<double>::infinity();
  for (double t : ts)
    for (size_t j = 0; j < d.x.size(); ++j) {
      Terms tm = terms_at(d, j, t, tau, bg, A, m);
      const double res = tm.time + tm.space;
      if (res > r.residual_max) r = {res, d.x[j], t, tm.time, tm.space};
    }
  return r;
}

}  // namespace

SubsolutionReport check_subsolution(const LowerBarrier& phi, const ModelParams& params,
                                    const Lattice& lattice, const QuadratureWindow& quad) {
  check_lower_regime(params);
  require(std::abs(phi.m - params.m) < 1e-15 && std::abs(phi.alpha - params.alpha()) < 1e-15,
          "barrier was built for different (m, s)");
  require(!lattice.x.empty() && !lattice.t.empty(), "lattice is empty");
  ProfileOperator op(params.alpha(), quad);
  GSpec unit = phi.G.scaled(1.0);
  auto Lpsi = op.psi_part(phi.gamma, phi.xi);
  auto Lg = op.bump_part(unit);
  NodeData d = node_data(op, lattice.x, phi.gamma, phi.xi, unit, Lpsi, Lg);
  return max_residual(d, lattice.t, phi.tau, phi.b_exp * phi.gamma, phi.G.amplitude, params.m);
}

double face_value(const Field& v, double M, double x) {
  const Grid& g = v.grid();
  const double pos = (x - g.x_left) / g.h - 1.0;  // face i sits at x_left + (i+1) h
  if (pos <= -1.0) return 0.0;
  if (pos >= g.n - 1) return M;
  const int i = static_cast<int>(std::floor(pos));
  const double f = pos - i;
  const double lo = i >= 0 ? v[i] : 0.0;
  return (1.0 - f) * lo + f * v[i + 1];
}

IntegratedTrajectory mirror(const IntegratedTrajectory& tr) {
  require(!tr.snapshots.empty(), "trajectory is empty");
  const Grid& g = tr.initial().grid();
  require(std::abs(g.x_left + g.x_right()) <= 1e-9 * g.h, "mirror needs a grid symmetric about 0");
  IntegratedTrajectory out = tr;
  out.snapshots.clear();
  const int n = g.n;
  for (const auto& sn : tr.snapshots) {
    std::vector<double> w(static_cast<size_t>(n));
    for (int j = 0; j + 1 < n; ++j) w[static_cast<size_t>(j)] = tr.M - sn.u[n - 2 - j];
    w[static_cast<size_t>(n - 1)] = tr.M;
    for (double& x : w) x = std::clamp(x, 0.0, tr.M);
    out.snapshots.push_back({sn.t, Field(g, std::move(w), FieldKind::integrated)});
  }
  return out;
}

namespace {

struct Candidate {
  size_t xi_i = 0, shape_i = 0;
  double b = 0.0, tau = 0.0;
  bool feasible = false;
  double log_gap = -std::numeric_limits<double>::infinity();
  double residual = std::numeric_limits<double>::infinity();
  double eps_low = 0.0, eps_high = 0.0, eps = 0.0, A = 0.0, below = 0.0;
  SubsolutionReport sub;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.feasible != b.feasible) return a.feasible;
  if (a.log_gap != b.log_gap) return a.log_gap > b.log_gap;
  return a.residual < b.residual;
}

}  // namespace

ProbeResult positivity_probe(double x1, double t1, const ModelParams& params,
                             const IntegratedTrajectory& v_traj, const ProbeOptions& opts) {
  check_lower_regime(params);
  const double gamma = barrier_gamma(params);
  require(t1 >= 0.0, "t1 must be >= 0");
  require(!v_traj.snapshots.empty(), "v trajectory is empty");
  require(params.m == v_traj.params.m && params.s == v_traj.params.s,
          "v trajectory has different (m, s)");
  ProbeResult res;
  res.mirrored = x1 > 0.0;
  const IntegratedTrajectory tr = res.mirrored ? mirror(v_traj) : v_traj;
  const double y1 = res.mirrored ? -x1 : x1;
  const double M = tr.M;
  const Grid& g = tr.initial().grid();

  std::vector<const Snapshot*> snaps;
  const Snapshot* at_t1 = nullptr;
  for (const auto& sn : tr.snapshots) {
    if (sn.t <= t1 * (1.0 + 1e-12) + 1e-300) snaps.push_back(&sn);
    if (std::abs(sn.t - t1) <= 1e-12 * std::max(1.0, t1)) at_t1 = &sn;
  }
  require(at_t1 != nullptr, "v trajectory has no snapshot at t1=" + format_double(t1));
  res.numeric_value = face_value(at_t1->u, M, y1);
  const Field& v0 = tr.initial();

  if (t1 == 0.0) {
    res.trivial = true;
    res.found = res.numeric_value > 0.0;
    res.lower_bound = res.numeric_value;
    return res;
  }

  // left edge of the initial support, in face positions
  int first = -1;
  for (int i = 0; i < g.n; ++i)
    if (v0[i] > 0.0) {
      first = i;
      break;
    }
  require(first >= 0, "v0 carries no mass");
  const double face_first = g.x_left + (first + 1) * g.h;
  res.x0 = std::max(g.h, -(face_first - g.h));
  const double x0 = res.x0;
  require(y1 < -x0, "x1 must lie outside the initial support");
  require(y1 > opts.omega_left, "x1 must lie inside the test window");

  Lattice lat;
  for (double x = opts.omega_left; x <= -x0 + 1e-12; x += opts.lattice_dx) lat.x.push_back(x);
  for (int k = 0; k < opts.lattice_nt; ++k)
    lat.t.push_back(t1 * k / std::max(opts.lattice_nt - 1, 1));
  res.lattice = lat;

  ProfileOperator op(params.alpha(), opts.quad);
  std::vector<GSpec> units;
  for (auto [c, r] : opts.shapes) units.push_back(GSpec{x0, c, r, 1.0});
  for (const auto& u : units) u.validate();
  std::vector<std::vector<double>> Lpsi, Lg;
  for (double xi : opts.xis) Lpsi.push_back(op.psi_part(gamma, xi));
  for (const auto& u : units) Lg.push_back(op.bump_part(u));
  std::vector<std::vector<NodeData>> nodes(opts.xis.size());
  for (size_t a = 0; a < opts.xis.size(); ++a)
    for (size_t b = 0; b < units.size(); ++b)
      nodes[a].push_back(node_data(op, lat.x, gamma, opts.xis[a], units[b], Lpsi[a], Lg[b]));

  // faces where Phi must stay below v: all faces at t=0, the lateral
  // region (x > -x0 or x < omega_left) at later snapshots
  std::vector<double> fx(static_cast<size_t>(g.n));
  for (int i = 0; i < g.n; ++i) fx[static_cast<size_t>(i)] = g.x_left + (i + 1) * g.h;
  std::vector<int> lat_faces;
  for (int i = 0; i < g.n; ++i) {
    const double x = fx[static_cast<size_t>(i)];
    if (x > -x0 || x < opts.omega_left) lat_faces.push_back(i);
  }
  std::vector<std::vector<double>> psi_f(opts.xis.size()), g_f(units.size());
  std::vector<std::vector<int>> g_support(units.size());
  for (size_t a = 0; a < opts.xis.size(); ++a)
    for (double x : fx) psi_f[a].push_back(std::pow(std::abs(x) + opts.xis[a], -gamma));
  for (size_t b = 0; b < units.size(); ++b)
    for (int i = 0; i < g.n; ++i) {
      g_f[b].push_back(units[b](fx[static_cast<size_t>(i)]));
      if (g_f[b].back() > 0.0) g_support[b].push_back(i);
    }

  std::vector<Candidate> cands;
  for (size_t a = 0; a < opts.xis.size(); ++a)
    for (size_t b = 0; b < units.size(); ++b)
      for (int kb = 1; kb <= opts.b_count; ++kb)
        for (int kt = 0; kt < opts.tau_count; ++kt) {
          Candidate c;
          c.xi_i = a;
          c.shape_i = b;
          c.b = static_cast<double>(kb) / opts.b_count;
          const double frac = opts.tau_count > 1 ? static_cast<double>(kt) / (opts.tau_count - 1) : 0.0;
          c.tau = opts.tau_min * std::pow(opts.tau_max / opts.tau_min, frac);
          cands.push_back(c);
        }

  parallel_for(cands.size(), opts.jobs, [&](size_t k) {
    Candidate& c = cands[k];
    const double xi = opts.xis[c.xi_i];
    const double bg = c.b * gamma;
    auto psi = [&](double x) { return std::pow(std::abs(x) + xi, -gamma); };
    c.eps_low = std::max(std::pow(c.tau, bg) * psi(x0),
                         std::pow(t1 + c.tau, bg) * psi(opts.omega_left));
    c.eps_high = std::pow(t1 + c.tau, bg) * psi(y1);
    c.log_gap = std::log(c.eps_high / c.eps_low);
    if (!(c.log_gap > 0.0)) return;
    c.eps = std::sqrt(c.eps_low * c.eps_high);
    // largest G amplitude keeping Phi <= v where G lives
    const auto& pf = psi_f[c.xi_i];
    const auto& gf = g_f[c.shape_i];
    double Amax = std::numeric_limits<double>::infinity();
    for (const Snapshot* sn : snaps) {
      const double P = std::pow(sn->t + c.tau, bg);
      for (int i : g_support[c.shape_i]) {
        const size_t k = static_cast<size_t>(i);
        Amax = std::min(Amax, (sn->u[i] + c.eps - P * pf[k]) / (P * gf[k]));
      }
    }
    if (!(Amax > 0.0) || !std::isfinite(Amax)) return;
    c.A = opts.amplitude_fraction * Amax;
    double below = std::numeric_limits<double>::infinity();
    for (const Snapshot* sn : snaps) {
      const double P = std::pow(sn->t + c.tau, bg);
      auto visit = [&](int i) {
        const size_t k = static_cast<size_t>(i);
        below = std::min(below, sn->u[i] - (P * (pf[k] + c.A * gf[k]) - c.eps));
      };
      if (sn->t == 0.0)
        for (int i = 0; i < g.n; ++i) visit(i);
      else
        for (int i : lat_faces) visit(i);
    }
    c.below = below;
    c.sub = max_residual(nodes[c.xi_i][c.shape_i], lat.t, c.tau, bg, c.A, params.m);
    c.residual = c.sub.residual_max;
    c.feasible = below >= 0.0 && c.residual < 0.0;
  });

  res.candidates = static_cast<long>(cands.size());
  const Candidate* best = nullptr;
  for (const auto& c : cands) {
    if (c.feasible) ++res.feasible;
    if (!best || better(c, *best)) best = &c;
  }
  res.found = best && best->feasible;
  if (best && best->A > 0.0) {
    GSpec G = units[best->shape_i].scaled(best->A);
    res.barrier = LowerBarrier::make(params, best->tau, opts.xis[best->xi_i], best->eps, best->b, G);
    res.residual_max = best->residual;
    res.eps_low = best->eps_low;
    res.eps_high = best->eps_high;
    res.below_margin = best->below;
    res.lower_bound = (*res.barrier)(y1, t1);
  }
  return res;
}

}  // namespace fracpme
