#include "fracpme/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace fracpme {

namespace {

// expm1(e L) / e, continuous at e = 0.
double expm1_ratio(double e, double L) {
  if (e == 0.0) return L;
  return std::expm1(e * L) / e;
}

struct LineFit {
  double slope, intercept, rms;
};

LineFit least_squares(const std::vector<double>& X, const std::vector<double>& Y) {
  const double n = static_cast<double>(X.size());
  double mx = 0, my = 0;
  for (size_t i = 0; i < X.size(); ++i) {
    mx += X[i];
    my += Y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  double slope = sxx > 0 ? sxy / sxx : 0.0;
  double icpt = my - slope * mx;
  double ss = 0;
  for (size_t i = 0; i < X.size(); ++i) {
    double r = Y[i] - (icpt + slope * X[i]);
    ss += r * r;
  }
  return {slope, icpt, std::sqrt(ss / n)};
}

}  // namespace

double fmu(double u, double mu, double m) {
  require(mu > 0.0, "fmu needs mu > 0");
  require(u >= 0.0, "fmu needs u >= 0");
  require(m >= 1.0, "fmu needs m >= 1");
  if (u == 0.0) return 0.0;
  const double r = u / mu;
  const double L = std::log1p(r);
  if (m == 2.0) return (u + mu) * L - u;
  if (m == 3.0) return r - L;
  const double scale = std::pow(mu, 3.0 - m);
  if (m < 2.5) {
    const double e = 2.0 - m;
    return scale * ((1.0 + r) * expm1_ratio(e, L) - r) / (1.0 + e);
  }
  const double e3 = 3.0 - m;
  return scale * (expm1_ratio(e3, L) - r) / (e3 - 1.0);
}

bool fmu_limit_defined(double m) { return m >= 1.0 && m < 3.0 && m != 2.0; }

double fmu_limit(double u, double m) {
  require(fmu_limit_defined(m), "mu = 0 energy density needs m in [1,2) or (2,3)");
  if (u == 0.0) return 0.0;
  return std::pow(u, 3.0 - m) / ((2.0 - m) * (3.0 - m));
}

double fmu_integral(const Field& u, double mu, double m) {
  double s = 0.0;
  if (mu > 0.0) {
    for (double v : u.values()) s += fmu(v, mu, m);
  } else {
    for (double v : u.values()) s += fmu_limit(v, m);
  }
  return s * u.grid().h;
}

double u3m_integral(const Field& u, double m) {
  require(m <= 3.0, "u^(3-m) integral needs m <= 3");
  double s = 0.0;
  for (double v : u.values()) s += v > 0.0 ? std::pow(v, 3.0 - m) : 0.0;
  return s * u.grid().h;
}

std::vector<EnergyReport> energy_identity(const Trajectory& traj) {
  const ModelParams& p = traj.params;
  require(p.mu > 0.0, "energy identity needs a regularized run with mu > 0");
  require(traj.diagnostics.size() == traj.snapshots.size(),
          "trajectory diagnostics do not match its snapshots");
  std::vector<EnergyReport> out;
  const double f0 = fmu_integral(traj.initial(), p.mu, p.m);
  for (size_t k = 0; k < traj.snapshots.size(); ++k) {
    EnergyReport r = traj.diagnostics[k];
    const Field& u = traj.snapshots[k].u;
    r.t = traj.snapshots[k].t;
    r.mass = mass(u);
    r.linf = u.max();
    r.fmu_integral = fmu_integral(u, p.mu, p.m);
    double lhs = r.fmu_integral + r.visc_dissip_accum + r.gradH_dissip_accum;
    r.identity_residual = f0 > 0.0 ? std::abs(lhs - f0) / f0 : 0.0;
    out.push_back(r);
  }
  return out;
}

DissipationReport dissipation_3m(const Trajectory& traj, double m) {
  require(m > 1.0 && m < 2.0, "dissipation_3m needs m in (1,2)");
  require(traj.diagnostics.size() == traj.snapshots.size(),
          "trajectory diagnostics do not match its snapshots");
  DissipationReport rep;
  rep.C = (2.0 - m) * (3.0 - m);
  const double i0 = u3m_integral(traj.initial(), m);
  double prev = i0;
  for (size_t k = 0; k < traj.snapshots.size(); ++k) {
    DissipationPoint pt;
    pt.t = traj.snapshots[k].t;
    pt.u3m = u3m_integral(traj.snapshots[k].u, m);
    pt.c_gradH = rep.C * traj.diagnostics[k].gradH_dissip_accum;
    pt.residual = i0 > 0.0 ? std::abs(pt.u3m + pt.c_gradH - i0) / i0 : 0.0;
    if (pt.u3m > prev + 1e-10 * i0) rep.u3m_nonincreasing = false;
    prev = pt.u3m;
    rep.max_residual = std::max(rep.max_residual, pt.residual);
    rep.series.push_back(pt);
  }
  return rep;
}

TailMetrics tail_metrics(const Field& u, const TailWindow& w) {
  require(u.kind() == FieldKind::density, "tail metrics need a density");
  const Grid& g = u.grid();
  std::vector<double> ax, lx, ly;
  for (int i = w.boundary_cells; i < g.n - w.boundary_cells; ++i) {
    double r = std::abs(g.x(i));
    if (r < w.r_lo || r > w.r_hi || u[i] <= 1e-30 || r <= 0.0) continue;
    ax.push_back(r);
    lx.push_back(std::log(r));
    ly.push_back(std::log(u[i]));
  }
  require(ax.size() >= 8, "tail window has " + std::to_string(ax.size()) +
                              " usable cells, need at least 8");
  TailMetrics tm;
  auto e = least_squares(ax, ly);
  auto a = least_squares(lx, ly);
  tm.exp_fit = {e.slope, e.intercept, e.rms, static_cast<int>(ax.size())};
  tm.alg_fit = {a.slope, a.intercept, a.rms, static_cast<int>(ax.size())};
  tm.exponential_better = e.rms < a.rms;
  return tm;
}

double support_radius(const Field& u, double theta) {
  double r = 0.0;
  for (int i = 0; i < u.size(); ++i)
    if (u[i] > theta) r = std::max(r, std::abs(u.grid().x(i)));
  return r;
}

double mass_beyond(const Field& u, double R0) {
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i)
    if (std::abs(u.grid().x(i)) > R0) s += u[i];
  return s * u.grid().h;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::finite_evidence: return "finite_evidence";
    case Regime::infinite_evidence: return "infinite_evidence";
    case Regime::inconclusive: return "inconclusive";
  }
  return "?";
}

PropagationReport check_propagation(const Trajectory& traj, const PropagationOptions& opts) {
  require(!traj.snapshots.empty(), "trajectory is empty");
  PropagationReport rep;
  rep.options = opts;
  const Field& u0 = traj.initial();
  const Grid& g = u0.grid();
  rep.theta = opts.theta > 0.0 ? opts.theta : 1e-10 * u0.max();
  rep.r0 = support_radius(u0, 0.0);
  rep.domain_length = g.length();
  const int bc = opts.boundary_cells;
  for (const auto& sn : traj.snapshots) {
    for (int i = 0; i < g.n; ++i) {
      bool edge = i < bc || i >= g.n - bc;
      if (edge && sn.u[i] > rep.theta)
        throw PreconditionError("support reaches the boundary at t=" + format_double(sn.t) +
                                "; run invalid for classification");
    }
  }
  double clin = 0.0;
  for (const auto& sn : traj.snapshots) {
    double r = support_radius(sn.u, rep.theta);
    rep.support_radius_series.emplace_back(sn.t, r);
    if (sn.t > 0.0) clin = std::max(clin, (r - rep.r0) / sn.t);
  }
  rep.C_lin = clin;
  const double T = traj.final_time();
  const double L = rep.domain_length;
  const double R_inf = 2.0 * rep.r0;
  const double R_fin = 2.0 * (rep.r0 + clin * T);
  bool big_mass = false, small_mass = true;
  for (const auto& sn : traj.snapshots) {
    double mi = mass_beyond(sn.u, R_inf);
    double mf = mass_beyond(sn.u, R_fin);
    rep.mass_beyond.push_back({sn.t, R_inf, mi});
    rep.mass_beyond.push_back({sn.t, R_fin, mf});
    if (mi > opts.infinite_factor * rep.theta * L) big_mass = true;
    if (!(mf < opts.finite_factor * rep.theta * L)) small_mass = false;
  }
  try {
    rep.tail_fit = tail_metrics(traj.final(), {R_inf, g.x_right(), bc});
  } catch (const PreconditionError&) {
    rep.tail_fit.reset();
  }
  rep.infinite_rule = big_mass && rep.tail_fit && !rep.tail_fit->exponential_better;
  rep.finite_rule = small_mass;
  if (rep.infinite_rule)
    rep.classification = Regime::infinite_evidence;
  else if (rep.finite_rule)
    rep.classification = Regime::finite_evidence;
  else
    rep.classification = Regime::inconclusive;
  return rep;
}

}  // namespace fracpme
