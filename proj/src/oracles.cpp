#include "fracpme/oracles.hpp"

#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <numbers>

namespace fracpme {

double poisson_value(double t, double x) {
  require(t > 0.0, "Poisson kernel needs t > 0");
  return t / (std::numbers::pi * (t * t + x * x));
}

Field poisson_kernel(double t, const Grid& grid) {
  require(t > 0.0, "Poisson kernel needs t > 0");
  return Field::sample(grid, [t](double x) { return poisson_value(t, x); }, FieldKind::density);
}

PoissonReport poisson_check(int n, double L, double t0, double t1, const SolverOptions& opts) {
  require(t0 > 0.0 && t1 >= t0, "poisson_check needs 0 < t0 <= t1");
  ModelParams p;
  p.m = 1.0;
  p.s = 0.5;
  p.R = L;
  Grid g = line_grid(L, 2.0 * L / n);
  Field u0 = poisson_kernel(t0, g);
  auto tr = run(p, u0, t1 - t0, {}, opts);
  Field ref = poisson_kernel(t1, g);
  PoissonReport r;
  r.n = n;
  r.L = L;
  r.t0 = t0;
  r.t1 = t1;
  r.error_l1_rel = l1_distance(tr.final(), ref) / integrate(ref);
  r.mass_initial = mass(u0);
  r.mass_final = mass(tr.final());
  return r;
}

double barenblatt_mex(double s) { return (1.0 + 6.0 * s - 2.0) / (1.0 + 2.0 * s); }

double barenblatt_beta(double s) { return 1.0 / (barenblatt_mex(s) - 1.0 + 2.0 - 2.0 * s); }

double barenblatt_lambda(double M, double s, double R) {
  const double B = std::sqrt(std::numbers::pi) * std::tgamma(s) / std::tgamma(s + 0.5);
  return M * std::pow(R, 2.0 * s) / B;
}

BarenblattSpec BarenblattSpec::make(double M, double s, double R) {
  require(s > 0.5 && s < 1.0, "Barenblatt profile needs s in (1/2, 1) in one dimension");
  require(M > 0.0 && std::isfinite(M), "Barenblatt mass must be > 0");
  require(R > 0.0 && std::isfinite(R), "Barenblatt width must be > 0");
  BarenblattSpec b;
  b.M = M;
  b.s = s;
  b.N = 1;
  b.m_ex = barenblatt_mex(s);
  b.beta = barenblatt_beta(s);
  b.lambda = barenblatt_lambda(M, s, R);
  b.R_prof = R;
  return b;
}

double BarenblattSpec::profile(double y) const {
  return lambda * std::pow(R_prof * R_prof + y * y, -(1.0 + 2.0 * s) / 2.0);
}

double BarenblattSpec::value(double x, double t) const {
  require(t > 0.0, "Barenblatt slice needs t > 0");
  const double sc = std::pow(t, -beta);
  return sc * profile(x * sc);
}

Field barenblatt_profile(const BarenblattSpec& spec, const Grid& grid) {
  return Field::sample(grid, [&](double y) { return spec.profile(y); }, FieldKind::density);
}

Field barenblatt_slice(const BarenblattSpec& spec, double t, const Grid& grid) {
  return Field::sample(grid, [&](double x) { return spec.value(x, t); }, FieldKind::density);
}

double barenblatt_R_analytic(double M, double s) {
  // P' = -beta y F^(2-m) integrates to a multiple of (R^2+y^2)^(-(1-2s)/2),
  // which is the potential of the profile up to c / R^(2s):
  // lambda^(m-1) = beta c R^(2s) / (1 - 2s).
  const double m = barenblatt_mex(s);
  const double beta = barenblatt_beta(s);
  const double c = std::pow(2.0, 2.0 * s) * std::tgamma((1.0 + 2.0 * s) / 2.0) /
                   std::tgamma((1.0 - 2.0 * s) / 2.0);
  const double B = std::sqrt(std::numbers::pi) * std::tgamma(s) / std::tgamma(s + 0.5);
  const double rhs = beta * c / ((1.0 - 2.0 * s) * std::pow(M / B, m - 1.0));
  return std::pow(rhs, 1.0 / (2.0 * s * (m - 2.0)));
}

namespace {

ModelParams barenblatt_params(const BarenblattSpec& spec, double L) {
  ModelParams p;
  p.m = spec.m_ex;
  p.s = spec.s;
  p.R = L;
  return p;
}

struct DriftRun {
  double drift = 0.0;
  double mass_drift = 0.0;
  double evenness = 0.0;
  long steps = 0;
};

DriftRun drift_run(const BarenblattSpec& spec, double t0, double t1, const SelfSimilarOptions& o) {
  require(t0 > 0.0 && t1 >= t0, "self-similar check needs 0 < t0 <= t1");
  Grid g = line_grid(o.L, 2.0 * o.L / o.n);
  Field u0 = barenblatt_slice(spec, t0, g);
  Field ref = barenblatt_slice(spec, t1, g);
  DriftRun d;
  if (t1 == t0) return d;
  auto tr = run(barenblatt_params(spec, o.L), u0, t1 - t0, {}, o.solver);
  const Field& u = tr.final();
  d.drift = l1_distance(u, ref) / integrate(ref);
  d.mass_drift = std::abs(mass(u) - mass(u0)) / mass(u0);
  double asym = 0.0;
  for (int i = 0; i < g.n; ++i) asym = std::max(asym, std::abs(u[i] - u[g.n - 1 - i]));
  d.evenness = asym / u.max();
  d.steps = tr.step_count;
  return d;
}

}  // namespace

double self_similar_drift(const BarenblattSpec& spec, double t0, double t1,
                          const SelfSimilarOptions& opts) {
  return drift_run(spec, t0, t1, opts).drift;
}

SelfSimilarReport self_similar_check(const BarenblattSpec& spec, double t0, double t1,
                                     const SelfSimilarOptions& opts) {
  SelfSimilarReport r;
  r.t0 = t0;
  r.t1 = t1;
  r.beta_used = spec.beta;
  r.analytic_R = barenblatt_R_analytic(spec.M, spec.s);
  BarenblattSpec use = spec;
  if (opts.calibrate) {
    require(opts.R_lo > 0.0 && opts.R_hi > opts.R_lo, "calibration bracket must be 0 < R_lo < R_hi");
    require(opts.horizon > 0.0, "calibration horizon must be > 0");
    auto obj = [&](double logR) {
      ++r.calibration_evals;
      return drift_run(spec.with_R(std::exp(logR)), t0, t0 + opts.horizon, opts).drift;
    };
    std::uintmax_t iters = 200;
    auto best = boost::math::tools::brent_find_minima(obj, std::log(opts.R_lo),
                                                      std::log(opts.R_hi), opts.bits, iters);
    use = spec.with_R(std::exp(best.first));
    r.calibration_drift = best.second;
  }
  r.calibrated_R = use.R_prof;
  r.spec = use;
  DriftRun d = drift_run(use, t0, t1, opts);
  r.drift = d.drift;
  r.mass_drift = d.mass_drift;
  r.evenness = d.evenness;
  r.steps = d.steps;
  return r;
}

}  // namespace fracpme
