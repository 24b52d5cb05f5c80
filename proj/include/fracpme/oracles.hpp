#pragma once

#include <optional>

#include "fracpme/field.hpp"
#include "fracpme/params.hpp"
#include "fracpme/solver.hpp"

namespace fracpme {

// P_t(x) = t / (pi (t^2 + x^2)), the m=1, s=1/2 heat kernel.
double poisson_value(double t, double x);
Field poisson_kernel(double t, const Grid& grid);

struct PoissonReport {
  int n = 0;
  double L = 0.0;  // domain [-L, L]
  double t0 = 1.0;
  double t1 = 2.0;
  double error_l1_rel = 0.0;
  double mass_initial = 0.0;
  double mass_final = 0.0;
};

// Evolves P_t0 with the m=1, s=1/2 solver to t1 and compares with P_t1.
PoissonReport poisson_check(int n, double L, double t0 = 1.0, double t1 = 2.0,
                            const SolverOptions& opts = {});

// F(y) = lambda (R^2 + y^2)^(-(1+2s)/2) in one dimension.
struct BarenblattSpec {
  double M = 1.0;
  double s = 0.75;
  int N = 1;
  double m_ex = 1.4;
  double beta = 0.0;
  double lambda = 0.0;
  double R_prof = 1.0;

  // s must lie in (1/2, 1); lambda normalizes the mass to M at R.
  static BarenblattSpec make(double M, double s, double R);
  BarenblattSpec with_R(double R) const { return make(M, s, R); }
  double profile(double y) const;
  // t^(-beta) F(x t^(-beta))
  double value(double x, double t) const;
};

double barenblatt_mex(double s);
// 1 / (m - 1 + 2 - 2s), from mass-preserving scaling.
double barenblatt_beta(double s);
// lambda = M R^(2s) Gamma(s + 1/2) / (sqrt(pi) Gamma(s))
double barenblatt_lambda(double M, double s, double R);

Field barenblatt_profile(const BarenblattSpec& spec, const Grid& grid);
Field barenblatt_slice(const BarenblattSpec& spec, double t, const Grid& grid);

// Width matching the stationary profile equation for the rescaled problem
// with the spectral pressure. Informational; the check calibrates R.
double barenblatt_R_analytic(double M, double s);

struct SelfSimilarOptions {
  int n = 8192;
  double L = 200.0;
  bool calibrate = true;
  double R_lo = 0.05;
  double R_hi = 20.0;
  double horizon = 0.1;  // calibration runs over [t0, t0 + horizon]
  int bits = 20;         // Brent precision on log R
  SolverOptions solver;
};

struct SelfSimilarReport {
  BarenblattSpec spec;
  double t0 = 1.0;
  double t1 = 2.0;
  double drift = 0.0;  // relative L1 distance at t1
  double calibrated_R = 0.0;
  double calibration_drift = 0.0;
  double analytic_R = 0.0;
  double beta_used = 0.0;
  double mass_drift = 0.0;  // relative
  double evenness = 0.0;    // max |u(x) - u(-x)| / max u at t1
  int calibration_evals = 0;
  long steps = 0;
};

// Relative L1 distance at t1 after evolving the t0 slice.
double self_similar_drift(const BarenblattSpec& spec, double t0, double t1,
                          const SelfSimilarOptions& opts = {});
SelfSimilarReport self_similar_check(const BarenblattSpec& spec, double t0, double t1,
                                     const SelfSimilarOptions& opts = {});

}  // namespace fracpme
