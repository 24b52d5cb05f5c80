#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "fracpme/field.hpp"
#include "fracpme/integrated.hpp"
#include "fracpme/params.hpp"
#include "fracpme/solver.hpp"
#include "fracpme/trajectory.hpp"

namespace fracpme {

// U(x,t) = a * pos(C t - (|x| - b))^2.
struct UpperBarrier {
  double a = 1.0;
  double b = 1.0;
  double C = 0.0;

  void validate() const;
  double operator()(double x, double t) const;
};

struct BarrierViolation {
  double t = 0.0;
  double x = 0.0;
  double u = 0.0;
  double U = 0.0;
};

struct UpperReport {
  UpperBarrier barrier;
  double margin_min = 0.0;  // min over snapshots and cells of U - u
  bool holds = false;
  std::optional<BarrierViolation> first_violation;
  std::vector<std::pair<double, double>> margin_curve;  // (t, min_x U - u)
};

// Throws PreconditionError when u0 > U(., 0) somewhere.
UpperReport check_upper(const Trajectory& traj, const UpperBarrier& barrier);

// Smallest speed C for which U >= u holds at one accepted state, i.e. the
// max over cells with u > 0 of ((|x| - b) + sqrt(u/a)) / t.
double required_speed(const Field& u, double t, double a, double b);

struct SpeedOptions {
  double C_max = 1e3;
  double rel_tol = 1e-6;
  int snapshots = 100;  // uniform snapshots kept for the margin curve
  SolverOptions solver;
};

struct SpeedResult {
  bool found = false;
  double C_star = 0.0;
  double required = 0.0;  // max over all accepted steps of required_speed
  int bisections = 0;
  long steps_checked = 0;
  UpperReport report;     // check_upper at C_star (or C_max) on the snapshots
  Trajectory traj;
};

// One run of the solver; C only enters the check, so every accepted step
// is tested against each bisection candidate. Needs m > 2 and u0 <= U(.,0)
// with support in [-b, b].
SpeedResult find_speed(const ModelParams& params, const Field& u0, double a, double b,
                       double T, const SpeedOptions& opts = {});

// Smooth bump amplitude * exp(-1/(1 - z^2)), z = (x - center)/radius.
struct GSpec {
  double x0 = 2.0;
  double center = 0.0;
  double radius = 1.0;
  double amplitude = 1.0;

  void validate() const;
  double operator()(double x) const;
  double derivative(double x) const;
  double integral() const;
  GSpec scaled(double amp) const { return {x0, center, radius, amp}; }
};

struct GWindow {
  double X = 60.0;    // window is [-X, -x0]
  double h = 0.01;
  double far = 50.0;  // far-field ratio is read at x = -far
};

struct GReport {
  double C1_observed = 0.0;
  double C2_observed = 0.0;
  double far_ratio = 0.0;     // -(-Lap)^s G(-far) * far^(1+2s)
  double far_expected = 0.0;  // C(s) * integral of G
  double window_left = 0.0;
  double window_right = 0.0;
  bool pass = false;
};

GReport check_G(const GSpec& g, double s, const GWindow& window = {});

// Phi(x,t) = (t + tau)^(b gamma) ((|x| + xi)^(-gamma) + G(x)) - eps,
// gamma = (2 alpha + m)/(2 - m), alpha = 1 - s.
struct LowerBarrier {
  double tau = 1.0;
  double xi = 1.0;
  double eps_level = 0.0;
  double b_exp = 1.0;
  double gamma = 0.0;
  double m = 1.5;
  double alpha = 0.75;
  GSpec G;

  // Throws PreconditionError "gamma undefined for m >= 2" when m >= 2.
  static LowerBarrier make(const ModelParams& p, double tau, double xi, double eps, double b,
                           const GSpec& G);
  double psi(double x) const;
  double spatial(double x) const { return psi(x) + G(x); }
  double operator()(double x, double t) const;
};

double barrier_gamma(const ModelParams& p);

struct Lattice {
  std::vector<double> x;
  std::vector<double> t;
};

// Quadrature grid on which (-Lap)^alpha of the barrier profile is
// evaluated; the algebraic tail beyond it is integrated as an excess tail.
struct QuadratureWindow {
  double X = 100.0;
  double h = 0.02;
};

struct SubsolutionReport {
  double residual_max = 0.0;
  double x_at = 0.0;
  double t_at = 0.0;
  // Phi_t and |Phi_x|^(m-1) (-Lap)^alpha Phi at the maximizer
  double time_term = 0.0;
  double space_term = 0.0;
};

// max over the lattice of Phi_t + |Phi_x|^(m-1) (-Lap)^alpha Phi. Lattice
// x values are snapped to the nearest quadrature node.
SubsolutionReport check_subsolution(const LowerBarrier& phi, const ModelParams& params,
                                    const Lattice& lattice, const QuadratureWindow& quad = {});

struct ProbeOptions {
  std::vector<double> xis{50.0, 100.0, 200.0};
  std::vector<std::pair<double, double>> shapes{{25.0, 23.0}, {10.0, 8.0}};  // (center, radius)
  int b_count = 20;       // b_exp on (0, 1]
  int tau_count = 30;     // log-spaced in [tau_min, tau_max]
  double tau_min = 1e-3;
  double tau_max = 10.0;
  double omega_left = -50.0;
  double lattice_dx = 0.25;
  int lattice_nt = 21;
  double amplitude_fraction = 0.9;
  QuadratureWindow quad;
  int jobs = 1;
};

struct ProbeResult {
  bool found = false;
  bool trivial = false;
  bool mirrored = false;  // x1 > 0: the probe ran on M - v(-x)
  std::optional<LowerBarrier> barrier;
  double lower_bound = 0.0;  // bound on v(x1,t1), or on M - v(x1,t1) when mirrored
  double numeric_value = 0.0;  // the same quantity from the v trajectory
  double residual_max = 0.0;
  double eps_low = 0.0;
  double eps_high = 0.0;
  double x0 = 0.0;
  double below_margin = 0.0;  // min of v - Phi at t=0 and on the lateral region
  long candidates = 0;
  long feasible = 0;
  Lattice lattice;
};

// Grid search over (xi, G shape, b_exp, tau); eps and the G amplitude are
// derived from the v trajectory (see the ledger). v_traj needs snapshots
// covering [0, t1] on a grid symmetric about 0 when x1 > 0.
ProbeResult positivity_probe(double x1, double t1, const ModelParams& params,
                             const IntegratedTrajectory& v_traj, const ProbeOptions& opts = {});

// M - v(-x) on the same symmetric grid.
IntegratedTrajectory mirror(const IntegratedTrajectory& v_traj);

// Value of an integrated field at a face position by linear interpolation.
double face_value(const Field& v, double M, double x);

}  // namespace fracpme
