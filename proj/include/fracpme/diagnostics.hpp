#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fracpme/field.hpp"
#include "fracpme/trajectory.hpp"

namespace fracpme {

// Convex energy density with F(0) = F'(0) = 0 and F'' = (u+mu)^(1-m).
// Evaluated in a cancellation-free form; the printed m = 2 and m = 3
// formulas are used at those exact values.
double fmu(double u, double mu, double m);
// mu = 0 limit, defined for m in [1,2) and (2,3).
double fmu_limit(double u, double m);
bool fmu_limit_defined(double m);

double fmu_integral(const Field& u, double mu, double m);
// int u^(3-m); requires m <= 3.
double u3m_integral(const Field& u, double m);

// Recomputes the energy series of a regularized (mu > 0) trajectory.
// The dissipation accumulators come from the solver, which integrates
// them per step with the trapezoid rule.
std::vector<EnergyReport> energy_identity(const Trajectory& traj);

struct DissipationPoint {
  double t = 0.0;
  double u3m = 0.0;
  double c_gradH = 0.0;  // (2-m)(3-m) times the accumulated gradH term
  double residual = 0.0;
};

struct DissipationReport {
  double C = 0.0;
  std::vector<DissipationPoint> series;
  bool u3m_nonincreasing = true;
  double max_residual = 0.0;
};

// m in (1,2). Monotonicity is judged with slack 1e-10 * initial value.
DissipationReport dissipation_3m(const Trajectory& traj, double m);

struct TailFit {
  double slope = 0.0;  // -a for exponential, p for algebraic
  double intercept = 0.0;
  double rms = 0.0;    // RMS residual in log u
  int cells = 0;
};

struct TailMetrics {
  TailFit exp_fit;  // log u = c - a|x|, rate a = -slope
  TailFit alg_fit;  // log u = c + p log|x|
  bool exponential_better = false;
  double rate() const { return -exp_fit.slope; }
  double exponent() const { return alg_fit.slope; }
};

// Cells with r_lo <= |x| <= r_hi and u > 1e-30, excluding the outermost
// boundary_cells on each side. Needs at least 8 such cells.
struct TailWindow {
  double r_lo = 0.0;
  double r_hi = 0.0;
  int boundary_cells = 10;
};

TailMetrics tail_metrics(const Field& u, const TailWindow& window);

// Largest |x_i| with u_i > theta, 0 if none.
double support_radius(const Field& u, double theta);
// h * sum of u over cells with |x| > R0.
double mass_beyond(const Field& u, double R0);

enum class Regime { finite_evidence, infinite_evidence, inconclusive };
std::string to_string(Regime r);

struct PropagationOptions {
  double theta = 0.0;  // <= 0 selects 1e-10 * max u0
  double finite_factor = 10.0;
  double infinite_factor = 1e3;
  int boundary_cells = 10;
};

struct MassBeyond {
  double t = 0.0;
  double R0 = 0.0;
  double mass = 0.0;
};

struct PropagationReport {
  double theta = 0.0;
  double r0 = 0.0;
  double C_lin = 0.0;
  double domain_length = 0.0;
  std::vector<std::pair<double, double>> support_radius_series;
  std::vector<MassBeyond> mass_beyond;  // at 2 r0 and at 2 (r0 + C_lin T)
  std::optional<TailMetrics> tail_fit;  // final snapshot, |x| in [2 r0, edge]
  bool infinite_rule = false;
  bool finite_rule = false;
  Regime classification = Regime::inconclusive;
  PropagationOptions options;
};

// Rules, checked in this order:
//  infinite: mass beyond 2 r0 exceeds infinite_factor*theta*L at some
//            snapshot and the final tail fit prefers the algebraic model;
//  finite:   with C_lin the smallest slope bounding r(t) - r0 by C_lin t,
//            mass beyond 2 (r0 + C_lin T) stays below finite_factor*theta*L;
//  otherwise inconclusive.
// r0 is the exact support radius of u0, independent of theta.
// Throws PreconditionError when u > theta reaches the boundary_cells
// outermost cells.
PropagationReport check_propagation(const Trajectory& traj,
                                    const PropagationOptions& opts = {});

}  // namespace fracpme
