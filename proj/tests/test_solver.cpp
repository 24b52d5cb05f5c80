#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fracpme/diagnostics.hpp"
#include "fracpme/solver.hpp"

using namespace fracpme;

namespace {

double box(double x) { return std::abs(x) < 1.0 ? 0.5 : 0.0; }

// P_t(x) = t / (pi (t^2 + x^2)), written out here independently of oracles.
double poisson(double t, double x) { return t / (std::numbers::pi * (t * t + x * x)); }

ModelParams params(double m, double s, double R) {
  ModelParams p;
  p.m = m;
  p.s = s;
  p.R = R;
  return p;
}

double rel_l1(const Field& a, const Field& b) { return l1_distance(a, b) / integrate(b); }

}  // namespace

TEST_CASE("zero datum stays zero") {
  for (double m : {1.0, 1.5, 3.0}) {
    ModelParams p = params(m, 0.25, 5.0);
    p.delta = 1e-3;
    p.mu = 1e-2;
    p.eps = 1e-3;
    Grid g = line_grid(5.0, 0.05);
    auto tr = run(p, Field::zeros(g, FieldKind::density), 0.1, {});
    CHECK(tr.final().max() == 0.0);
    CHECK(tr.final_time() == 0.1);
  }
}

TEST_CASE("grid must span [-R, R]") {
  Grid g = Grid::span(128, -4.0, 4.0, Topology::truncated_line);
  CHECK_THROWS_AS(Solver(params(1.5, 0.25, 5.0), g), PreconditionError);
  CHECK_NOTHROW(Solver(params(1.5, 0.25, 4.0), g));
  Grid per = Grid::make(128, 1.0 / 16, -4.0, Topology::periodic);
  CHECK_THROWS_AS(Solver(params(1.5, 0.25, 4.0), per), PreconditionError);
}

TEST_CASE("accepted steps conserve mass and keep the discrete maximum principle") {
  for (double m : {1.5, 2.0, 3.0}) {
    ModelParams p = params(m, 0.25, 20.0);
    Grid g = line_grid(20.0, 40.0 / 1024);
    Solver sol(p, g);
    Field u0 = Field::sample(g, box, FieldKind::density);
    const double m0 = mass(u0);
    SolverState st = sol.initial_state(u0);
    double prev_max = u0.max();
    for (int k = 0; k < 200; ++k) {
      sol.advance(st, 10.0);
      CHECK(std::abs(mass(st.u) - m0) <= 1e-13 * m0);
      CHECK(st.u.min() >= 0.0);
      CHECK(st.u.max() <= prev_max * (1 + 1e-12));
      prev_max = st.u.max();
    }
    CHECK(st.t > 0.0);
  }
}

TEST_CASE("snapshot clipping lands exactly on the requested times") {
  ModelParams p = params(1.5, 0.25, 10.0);
  Grid g = line_grid(10.0, 20.0 / 512);
  Field u0 = Field::sample(g, box, FieldKind::density);
  Solver sol(p, g);
  SolverState st = sol.initial_state(u0);
  SolverState one = sol.step(st, 1.0);
  const double dt1 = one.t;
  CHECK(dt1 < 1.0);

  auto tiny = sol.run(u0, 0.5 * dt1, {});
  REQUIRE(tiny.snapshots.size() == 2);
  CHECK(tiny.final_time() == 0.5 * dt1);
  CHECK(tiny.step_count == 1);

  const double T = 0.0371;
  auto tr = sol.run(u0, T, {0.0, 0.01, 0.02, T});
  REQUIRE(tr.snapshots.size() == 4);
  CHECK(tr.snapshots[1].t == 0.01);
  CHECK(tr.snapshots[2].t == 0.02);
  CHECK(tr.final_time() == T);
  for (size_t k = 1; k < tr.snapshots.size(); ++k)
    CHECK(tr.snapshots[k].t > tr.snapshots[k - 1].t);
  CHECK_THROWS_AS(sol.run(u0, T, {2 * T}), PreconditionError);
}

TEST_CASE("m=1 scheme is linear in u") {
  ModelParams p = params(1.0, 0.25, 10.0);
  Grid g = line_grid(10.0, 20.0 / 512);
  Solver sol(p, g);
  Field u = Field::sample(g, [](double x) { return std::exp(-x * x); }, FieldKind::density);
  const double a = 3.7;
  Field au = Field::sample(g, [&](double x) { return a * std::exp(-x * x); },
                           FieldKind::density);
  // a short t_stop makes both steps take the same clipped dt
  const double tstop = 1e-4;
  auto s1 = sol.step(sol.initial_state(u), tstop);
  auto s2 = sol.step(sol.initial_state(au), tstop);
  REQUIRE(s1.t == tstop);
  REQUIRE(s2.t == tstop);
  double err = 0.0;
  for (int i = 0; i < g.n; ++i) err = std::max(err, std::abs(s2.u[i] - a * s1.u[i]));
  CHECK(err <= 1e-12 * a * u.max());
}

TEST_CASE("fractional heat flow from the Poisson kernel converges under refinement") {
  ModelParams p = params(1.0, 0.5, 100.0);
  double prev = 1.0;
  for (int n : {1024, 2048}) {
    Grid g = line_grid(100.0, 200.0 / n);
    Field u0 = Field::sample(g, [](double x) { return poisson(1.0, x); }, FieldKind::density);
    Field exact = Field::sample(g, [](double x) { return poisson(2.0, x); }, FieldKind::density);
    auto tr = run(p, u0, 1.0, {});
    double e = rel_l1(tr.final(), exact);
    MESSAGE("n=" << n << " rel L1 " << e);
    CHECK(e < 0.05);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("m=2 box datum: support nondecreasing and L-infinity nonincreasing") {
  ModelParams p = params(2.0, 0.25, 10.0);
  Grid g = line_grid(10.0, 20.0 / 1024);
  Field u0 = Field::sample(g, box, FieldKind::density);
  std::vector<double> times;
  for (int k = 1; k <= 10; ++k) times.push_back(0.1 * k);
  auto tr = run(p, u0, 1.0, times);
  double r = 0.0, linf = 1e300;
  for (const auto& sn : tr.snapshots) {
    double rr = support_radius(sn.u, 1e-10 * u0.max());
    CHECK(rr >= r);
    CHECK(sn.u.max() <= linf * (1 + 1e-12));
    r = rr;
    linf = sn.u.max();
  }
  CHECK(r > 1.0);
}

TEST_CASE("energy accumulators are nondecreasing") {
  ModelParams p = params(1.5, 0.25, 10.0);
  p.delta = 1e-3;
  p.mu = 1e-2;
  p.eps = 1e-3;
  Grid g = line_grid(10.0, 20.0 / 512);
  auto tr = run(p, Field::sample(g, box, FieldKind::density), 0.2, {0.05, 0.1, 0.15});
  for (size_t k = 1; k < tr.diagnostics.size(); ++k) {
    CHECK(tr.diagnostics[k].visc_dissip_accum >= tr.diagnostics[k - 1].visc_dissip_accum);
    CHECK(tr.diagnostics[k].gradH_dissip_accum >= tr.diagnostics[k - 1].gradH_dissip_accum);
    CHECK(tr.diagnostics[k].fmu_integral <= tr.diagnostics[0].fmu_integral);
  }
  CHECK(tr.diagnostics.back().identity_residual < 0.1);
}

TEST_CASE("regrid and line grids") {
  Grid a = line_grid(5.0, 0.1);
  CHECK(a.n == 100);
  CHECK_THROWS_AS(line_grid(5.0, 0.3), PreconditionError);
  Grid b = line_grid(7.0, 0.1);
  Field u = Field::sample(a, box, FieldKind::density);
  Field v = regrid(u, b);
  CHECK(mass(v) == doctest::Approx(mass(u)));
  CHECK(l1_distance(regrid(v, a), u) == 0.0);
  Grid off = Grid::make(100, 0.1, -4.95, Topology::truncated_line);
  CHECK_THROWS_AS(regrid(u, off), PreconditionError);
}

TEST_CASE("vanishing sweep") {
  ModelParams p = params(1.5, 0.25, 10.0);
  p.mu = 1e-2;
  p.eps = 1e-3;
  Grid g = line_grid(10.0, 20.0 / 256);
  Field u0 = Field::sample(g, box, FieldKind::density);

  auto one = vanishing_sweep(p, u0, 0.1, {{1e-3, 1e-2, 1e-3, 10.0}});
  CHECK(one.distances.empty());
  CHECK(one.errors[0].empty());

  std::vector<Rung> ladder{{4e-3, 1e-2, 1e-3, 10.0}, {2e-3, 1e-2, 1e-3, 10.0},
                           {1e-3, 1e-2, 1e-3, 10.0}};
  auto serial = vanishing_sweep(p, u0, 0.2, ladder, {}, 1);
  auto par = vanishing_sweep(p, u0, 0.2, ladder, {}, 3);
  REQUIRE(serial.distances.size() == 2);
  CHECK(serial.decreasing);
  for (size_t k = 0; k < 2; ++k) CHECK(serial.distances[k] == par.distances[k]);
  for (size_t k = 0; k < 3; ++k)
    CHECK(l1_distance(serial.runs[k]->final(), par.runs[k]->final()) == 0.0);

  std::vector<Rung> bad{{1e-3, 1e-2, 1e-3, 10.0}, {2e-3, 1e-2, 1e-3, 10.0}};
  CHECK_THROWS_AS(vanishing_sweep(p, u0, 0.1, bad), PreconditionError);

  std::vector<Rung> wider{{1e-3, 1e-2, 1e-3, 10.0}, {1e-3, 1e-2, 1e-3, 12.5}};
  auto w = vanishing_sweep(p, u0, 0.1, wider);
  REQUIRE(w.distances.size() == 1);
  CHECK(std::isfinite(w.distances[0]));
  CHECK(w.runs[1]->final().size() == 320);
}
