#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "doctest.h"
#include "fracpme/diagnostics.hpp"

using namespace fracpme;

namespace {

// F(u) = int_0^u (u - v) (v + mu)^(1-m) dv, the unique F with F(0) = F'(0) = 0
// and F'' = (u+mu)^(1-m).
double fmu_oracle(double u, double mu, double m) {
  auto f = [&](double v) { return (u - v) * std::pow(v + mu, 1.0 - m); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, u, 15, 1e-14);
}

Grid line(int n, double L) { return Grid::span(n, -L / 2, L / 2, Topology::truncated_line); }

Trajectory synthetic(const Grid& g, const std::function<double(double)>& later) {
  Trajectory tr;
  tr.params.m = 1.5;
  tr.snapshots.push_back({0.0, Field::sample(
                                   g, [](double x) { return std::abs(x) < 1.0 ? 0.5 : 0.0; },
                                   FieldKind::density)});
  tr.snapshots.push_back({1.0, Field::sample(g, later, FieldKind::density)});
  tr.diagnostics.resize(2);
  return tr;
}

}  // namespace

TEST_CASE("fmu vanishes at zero and matches the m=2 closed value") {
  for (double m : {1.2, 1.5, 2.0, 2.5, 3.0, 4.0}) CHECK(fmu(0.0, 0.01, m) == 0.0);
  const double mu = 0.3;
  CHECK(fmu(mu, mu, 2.0) == doctest::Approx(2 * mu * std::log(2.0) - mu).epsilon(1e-14));
  CHECK_THROWS_AS(fmu(1.0, 0.0, 1.5), PreconditionError);
  CHECK_THROWS_AS(fmu(-1.0, 0.1, 1.5), PreconditionError);
}

TEST_CASE("fmu agrees with direct quadrature of F'' = (u+mu)^(1-m)") {
  for (double m : {1.0, 1.3, 1.5, 1.99, 2.0, 2.3, 2.5, 2.7, 3.0, 3.4, 5.0})
    for (double mu : {1e-3, 1e-2, 1.0})
      for (double u : {1e-4, 0.1, 1.0, 10.0}) {
        double ref = fmu_oracle(u, mu, m);
        CHECK(std::abs(fmu(u, mu, m) - ref) <= 1e-10 * std::abs(ref) + 1e-300);
      }
}

TEST_CASE("fmu branch continuity near m=2 and m=3") {
  const double mu = 0.01;
  for (double mc : {2.0, 3.0})
    for (double u : {0.1, 1.0, 10.0}) {
      double f = fmu(u, mu, mc);
      for (double d : {-1e-6, 1e-6}) CHECK(std::abs(fmu(u, mu, mc + d) - f) < 1e-4 * (1 + f));
      // the stable form is smooth in m, so the bound holds with room to spare
      CHECK(std::abs(fmu(u, mu, mc + 1e-9) - f) < 1e-8 * (1 + f));
    }
}

TEST_CASE("fmu is convex in u on every branch") {
  for (double m : {1.1, 1.5, 2.0, 2.0001, 2.6, 3.0, 2.9999, 4.0}) {
    const double mu = 0.05, du = 1e-3;
    for (int k = 1; k < 2000; ++k) {
      double u = k * du;
      double d2 = fmu(u + du, mu, m) - 2 * fmu(u, mu, m) + fmu(u - du, mu, m);
      CHECK(d2 >= -1e-12);
      CHECK(fmu(u, mu, m) >= 0.0);
    }
  }
}

TEST_CASE("mu = 0 limit of fmu") {
  CHECK(fmu_limit(2.0, 1.5) == doctest::Approx(std::pow(2.0, 1.5) / 0.75));
  CHECK_FALSE(fmu_limit_defined(2.0));
  CHECK_FALSE(fmu_limit_defined(3.5));
  CHECK_THROWS_AS(fmu_limit(1.0, 2.0), PreconditionError);
  CHECK(std::abs(fmu(1.0, 1e-9, 1.5) - fmu_limit(1.0, 1.5)) < 1e-3);
}

TEST_CASE("dissipation constant and preconditions") {
  Grid g = line(64, 8.0);
  Trajectory tr = synthetic(g, [](double) { return 0.0; });
  CHECK_THROWS_AS(dissipation_3m(tr, 2.0), PreconditionError);
  CHECK_THROWS_AS(dissipation_3m(tr, 1.0), PreconditionError);
  auto rep = dissipation_3m(tr, 1.5);
  CHECK(rep.C == doctest::Approx(0.75));
  CHECK(rep.u3m_nonincreasing);

  Trajectory zero;
  zero.params.m = 1.5;
  zero.params.mu = 0.1;
  zero.snapshots.push_back({0.0, Field::zeros(g, FieldKind::density)});
  zero.snapshots.push_back({1.0, Field::zeros(g, FieldKind::density)});
  zero.diagnostics.resize(2);
  auto z = dissipation_3m(zero, 1.5);
  CHECK(z.max_residual == 0.0);
  auto e = energy_identity(zero);
  CHECK(e.back().identity_residual == 0.0);
  zero.params.mu = 0.0;
  CHECK_THROWS_AS(energy_identity(zero), PreconditionError);
}

TEST_CASE("tail fits recover exact models") {
  Grid g = line(2000, 100.0);
  const double a = 0.7;
  Field ue = Field::sample(g, [&](double x) { return 3.0 * std::exp(-a * std::abs(x)); },
                           FieldKind::density);
  auto te = tail_metrics(ue, {5.0, 40.0, 10});
  CHECK(std::abs(te.rate() - a) < 1e-6);
  CHECK(te.exponential_better);

  Field ua = Field::sample(g, [](double x) { return std::pow(std::abs(x), -3.0); },
                           FieldKind::density);
  auto ta = tail_metrics(ua, {5.0, 40.0, 10});
  CHECK(std::abs(ta.exponent() + 3.0) < 1e-6);
  CHECK_FALSE(ta.exponential_better);

  CHECK_THROWS_AS(tail_metrics(ua, {5.0, 5.1, 10}), PreconditionError);
}

TEST_CASE("support radius and mass beyond") {
  Grid g = line(100, 10.0);
  Field u = Field::sample(g, [](double x) { return std::abs(x) < 2.0 ? 1.0 : 0.0; },
                          FieldKind::density);
  CHECK(support_radius(u, 0.0) == doctest::Approx(1.95));
  CHECK(mass_beyond(u, 1.0) == doctest::Approx(2.0));
  CHECK(mass_beyond(u, 3.0) == 0.0);
}

TEST_CASE("propagation classifier on synthetic trajectories") {
  Grid g = line(4000, 100.0);
  // compact growth to radius 1.8
  auto fin = synthetic(g, [](double x) { return std::max(0.0, 0.2 * (1 - x * x / 3.24)); });
  auto rf = check_propagation(fin);
  CHECK(rf.classification == Regime::finite_evidence);
  CHECK(rf.r0 == doctest::Approx(0.9875));
  CHECK(rf.C_lin == doctest::Approx(0.8).epsilon(0.05));
  CHECK_FALSE(rf.tail_fit.has_value());

  // algebraic tail over the whole window, still small at the boundary cells
  auto inf = synthetic(g, [](double x) { return 0.1 / (1.0 + std::pow(std::abs(x), 4.0)); });
  auto ri = check_propagation(inf, {1e-7, 10.0, 10.0, 10});
  CHECK(ri.tail_fit.has_value());
  CHECK(ri.infinite_rule);
  CHECK(ri.classification == Regime::infinite_evidence);

  // raising theta never turns finite into infinite
  for (double th : {1e-12, 1e-10, 1e-8, 1e-6, 1e-4}) {
    auto r = check_propagation(fin, {th, 10.0, 1e3, 10});
    CHECK(r.classification != Regime::infinite_evidence);
  }

  auto wide = synthetic(g, [](double) { return 0.1; });
  CHECK_THROWS_AS(check_propagation(wide), PreconditionError);
}
