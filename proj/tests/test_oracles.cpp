#include <boost/math/quadrature/exp_sinh.hpp>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fracpme/oracles.hpp"

using namespace fracpme;

TEST_CASE("Poisson kernel closed values") {
  CHECK(poisson_value(1.0, 0.0) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-15));
  for (double t : {0.3, 1.0, 2.5})
    for (double x = -7.0; x < 7.0; x += 0.9)
      CHECK(std::abs(poisson_value(t, x) - poisson_value(1.0, x / t) / t) <= 1e-12 * poisson_value(t, x));
  CHECK_THROWS_AS(poisson_value(0.0, 1.0), PreconditionError);
  Grid g = line_grid(10.0, 0.1);
  CHECK_THROWS_AS(poisson_kernel(-1.0, g), PreconditionError);
}

TEST_CASE("Poisson kernel mass on a wide domain") {
  // missing tail beyond L is (2/pi) atan(t/L); below 1e-6 needs t < 0.0157 at L = 1e4
  Grid g = line_grid(1e4, 0.004);
  double m = mass(poisson_kernel(0.01, g));
  CHECK(std::abs(m - 1.0) < 1e-6);
  double m1 = mass(poisson_kernel(1.0, g));
  CHECK(m1 == doctest::Approx(1.0 - 2.0 / std::numbers::pi * std::atan(1e-4)).epsilon(1e-10));
}

TEST_CASE("Poisson semigroup through the solver") {
  auto a = poisson_check(1024, 50.0);
  auto b = poisson_check(2048, 50.0);
  MESSAGE("errors " << a.error_l1_rel << " " << b.error_l1_rel);
  CHECK(a.error_l1_rel < 0.05);
  CHECK(b.error_l1_rel < a.error_l1_rel);
  CHECK(std::abs(a.mass_final - a.mass_initial) < 1e-12);
}

TEST_CASE("Barenblatt exponents and normalization") {
  CHECK(barenblatt_mex(0.75) == doctest::Approx(1.4).epsilon(1e-15));
  CHECK(barenblatt_beta(0.75) == doctest::Approx(1.0 / 0.9).epsilon(1e-15));
  CHECK_THROWS_AS(BarenblattSpec::make(1.0, 0.5, 1.0), PreconditionError);
  CHECK_THROWS_AS(BarenblattSpec::make(1.0, 0.75, 0.0), PreconditionError);
  for (double M : {1.0, 3.0})
    for (double R : {0.5, 1.0, 2.0}) {
      auto b = BarenblattSpec::make(M, 0.75, R);
      boost::math::quadrature::exp_sinh<double> q;
      double half = q.integrate([&](double y) { return b.profile(y); }, 1e-14);
      CHECK(std::abs(2.0 * half - M) < 1e-8 * M);
    }
  auto b = BarenblattSpec::make(1.0, 0.75, 1.0);
  CHECK(b.profile(0.0) / b.profile(1.0) == doctest::Approx(std::pow(2.0, 1.25)).epsilon(1e-12));
  double prev = b.profile(0.0) * 2;
  for (double y = 0.0; y < 20.0; y += 0.5) {
    CHECK(b.profile(y) == b.profile(-y));
    CHECK(b.profile(y) < prev);
    prev = b.profile(y);
  }
  // sampled mass converges to M
  auto g = line_grid(400.0, 0.05);
  double m = mass(barenblatt_profile(b, g));
  double tail = 2.0 * b.lambda / (2.0 * 0.75) * std::pow(400.0, -1.5);  // leading tail beyond 400
  CHECK(std::abs(m + tail - 1.0) < 1e-5);
}

TEST_CASE("self similar check at a coarse resolution") {
  auto spec = BarenblattSpec::make(1.0, 0.75, barenblatt_R_analytic(1.0, 0.75));
  SelfSimilarOptions o;
  o.n = 2048;
  o.L = 100.0;
  CHECK(self_similar_drift(spec, 1.0, 1.0, o) == 0.0);
  o.calibrate = false;
  auto r = self_similar_check(spec, 1.0, 1.5, o);
  MESSAGE("drift " << r.drift << " R " << r.analytic_R);
  CHECK(r.drift < 0.05);
  CHECK(r.mass_drift < 1e-12);
  CHECK(r.evenness < 1e-10);
  CHECK(r.beta_used == spec.beta);
  // a wrong width drifts more
  auto wide = self_similar_check(spec.with_R(2.0 * spec.R_prof), 1.0, 1.5, o);
  CHECK(wide.drift > 2.0 * r.drift);

  o.calibrate = true;
  o.bits = 10;
  auto c = self_similar_check(BarenblattSpec::make(1.0, 0.75, 1.0), 1.0, 1.5, o);
  MESSAGE("calibrated " << c.calibrated_R << " analytic " << c.analytic_R << " drift " << c.drift
                        << " evals " << c.calibration_evals);
  CHECK(std::abs(c.calibrated_R / c.analytic_R - 1.0) < 0.1);
  CHECK(c.drift < 0.05);
}
