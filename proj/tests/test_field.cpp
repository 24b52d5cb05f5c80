#include <cmath>
#include <filesystem>
#include <numbers>

#include "doctest.h"
#include "fracpme/field.hpp"

using namespace fracpme;

namespace {

Grid line(int n, double a, double b) { return Grid::span(n, a, b, Topology::truncated_line); }

}  // namespace

TEST_CASE("grid invariants") {
  CHECK_THROWS_AS(Grid::make(4, 0.1, 0.0, Topology::truncated_line), PreconditionError);
  CHECK_THROWS_AS(Grid::make(16, 0.0, 0.0, Topology::truncated_line), PreconditionError);
  CHECK_THROWS_AS(Grid::make(100, 0.1, 0.0, Topology::periodic), PreconditionError);
  CHECK_NOTHROW(Grid::make(100, 0.1, 0.0, Topology::truncated_line));
  Grid g = Grid::make(64, 0.3, -1.7, Topology::periodic);
  Grid g2 = Grid::make(g.n, g.h, g.x_left, g.topology);
  for (int i = 0; i < g.n; ++i) CHECK(g.x(i) == g2.x(i));
  CHECK(g.x(0) == -1.7 + 0.5 * 0.3);
}

TEST_CASE("field invariants") {
  Grid g = line(8, 0, 1);
  CHECK_THROWS_AS(Field(g, std::vector<double>(7, 0.0), FieldKind::pressure), PreconditionError);
  std::vector<double> neg(8, 1.0);
  neg[3] = -1e-300;
  CHECK_THROWS_AS(Field(g, neg, FieldKind::density), PreconditionError);
  CHECK_NOTHROW(Field(g, neg, FieldKind::pressure));
  std::vector<double> dec = {0, 1, 2, 3, 2.5, 4, 5, 6};
  CHECK_THROWS_AS(Field(g, dec, FieldKind::integrated), PreconditionError);
  std::vector<double> nan(8, 0.0);
  nan[0] = std::nan("");
  CHECK_THROWS_AS(Field(g, nan, FieldKind::pressure), PreconditionError);
}

TEST_CASE("gradient") {
  Grid g = Grid::span(64, -std::numbers::pi, std::numbers::pi, Topology::periodic);
  Field c = Field::sample(g, [](double) { return 5.0; }, FieldKind::pressure);
  Field dc0 = gradient(c);
  for (double v : dc0.values()) CHECK(v == 0.0);

  Field aff = Field::sample(g, [](double x) { return 3.0 * x; }, FieldKind::pressure);
  Field da = gradient(aff);
  for (int i = 1; i + 1 < g.n; ++i) CHECK(da[i] == doctest::Approx(3.0).epsilon(1e-12));

  Grid tl = line(32, 0, 2);
  Field aff2 = Field::sample(tl, [](double x) { return 2.0 - x; }, FieldKind::pressure);
  Field da2 = gradient(aff2);
  for (double v : da2.values()) CHECK(v == doctest::Approx(-1.0).epsilon(1e-12));

  auto err = [](int n) {
    Grid gp = Grid::span(n, -std::numbers::pi, std::numbers::pi, Topology::periodic);
    Field f = Field::sample(gp, [](double x) { return std::sin(x); }, FieldKind::pressure);
    Field d = gradient(f);
    double e = 0.0;
    for (int i = 0; i < n; ++i) e = std::max(e, std::abs(d[i] - std::cos(gp.x(i))));
    return e;
  };
  double ratio = err(4096) / err(8192);
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.01));

  Field f = Field::sample(g, [](double x) { return std::sin(2 * x); }, FieldKind::pressure);
  Field h = Field::sample(g, [](double x) { return x * x; }, FieldKind::pressure);
  std::vector<double> comb(g.n);
  for (int i = 0; i < g.n; ++i) comb[i] = 2.5 * f[i] - 0.7 * h[i];
  Field dc = gradient(Field(g, comb, FieldKind::pressure));
  Field df = gradient(f), dh = gradient(h);
  for (int i = 0; i < g.n; ++i) CHECK(dc[i] == doctest::Approx(2.5 * df[i] - 0.7 * dh[i]).epsilon(1e-13));
}

TEST_CASE("mass") {
  Grid g = line(100, -1, 1);
  CHECK(mass(Field::zeros(g, FieldKind::density)) == 0.0);
  std::vector<double> ind(100, 0.0);
  for (int i = 10; i < 17; ++i) ind[i] = 0.75;
  CHECK(mass(Field(g, ind, FieldKind::density)) == doctest::Approx(0.75 * 7 * g.h).epsilon(1e-15));

  Grid gg = line(4096, -20, 20);
  Field gauss = Field::sample(
      gg, [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * std::numbers::pi); },
      FieldKind::density);
  CHECK(std::abs(mass(gauss) - 1.0) < 1e-12);

  std::vector<double> lo(100, 0.0);
  for (int i = 0; i < 100; ++i) lo[i] = 0.5 * ind[i];
  CHECK(mass(Field(g, ind, FieldKind::density)) >= mass(Field(g, lo, FieldKind::density)));
  CHECK_THROWS_AS(mass(Field(g, ind, FieldKind::pressure)), PreconditionError);
}

TEST_CASE("cumulative") {
  Grid g = line(400, -2, 2);
  Field v0 = cumulative(Field::zeros(g, FieldKind::density));
  for (double v : v0.values()) CHECK(v == 0.0);

  Field box = Field::sample(g, [](double x) { return std::abs(x) < 1 ? 0.5 : 0.0; },
                            FieldKind::density);
  Field v = cumulative(box);
  CHECK(v.kind() == FieldKind::integrated);
  CHECK(v[0] == 0.0);
  CHECK(v[g.n - 1] == mass(box));
  // last cell of the box sits just left of x = 1
  int i1 = static_cast<int>(std::floor((1.0 - g.x_left) / g.h)) - 1;
  CHECK(v[i1] == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 1; i < g.n; ++i) CHECK(v[i] >= v[i - 1]);

  Grid p = Grid::span(64, 0, 1, Topology::periodic);
  CHECK_THROWS_AS(cumulative(Field::zeros(p, FieldKind::density)), PreconditionError);

  // derivative of the cumulative recovers u up to a one-cell shift
  Field gs = Field::sample(g, [](double x) { return std::exp(-4 * x * x); }, FieldKind::density);
  Field V = cumulative(gs);
  double e = 0.0;
  for (int i = 1; i < g.n; ++i) e = std::max(e, std::abs((V[i] - V[i - 1]) / g.h - gs[i]));
  CHECK(e < 1e-12);
  Field dV = gradient(Field(g, V.vec(), FieldKind::pressure));
  double e2 = 0.0;
  for (int i = 1; i + 1 < g.n; ++i)
    e2 = std::max(e2, std::abs(dV[i] - std::exp(-4 * std::pow(g.x(i) + 0.5 * g.h, 2))));
  CHECK(e2 < 10 * g.h * g.h);
}

TEST_CASE("csv round trip is bit exact") {
  Grid g = line(37, -3.3, 1.1);
  Field f = Field::sample(g, [](double x) { return std::exp(x) / 3.0 + 1e-300; }, FieldKind::density);
  auto path = (std::filesystem::temp_directory_path() / "fracpme_rt.csv").string();
  write_field_csv(path, f);
  Field r = read_field_csv(path, g, FieldKind::density);
  for (int i = 0; i < g.n; ++i) CHECK(r[i] == f[i]);
  CHECK(field_to_csv(r) == field_to_csv(f));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(parse_field_csv("x,value\n0,1\n", g, FieldKind::density), ConfigError);
  CHECK_THROWS_AS(parse_field_csv("a,b\n", g, FieldKind::density), ConfigError);
}
