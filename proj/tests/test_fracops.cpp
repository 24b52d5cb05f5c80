#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "fracpme/fracops.hpp"

using namespace fracpme;

namespace {

constexpr double pi = std::numbers::pi;

Grid ring(int n) { return Grid::span(n, -pi, pi, Topology::periodic); }

Field mode(const Grid& g, int k) {
  return Field::sample(g, [k](double x) { return std::cos(k * x); }, FieldKind::pressure);
}

double max_err(const Field& f, const std::function<double(double)>& ref) {
  double e = 0.0;
  for (int i = 0; i < f.size(); ++i) e = std::max(e, std::abs(f[i] - ref(f.grid().x(i))));
  return e;
}

Field random_zero_mean(const Grid& g, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> nd;
  std::vector<double> v(g.n);
  double mean = 0;
  for (auto& x : v) mean += (x = nd(rng));
  mean /= g.n;
  for (auto& x : v) x -= mean;
  return Field(g, v, FieldKind::pressure);
}

double dot(const Field& a, const Field& b) {
  double s = 0;
  for (int i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid().h;
}

// Reference for the centred half of a line: max |a-b| / max |b|, optionally
// after removing the mean offset.
double central_rel(const Field& a, const Field& b, bool drop_constant) {
  int n = a.size(), lo = n / 4, hi = 3 * n / 4;
  double off = 0, scale = 0;
  if (drop_constant) {
    for (int i = lo; i < hi; ++i) off += a[i] - b[i];
    off /= hi - lo;
  }
  double e = 0;
  for (int i = lo; i < hi; ++i) {
    e = std::max(e, std::abs(a[i] - b[i] - off));
    scale = std::max(scale, std::abs(b[i]));
  }
  return e / scale;
}

}  // namespace

TEST_CASE("constants") {
  CHECK(laplacian_constant(0.5) == doctest::Approx(1.0 / pi).epsilon(1e-14));
  // c_{1,1/4} by hand: Gamma(1/4) / (sqrt(2) sqrt(pi) Gamma(1/4))
  CHECK(riesz_constant(0.25) == doctest::Approx(1.0 / std::sqrt(2.0 * pi)).epsilon(1e-14));
  CHECK_THROWS_AS(riesz_constant(0.5), PreconditionError);
}

TEST_CASE("rejections") {
  Grid p = ring(64);
  Grid l = Grid::span(64, -1, 1, Topology::truncated_line);
  Field fp = mode(p, 1), fl = Field::zeros(l, FieldKind::density);
  CHECK_THROWS_AS(riesz_potential(fp, 0.0, Backend::spectral), PreconditionError);
  CHECK_THROWS_AS(riesz_potential(fp, 1.0, Backend::spectral), PreconditionError);
  CHECK_THROWS_AS(riesz_potential(fl, 0.6, Backend::quadrature), PreconditionError);
  CHECK_THROWS_AS(riesz_potential(fl, 0.3, Backend::spectral), PreconditionError);
  CHECK_THROWS_AS(smoothed_potential(fp, 0.3, -1e-3), PreconditionError);
  CHECK_THROWS_AS(frac_laplacian(fl, 0.5, Backend::quadrature), PreconditionError);
  CHECK_THROWS_AS(frac_laplacian(fl, 1.2, Backend::quadrature, TailModel::zero()),
                  PreconditionError);
  OperatorSpec bad{OpKind::riesz_potential, 0.7, 0.0, Backend::quadrature};
  CHECK_THROWS_AS(bad.validate(), PreconditionError);
}

TEST_CASE("eigenfunctions of every multiplier") {
  Grid g = ring(256);
  for (int k : {1, 3, 17}) {
    for (double s : {0.1, 0.3, 0.5, 0.8}) {
      Field u = mode(g, k);
      double kk = k;
      CHECK(max_err(riesz_potential(u, s, Backend::spectral),
                    [&](double x) { return std::pow(kk, -2 * s) * std::cos(k * x); }) < 1e-10);
      CHECK(max_err(smoothed_potential(u, s, 0.1), [&](double x) {
              return std::pow(0.1 + kk * kk, -s) * std::cos(k * x);
            }) < 1e-10);
      CHECK(max_err(half_potential(u, s),
                    [&](double x) { return std::pow(kk, -s) * std::cos(k * x); }) < 1e-10);
      CHECK(max_err(half_potential(u, s, 0.2), [&](double x) {
              return std::pow(0.2 + kk * kk, -0.5 * s) * std::cos(k * x);
            }) < 1e-10);
      CHECK(max_err(frac_laplacian(u, s, Backend::spectral),
                    [&](double x) { return std::pow(kk, 2 * s) * std::cos(k * x); }) < 1e-10);
    }
  }
  Field u3 = mode(g, 3);
  CHECK(max_err(riesz_potential(u3, 0.3, Backend::spectral),
                [](double x) { return std::pow(3.0, -0.6) * std::cos(3 * x); }) < 1e-10);
  CHECK(max_err(frac_laplacian(mode(g, 2), 0.5, Backend::spectral),
                [](double x) { return 2 * std::cos(2 * x); }) < 1e-10);
  CHECK(max_err(smoothed_potential(mode(g, 2), 0.5, 0.1),
                [](double x) { return std::pow(4.1, -0.5) * std::cos(2 * x); }) < 1e-10);
  CHECK(max_err(half_potential(mode(g, 2), 0.4),
                [](double x) { return std::pow(2.0, -0.4) * std::cos(2 * x); }) < 1e-10);
}

TEST_CASE("constants are annihilated") {
  Grid g = ring(128);
  Field c = Field::sample(g, [](double) { return 2.0; }, FieldKind::density);
  CHECK(max_err(riesz_potential(c, 0.3, Backend::spectral), [](double) { return 0.0; }) < 1e-14);
  CHECK(max_err(frac_laplacian(c, 0.6, Backend::spectral), [](double) { return 0.0; }) < 1e-14);
  Grid l = Grid::span(300, -3, 3, Topology::truncated_line);
  Field cl = Field::sample(l, [](double) { return 2.0; }, FieldKind::density);
  for (double a : {0.25, 0.5, 0.75})
    CHECK(max_err(frac_laplacian(cl, a, Backend::quadrature, TailModel::constant(2, 2)),
                  [](double) { return 0.0; }) < 1e-10);
}

TEST_CASE("smoothed potential limits") {
  Grid g = ring(512);
  Field u = random_zero_mean(g, 7);
  Field k = riesz_potential(u, 0.3, Backend::spectral);
  CHECK(max_err(smoothed_potential(u, 0.3, 0.0),
                [&](double x) { return k[static_cast<int>(std::lround((x - g.x(0)) / g.h))]; }) <
        1e-12);
  Field w = Field::sample(g, [](double x) { return std::sin(x) + 0.3 * std::cos(5 * x); },
                          FieldKind::pressure);
  Field kw = riesz_potential(w, 0.3, Backend::spectral);
  double prev = 1e300;
  for (double eps : {1e-1, 1e-2, 1e-3}) {
    Field ke = smoothed_potential(w, 0.3, eps);
    double d = 0;
    for (int i = 0; i < g.n; ++i) d = std::max(d, std::abs(ke[i] - kw[i]));
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("half potential squares to the riesz potential and is symmetric") {
  Grid g = ring(512);
  Field u = random_zero_mean(g, 11), w = random_zero_mean(g, 12);
  Field hh = half_potential(half_potential(u, 0.35), 0.35);
  Field k = riesz_potential(u, 0.35, Backend::spectral);
  double e = 0, sc = 0;
  for (int i = 0; i < g.n; ++i) {
    e = std::max(e, std::abs(hh[i] - k[i]));
    sc = std::max(sc, std::abs(k[i]));
  }
  CHECK(e < 1e-12 * std::max(1.0, sc));
  double a = dot(half_potential(u, 0.35), w), b = dot(u, half_potential(w, 0.35));
  CHECK(std::abs(a - b) < 1e-12 * std::max(1.0, std::abs(a)));
}

TEST_CASE("fractional laplacian inverts the riesz potential on zero-mean data") {
  Grid g = ring(1024);
  Field u = random_zero_mean(g, 5);
  for (double s : {0.2, 0.5, 0.75}) {
    Field back = frac_laplacian(riesz_potential(u, s, Backend::spectral), s, Backend::spectral);
    double e = 0;
    for (int i = 0; i < g.n; ++i) e = std::max(e, std::abs(back[i] - u[i]));
    CHECK(e < 1e-10);
  }
}

TEST_CASE("half laplacian of the poisson kernel") {
  Grid g = Grid::span(1 << 14, -200, 200, Topology::truncated_line);
  auto P = [](double x) { return 1.0 / (pi * (1 + x * x)); };
  Field L = frac_laplacian(g, P, 0.5, TailModel::zero());
  // d/dt of t/(pi(t^2+x^2)) at t=1, negated
  auto ref = [](double x) { return (1 - x * x) / (pi * std::pow(1 + x * x, 2)); };
  double e = 0;
  for (int i = 0; i < g.n; ++i)
    if (std::abs(g.x(i)) <= 10) e = std::max(e, std::abs(L[i] - ref(g.x(i))));
  CHECK(e < 1e-3);
  MESSAGE("poisson half-laplacian max error " << e);
}

TEST_CASE("maximum principle smoke test") {
  Grid g = Grid::span(800, -4, 4, Topology::truncated_line);
  for (double a : {0.2, 0.5, 0.9}) {
    Field u = Field::sample(
        g, [](double x) { return std::abs(x) < 1 ? (1 - x * x) * (1 + 0.3 * x) : 0.0; },
        FieldKind::density);
    Field L = frac_laplacian(u, a, Backend::quadrature, TailModel::zero());
    int imax = 0;
    for (int i = 0; i < g.n; ++i)
      if (u[i] > u[imax]) imax = i;
    CHECK(L[imax] >= 0.0);
  }
}

TEST_CASE("cross-backend agreement on a gaussian") {
  Grid g = Grid::span(4096, -20, 20, Topology::truncated_line);
  Field u = Field::sample(g, [](double x) { return std::exp(-x * x); }, FieldKind::density);
  Field q = riesz_potential(u, 0.25, Backend::quadrature);
  Field sp4 = padded_spectral({OpKind::riesz_potential, 0.25, 0.0, Backend::spectral}, u, 4);
  Field sp8 = padded_spectral({OpKind::riesz_potential, 0.25, 0.0, Backend::spectral}, u, 8);
  double r4 = central_rel(sp4, q, true), r8 = central_rel(sp8, q, true);
  MESSAGE("riesz cross-backend rel error pad4 " << r4 << " pad8 " << r8);
  // 4x padding sits right at the threshold (periodic images); 8x is used
  CHECK(r8 < 1e-4);

  // smoothed kernel: Bessel-potential quadrature vs padded multiplier
  Field qe = smoothed_potential(u, 0.25, 1e-2);
  Field se = padded_spectral({OpKind::smoothed_potential, 0.25, 1e-2, Backend::spectral}, u, 4);
  double re = central_rel(se, qe, false);
  MESSAGE("smoothed cross-backend rel error " << re);
  CHECK(re < 1e-4);

  for (double a : {0.25, 0.5, 0.75}) {
    Field lq = frac_laplacian(u, a, Backend::quadrature, TailModel::zero());
    // periodic images of the padded reference add a near-constant offset
    Field ls = padded_spectral({OpKind::frac_laplacian, a, 0.0, Backend::spectral}, u, 8);
    double rl = central_rel(ls, lq, true);
    MESSAGE("laplacian alpha " << a << " cross-backend rel error " << rl);
    CHECK(rl < 1e-4);
  }
}

TEST_CASE("bessel weights tend to riesz weights") {
  auto w0 = riesz_cell_weights(50, 0.1, 0.3);
  double prev = 1e300;
  for (double eps : {1e-2, 1e-4, 1e-6, 1e-8}) {
    auto we = bessel_cell_weights(50, 0.1, 0.3, eps);
    double d = 0;
    for (int k = 0; k < 50; ++k) d = std::max(d, std::abs(we[k] - w0[k]) / w0[k]);
    CHECK(d < prev);
    prev = d;
  }
  CHECK(prev < 0.05);
}

TEST_CASE("excess tails match sampling a wider grid") {
  // psi(x) = (|x|+3)^-4 on [-5,5] with its algebraic tail modelled, vs the
  // same function on [-400,400] with zero tails.
  auto psi = [](double x) { return std::pow(std::abs(x) + 3.0, -4.0); };
  double h = 0.01;
  Grid small = Grid::make(1000, h, -5.0, Topology::truncated_line);
  Grid big = Grid::make(80000, h, -400.0, Topology::truncated_line);
  TailModel tm{0.0, 0.0, psi, psi};
  Field a = frac_laplacian(small, psi, 0.75, tm);
  Field b = frac_laplacian(big, psi, 0.75, TailModel::zero());
  double e = 0, sc = 0;
  for (int i = 0; i < small.n; ++i) {
    double ref = b[i + 39500];
    e = std::max(e, std::abs(a[i] - ref));
    sc = std::max(sc, std::abs(ref));
  }
  MESSAGE("excess tail rel diff " << e / sc);
  CHECK(e / sc < 1e-6);
}
