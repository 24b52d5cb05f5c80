#include "fracpme/fracops.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "fft.hpp"

namespace fracpme {

using boost::math::quadrature::gauss;
using detail::RealFft;

namespace {

constexpr double kPi = std::numbers::pi;

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

void check_order(double order, const char* what) {
  require(std::isfinite(order) && order > 0.0 && order < 1.0,
          std::string(what) + " must lie in (0,1)");
}

std::vector<double> spectral_table(const OperatorSpec& spec, int n, double h) {
  std::vector<double> mult(static_cast<size_t>(n / 2 + 1));
  const double L = n * h;
  for (int k = 0; k <= n / 2; ++k) mult[k] = symbol(spec, 2.0 * kPi * k / L);
  return mult;
}

Field spectral_apply(const OperatorSpec& spec, const Field& f) {
  const Grid& g = f.grid();
  require(g.topology == Topology::periodic, "spectral backend needs a periodic grid");
  RealFft fft(g.n);
  auto mult = spectral_table(spec, g.n, g.h);
  return Field(g, detail::apply_multiplier(fft, f.values(), mult), FieldKind::pressure);
}

// Integral of t^p over [a, b], 0 < a < b, with t^p smooth on the interval.
double power_integral(double a, double b, double p) {
  if (std::abs(p + 1.0) < 1e-14) return std::log(b / a);
  return (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / (p + 1.0);
}

// Integral of |t|^(2s-1) over cell k of unit width centred at k.
double unit_power_cell(int k, double s) {
  const double p = 2.0 * s - 1.0;
  if (k == 0) return 2.0 * std::pow(0.5, 2.0 * s) / (2.0 * s);
  if (k < 8) return power_integral(k - 0.5, k + 0.5, p);
  return gauss<double, 8>::integrate([p](double t) { return std::pow(t, p); }, k - 0.5,
                                     k + 0.5);
}

}  // namespace

void OperatorSpec::validate() const {
  check_order(order, "operator order");
  require(std::isfinite(eps) && eps >= 0.0, "eps must be >= 0");
  if (backend == Backend::quadrature &&
      (kind == OpKind::riesz_potential || kind == OpKind::smoothed_potential))
    require(order < 0.5, "quadrature potential needs s < 1/2 in 1D");
  if (backend == Backend::quadrature) require(kind != OpKind::half_potential,
                                              "half potential is spectral only");
}

double riesz_constant(double s) {
  require(s > 0.0 && s < 0.5, "riesz constant needs s in (0,1/2)");
  return std::tgamma((1.0 - 2.0 * s) / 2.0) /
         (std::pow(4.0, s) * std::sqrt(kPi) * std::tgamma(s));
}

double laplacian_constant(double alpha) {
  check_order(alpha, "alpha");
  return std::pow(4.0, alpha) * std::tgamma(0.5 + alpha) /
         (std::sqrt(kPi) * std::abs(std::tgamma(-alpha)));
}

double symbol(const OperatorSpec& spec, double xi) {
  const double s = spec.order;
  switch (spec.kind) {
    case OpKind::riesz_potential:
      return xi == 0.0 ? 0.0 : std::pow(xi, -2.0 * s);
    case OpKind::smoothed_potential:
      if (spec.eps > 0.0) return std::pow(spec.eps + xi * xi, -s);
      return xi == 0.0 ? 0.0 : std::pow(xi, -2.0 * s);
    case OpKind::half_potential:
      if (spec.eps > 0.0) return std::pow(spec.eps + xi * xi, -0.5 * s);
      return xi == 0.0 ? 0.0 : std::pow(xi, -s);
    case OpKind::frac_laplacian:
      return std::pow(xi, 2.0 * s);
  }
  return 0.0;
}

// ---------------------------------------------------------------- Toeplitz

SymmetricToeplitz::SymmetricToeplitz(std::vector<double> w)
    : n_(static_cast<int>(w.size())), w_(std::move(w)) {
  require(n_ >= 1, "toeplitz kernel must be nonempty");
  const int N = next_pow2(std::max(2 * n_, 2));
  fft_ = std::make_unique<RealFft>(N);
  std::vector<double> c(static_cast<size_t>(N), 0.0);
  c[0] = w_[0];
  for (int k = 1; k < n_; ++k) {
    c[k] = w_[k];
    c[N - k] = w_[k];
  }
  auto C = fft_->forward(c);
  mult_.resize(C.size());
  for (size_t k = 0; k < C.size(); ++k) mult_[k] = C[k].real();
}

SymmetricToeplitz::~SymmetricToeplitz() = default;
SymmetricToeplitz::SymmetricToeplitz(SymmetricToeplitz&&) noexcept = default;
SymmetricToeplitz& SymmetricToeplitz::operator=(SymmetricToeplitz&&) noexcept = default;

std::vector<double> SymmetricToeplitz::apply(std::span<const double> x) const {
  require(static_cast<int>(x.size()) == n_, "toeplitz input length mismatch");
  std::vector<double> xp(static_cast<size_t>(fft_->size()), 0.0);
  std::copy(x.begin(), x.end(), xp.begin());
  auto y = detail::apply_multiplier(*fft_, xp, mult_);
  y.resize(static_cast<size_t>(n_));
  return y;
}

// ----------------------------------------------------------------- weights

std::vector<double> riesz_cell_weights(int count, double h, double s) {
  const double c = riesz_constant(s);
  const double scale = c * std::pow(h, 2.0 * s);
  std::vector<double> w(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) w[k] = scale * unit_power_cell(k, s);
  return w;
}

std::vector<double> bessel_cell_weights(int count, double h, double s, double eps) {
  require(eps > 0.0, "bessel weights need eps > 0");
  require(s > 0.0 && s < 0.5, "bessel weights need s in (0,1/2)");
  const double lam = std::sqrt(eps);
  const double nu = std::abs(s - 0.5);
  const double pref = 1.0 / (std::tgamma(s) * std::sqrt(kPi));
  const double c = riesz_constant(s);
  auto G = [&](double y) {
    double z = lam * y;
    if (z > 700.0) return 0.0;
    return pref * std::pow(y / (2.0 * lam), s - 0.5) * std::cyl_bessel_k(nu, z);
  };
  std::vector<double> w(static_cast<size_t>(count));
  const double hh = 0.5 * h;
  double core = c * std::pow(hh, 2.0 * s) / (2.0 * s);
  double diff = gauss<double, 16>::integrate(
      [&](double y) { return G(y) - c * std::pow(y, 2.0 * s - 1.0); }, 0.0, hh);
  w[0] = 2.0 * (core + diff);
  for (int k = 1; k < count; ++k)
    w[k] = gauss<double, 16>::integrate(G, (k - 0.5) * h, (k + 0.5) * h);
  return w;
}

// --------------------------------------------------------------- potential

PotentialOperator PotentialOperator::quadrature(int n, double h, double s, double eps) {
  require(s > 0.0 && s < 0.5, "quadrature potential needs s in (0,1/2)");
  require(eps >= 0.0, "eps must be >= 0");
  PotentialOperator op;
  op.backend_ = Backend::quadrature;
  op.n_ = n;
  auto w = eps > 0.0 ? bessel_cell_weights(n, h, s, eps) : riesz_cell_weights(n, h, s);
  double nyq = w[0];
  for (int k = 1; k < n; ++k) nyq += 2.0 * ((k % 2) ? -w[k] : w[k]);
  op.nyquist_ = nyq;
  op.conv_ = std::make_shared<SymmetricToeplitz>(std::move(w));
  return op;
}

PotentialOperator PotentialOperator::padded_spectral(int n, double h, double s, double eps,
                                                     int pad) {
  check_order(s, "s");
  require(pad >= 2, "padding factor must be >= 2");
  PotentialOperator op;
  op.backend_ = Backend::spectral;
  op.n_ = n;
  const int N = next_pow2(pad * n);
  op.fft_ = std::make_shared<RealFft>(N);
  OperatorSpec spec{OpKind::smoothed_potential, s, eps, Backend::spectral};
  op.mult_ = spectral_table(spec, N, h);
  op.nyquist_ = symbol(spec, kPi / h);
  return op;
}

std::vector<double> PotentialOperator::apply(std::span<const double> u) const {
  require(static_cast<int>(u.size()) == n_, "potential input length mismatch");
  if (backend_ == Backend::quadrature) return conv_->apply(u);
  std::vector<double> up(static_cast<size_t>(fft_->size()), 0.0);
  std::copy(u.begin(), u.end(), up.begin());
  auto p = detail::apply_multiplier(*fft_, up, mult_);
  p.resize(static_cast<size_t>(n_));
  return p;
}

// ------------------------------------------------------- frac laplacian

namespace {

// Weights of hat functions against z^(-1-2a), in units of h^(-2a).
struct HatRule {
  double a;
  double I0(double x, double y) const {  // int t^(-1-2a)
    return (std::pow(x, -2.0 * a) - std::pow(y, -2.0 * a)) / (2.0 * a);
  }
  double I1(double x, double y) const { return power_integral(x, y, -2.0 * a); }
  double ker(double t) const { return std::pow(t, -1.0 - 2.0 * a); }
  // rising half of the hat centred at k+1, on [k, k+1]
  double rise(int k) const {
    if (k < 8) return I1(k, k + 1) - k * I0(k, k + 1);
    return gauss<double, 8>::integrate([&](double t) { return (t - k) * ker(t); }, k, k + 1);
  }
  // falling half of the hat centred at k, on [k, k+1]
  double fall(int k) const {
    if (k < 8) return (k + 1) * I0(k, k + 1) - I1(k, k + 1);
    return gauss<double, 8>::integrate([&](double t) { return (k + 1 - t) * ker(t); }, k,
                                       k + 1);
  }
};

// int_d^inf g(x + sgn z) z^(-1-2a) dz with z = d w^(-1/(2a)).
double excess_integral(const std::function<double(double)>& g, double x, double d, double a,
                       double sgn) {
  const double e = -1.0 / (2.0 * a);
  auto f = [&](double w) { return g(x + sgn * d * std::pow(w, e)); };
  static const double cuts[] = {0.0, 1e-4, 1e-3, 1e-2, 0.1, 0.4, 1.0};
  double sum = 0.0;
  for (int p = 0; p + 1 < 7; ++p) sum += gauss<double, 16>::integrate(f, cuts[p], cuts[p + 1]);
  return std::pow(d, -2.0 * a) / (2.0 * a) * sum;
}

// Leading error of the hat rule: linear interpolation overshoots by
// (h^2/2) t(1-t) f'' on each cell, so the far field is biased by
// h^(2-2a) f''(x) * kappa with kappa = int_1^inf t(1-t) tau^(-1-2a),
// t the fractional part of tau (both sides counted).
double interpolation_bias(double a) {
  const int K = 4096;
  double sum = 0.0;
  for (int k = 1; k <= K; ++k)
    sum += gauss<double, 8>::integrate(
        [&](double t) { return t * (1.0 - t) * std::pow(k + t, -1.0 - 2.0 * a); }, 0.0, 1.0);
  sum += std::pow(K + 1.0, -2.0 * a) / (2.0 * a) / 6.0;
  return sum;
}

}  // namespace

FracLaplacianQuadrature::FracLaplacianQuadrature(int n, double h, double alpha)
    : n_(n), h_(h), alpha_(alpha) {
  check_order(alpha, "alpha");
  require(n >= 3 && h > 0.0, "quadrature laplacian needs n >= 3 and h > 0");
  HatRule r{alpha};
  const double hs = std::pow(h, -2.0 * alpha);
  c_ = laplacian_constant(alpha);
  self_ = 2.0 * hs / (2.0 * alpha);
  taylor_ = h * h * hs * (1.0 / (2.0 - 2.0 * alpha) - interpolation_bias(alpha));
  diag_ = c_ * (self_ + 2.0 * taylor_ / (h * h));
  std::vector<double> w(static_cast<size_t>(n), 0.0);
  for (int k = 1; k < n; ++k) {
    double v = r.fall(k);
    if (k >= 2) v += r.rise(k - 1);
    w[k] = hs * v;
  }
  rise_.assign(static_cast<size_t>(n), 0.0);
  beyond_.assign(static_cast<size_t>(n), 0.0);
  for (int K = 0; K < n; ++K) {
    if (K >= 1) rise_[K] = hs * r.rise(K);
    beyond_[K] = std::pow((K + 1) * h, -2.0 * alpha) / (2.0 * alpha);
  }
  conv_ = std::make_shared<SymmetricToeplitz>(std::move(w));
}

std::vector<double> FracLaplacianQuadrature::apply(std::span<const double> f,
                                                   const TailModel& tail, double x0) const {
  require(static_cast<int>(f.size()) == n_, "laplacian input length mismatch");
  const int n = n_;
  const double xl = x0 - h_;
  const double xr = x0 + n * h_;
  const double fL = tail.left + (tail.left_excess ? tail.left_excess(xl) : 0.0);
  const double fR = tail.right + (tail.right_excess ? tail.right_excess(xr) : 0.0);
  auto conv = conv_->apply(f);
  std::vector<double> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int KL = i;
    const int KR = n - 1 - i;
    const double fm = i > 0 ? f[i - 1] : fL;
    const double fp = i + 1 < n ? f[i + 1] : fR;
    const double d2 = (fp - 2.0 * f[i] + fm) / (h_ * h_);
    double far = conv[i] + fR * rise_[KR] + fL * rise_[KL] + tail.right * beyond_[KR] +
                 tail.left * beyond_[KL];
    const double xi = x0 + i * h_;
    if (tail.right_excess)
      far += excess_integral(tail.right_excess, xi, (KR + 1) * h_, alpha_, 1.0);
    if (tail.left_excess)
      far += excess_integral(tail.left_excess, xi, (KL + 1) * h_, alpha_, -1.0);
    out[i] = c_ * (f[i] * self_ - far - d2 * taylor_);
  }
  return out;
}

// ------------------------------------------------------------ field level

Field riesz_potential(const Field& u, double s, Backend backend) {
  check_order(s, "s");
  if (backend == Backend::spectral)
    return spectral_apply({OpKind::riesz_potential, s, 0.0, Backend::spectral}, u);
  require(u.grid().topology == Topology::truncated_line,
          "quadrature backend needs a truncated line");
  require(s < 0.5, "quadrature riesz potential needs s < 1/2 in 1D");
  auto op = PotentialOperator::quadrature(u.size(), u.grid().h, s, 0.0);
  return Field(u.grid(), op.apply(u.values()), FieldKind::pressure);
}

Field smoothed_potential(const Field& u, double s, double eps) {
  check_order(s, "s");
  require(std::isfinite(eps) && eps >= 0.0, "eps must be >= 0");
  if (u.grid().topology == Topology::periodic)
    return spectral_apply({OpKind::smoothed_potential, s, eps, Backend::spectral}, u);
  require(s < 0.5, "quadrature smoothed potential needs s < 1/2 in 1D");
  auto op = PotentialOperator::quadrature(u.size(), u.grid().h, s, eps);
  return Field(u.grid(), op.apply(u.values()), FieldKind::pressure);
}

Field half_potential(const Field& u, double s, double eps) {
  check_order(s, "s");
  require(std::isfinite(eps) && eps >= 0.0, "eps must be >= 0");
  return spectral_apply({OpKind::half_potential, s, eps, Backend::spectral}, u);
}

Field frac_laplacian(const Field& f, double alpha, Backend backend,
                     const std::optional<TailModel>& tail) {
  check_order(alpha, "alpha");
  if (backend == Backend::spectral)
    return spectral_apply({OpKind::frac_laplacian, alpha, 0.0, Backend::spectral}, f);
  require(tail.has_value(), "quadrature laplacian needs a declared tail model");
  FracLaplacianQuadrature q(f.size(), f.grid().h, alpha);
  return Field(f.grid(), q.apply(f.values(), *tail, f.grid().x(0)), FieldKind::pressure);
}

Field frac_laplacian(const Grid& grid, const std::function<double(double)>& f, double alpha,
                     const TailModel& tail) {
  Field sampled = Field::sample(grid, f, FieldKind::pressure);
  return frac_laplacian(sampled, alpha, Backend::quadrature, tail);
}

Field apply(const OperatorSpec& spec, const Field& f, const std::optional<TailModel>& tail) {
  spec.validate();
  switch (spec.kind) {
    case OpKind::riesz_potential: return riesz_potential(f, spec.order, spec.backend);
    case OpKind::smoothed_potential:
      if (spec.backend == Backend::spectral)
        return spectral_apply(spec, f);
      return smoothed_potential(f, spec.order, spec.eps);
    case OpKind::half_potential: return half_potential(f, spec.order, spec.eps);
    case OpKind::frac_laplacian: return frac_laplacian(f, spec.order, spec.backend, tail);
  }
  return f;
}

Field padded_spectral(const OperatorSpec& spec, const Field& f, int pad) {
  check_order(spec.order, "operator order");
  require(f.grid().topology == Topology::truncated_line,
          "padded spectral is for truncated lines");
  require(pad >= 2, "padding factor must be >= 2");
  const int N = next_pow2(pad * f.size());
  RealFft fft(N);
  auto mult = spectral_table(spec, N, f.grid().h);
  std::vector<double> x(static_cast<size_t>(N), 0.0);
  std::copy(f.values().begin(), f.values().end(), x.begin());
  auto y = detail::apply_multiplier(fft, x, mult);
  y.resize(static_cast<size_t>(f.size()));
  return Field(f.grid(), std::move(y), FieldKind::pressure);
}

}  // namespace fracpme
