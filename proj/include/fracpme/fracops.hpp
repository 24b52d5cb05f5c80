#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "fracpme/field.hpp"

namespace fracpme {

namespace detail {
class RealFft;
}

enum class OpKind { riesz_potential, smoothed_potential, half_potential, frac_laplacian };
enum class Backend { spectral, quadrature };

struct OperatorSpec {
  OpKind kind = OpKind::riesz_potential;
  double order = 0.25;
  double eps = 0.0;
  Backend backend = Backend::spectral;

  void validate() const;
};

// c_{1,s} = Gamma((1-2s)/2) / (4^s sqrt(pi) Gamma(s)), s in (0, 1/2).
double riesz_constant(double s);
// C(alpha) = 4^alpha Gamma(1/2+alpha) / (sqrt(pi) |Gamma(-alpha)|).
double laplacian_constant(double alpha);

// Fourier symbol of an operator at wavenumber xi >= 0. The zero mode of the
// unsmoothed potentials is 0 by convention.
double symbol(const OperatorSpec& spec, double xi);

// What the quadrature Laplacian sees beyond the grid:
// f(y) = left + left_excess(y) for y left of the grid and likewise on the
// right. Excess parts are optional and must decay.
struct TailModel {
  double left = 0.0;
  double right = 0.0;
  std::function<double(double)> left_excess;
  std::function<double(double)> right_excess;

  static TailModel zero() { return {}; }
  static TailModel constant(double l, double r) { return {l, r, {}, {}}; }
};

Field riesz_potential(const Field& u, double s, Backend backend);
// Multiplier (eps + xi^2)^(-s) on a periodic grid.
Field smoothed_potential(const Field& u, double s, double eps);
// Multiplier |xi|^(-s), or (eps + xi^2)^(-s/2) when eps > 0.
Field half_potential(const Field& u, double s, double eps = 0.0);
// Spectral on periodic grids; quadrature needs a tail model.
Field frac_laplacian(const Field& f, double alpha, Backend backend,
                     const std::optional<TailModel>& tail = std::nullopt);
// Quadrature of a closed-form function sampled at the grid centres; the
// tail model covers the region outside the grid.
Field frac_laplacian(const Grid& grid, const std::function<double(double)>& f, double alpha,
                     const TailModel& tail);
Field apply(const OperatorSpec& spec, const Field& f,
            const std::optional<TailModel>& tail = std::nullopt);

// Spectral operator on a truncated line: zero-extend onto a periodic grid of
// at least pad*n cells (power of two), apply, restrict.
Field padded_spectral(const OperatorSpec& spec, const Field& f, int pad);

// y_i = sum_j w_|i-j| x_j for fixed kernel w (length n), by circulant
// embedding.
class SymmetricToeplitz {
 public:
  explicit SymmetricToeplitz(std::vector<double> w);
  ~SymmetricToeplitz();
  SymmetricToeplitz(SymmetricToeplitz&&) noexcept;
  SymmetricToeplitz& operator=(SymmetricToeplitz&&) noexcept;

  int size() const { return n_; }
  const std::vector<double>& weights() const { return w_; }
  std::vector<double> apply(std::span<const double> x) const;

 private:
  int n_;
  std::vector<double> w_;
  std::unique_ptr<detail::RealFft> fft_;
  std::vector<double> mult_;
};

// Riesz cell weights: w_k = c_{1,s} * integral of |y|^(2s-1) over cell k
// (cell 0 centred on the singularity). Exact, not midpoint.
std::vector<double> riesz_cell_weights(int count, double h, double s);
// Same for the Bessel-potential kernel of (eps - Laplacian)^(-s), eps > 0.
std::vector<double> bessel_cell_weights(int count, double h, double s, double eps);

// Pressure map on n cells of a truncated line (zero density outside),
// either by kernel quadrature (s < 1/2) or by padded spectral multiplier.
class PotentialOperator {
 public:
  static PotentialOperator quadrature(int n, double h, double s, double eps);
  static PotentialOperator padded_spectral(int n, double h, double s, double eps, int pad);

  std::vector<double> apply(std::span<const double> u) const;
  // Symbol of the discrete operator at the grid Nyquist mode; enters the
  // explicit stiffness bound.
  double nyquist_symbol() const { return nyquist_; }
  int size() const { return n_; }
  Backend backend() const { return backend_; }

 private:
  PotentialOperator() = default;
  Backend backend_ = Backend::quadrature;
  int n_ = 0;
  double nyquist_ = 0.0;
  std::shared_ptr<const SymmetricToeplitz> conv_;
  std::shared_ptr<const detail::RealFft> fft_;
  std::vector<double> mult_;
};

// Quadrature for (-Laplacian)^alpha on n equispaced nodes. Far field uses
// piecewise-linear interpolation through the node values, a ghost node on
// each side taken from the tail model, and the tail model itself beyond.
// The singular cell uses a second-order Taylor correction.
class FracLaplacianQuadrature {
 public:
  FracLaplacianQuadrature(int n, double h, double alpha);

  // x0 is the position of node 0 (only excess tails need positions).
  std::vector<double> apply(std::span<const double> f, const TailModel& tail,
                            double x0) const;
  // Coefficient of f_i in (L f)_i, including the Taylor term.
  double diagonal() const { return diag_; }
  double alpha() const { return alpha_; }
  int size() const { return n_; }
  double h() const { return h_; }

 private:
  int n_;
  double h_;
  double alpha_;
  double c_;
  double self_;
  double taylor_;
  double diag_;
  std::vector<double> rise_;    // ghost-node interpolation weight at distance K
  std::vector<double> beyond_;  // integral of |z|^(-1-2alpha) beyond the ghost node
  std::shared_ptr<const SymmetricToeplitz> conv_;
};

}  // namespace fracpme
