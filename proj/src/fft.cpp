#include "fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <mutex>

#include "fracpme/error.hpp"

namespace fracpme::detail {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

struct Buf {
  explicit Buf(size_t bytes) : p(fftw_malloc(bytes)) {
    if (!p) throw NumericalError("fftw_malloc failed");
  }
  ~Buf() { fftw_free(p); }
  Buf(const Buf&) = delete;
  Buf& operator=(const Buf&) = delete;
  void* p;
};

}  // namespace

RealFft::RealFft(int n) : n_(n), fwd_(nullptr), inv_(nullptr) {
  require(n >= 2, "fft length must be >= 2");
  Buf r(sizeof(double) * static_cast<size_t>(n));
  Buf c(sizeof(fftw_complex) * static_cast<size_t>(n / 2 + 1));
  std::lock_guard<std::mutex> lock(plan_mutex());
  fwd_ = fftw_plan_dft_r2c_1d(n, static_cast<double*>(r.p), static_cast<fftw_complex*>(c.p),
                              FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_1d(n, static_cast<fftw_complex*>(c.p), static_cast<double*>(r.p),
                              FFTW_ESTIMATE);
  if (!fwd_ || !inv_) throw NumericalError("fftw planning failed");
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(plan_mutex());
  if (fwd_) fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  if (inv_) fftw_destroy_plan(static_cast<fftw_plan>(inv_));
}

std::vector<std::complex<double>> RealFft::forward(std::span<const double> x) const {
  require(static_cast<int>(x.size()) == n_, "fft input length mismatch");
  const size_t m = static_cast<size_t>(n_ / 2 + 1);
  Buf r(sizeof(double) * static_cast<size_t>(n_));
  Buf c(sizeof(fftw_complex) * m);
  std::memcpy(r.p, x.data(), sizeof(double) * x.size());
  fftw_execute_dft_r2c(static_cast<fftw_plan>(fwd_), static_cast<double*>(r.p),
                       static_cast<fftw_complex*>(c.p));
  std::vector<std::complex<double>> out(m);
  std::memcpy(out.data(), c.p, sizeof(fftw_complex) * m);
  return out;
}

std::vector<double> RealFft::inverse(std::span<const std::complex<double>> X) const {
  const size_t m = static_cast<size_t>(n_ / 2 + 1);
  require(X.size() == m, "inverse fft input length mismatch");
  Buf r(sizeof(double) * static_cast<size_t>(n_));
  Buf c(sizeof(fftw_complex) * m);
  std::memcpy(c.p, X.data(), sizeof(fftw_complex) * m);
  fftw_execute_dft_c2r(static_cast<fftw_plan>(inv_), static_cast<fftw_complex*>(c.p),
                       static_cast<double*>(r.p));
  std::vector<double> out(static_cast<size_t>(n_));
  std::memcpy(out.data(), r.p, sizeof(double) * out.size());
  return out;
}

std::vector<double> apply_multiplier(const RealFft& fft, std::span<const double> x,
                                     std::span<const double> mult) {
  auto X = fft.forward(x);
  require(mult.size() == X.size(), "multiplier table length mismatch");
  const double scale = 1.0 / fft.size();
  for (size_t k = 0; k < X.size(); ++k) X[k] *= mult[k] * scale;
  return fft.inverse(X);
}

}  // namespace fracpme::detail
