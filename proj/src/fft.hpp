#pragma once

#include <complex>
#include <span>
#include <vector>

namespace fracpme::detail {

// Real-to-complex transform pair of a fixed length, FFTW underneath.
// Plans are made once under a global lock (FFTW planning is not
// thread-safe); execution uses the new-array interface on per-call
// buffers, so one object can be used from many threads at once.
class RealFft {
 public:
  explicit RealFft(int n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  int size() const { return n_; }
  int spectrum_size() const { return n_ / 2 + 1; }

  std::vector<std::complex<double>> forward(std::span<const double> x) const;
  // Unnormalised inverse: forward then inverse multiplies by n.
  std::vector<double> inverse(std::span<const std::complex<double>> X) const;

 private:
  int n_;
  void* fwd_;
  void* inv_;
};

// Length-n real data, multiplied mode-wise by mult[k], k = 0..n/2.
std::vector<double> apply_multiplier(const RealFft& fft, std::span<const double> x,
                                     std::span<const double> mult);

}  // namespace fracpme::detail
