#pragma once

#include <complex>
#include <cstddef>
#include <span>

#include <fftw3.h>

namespace rotpad::detail {

// One real-input FFT of fixed size with its own scratch buffers. Instances are
// not shared between threads; planning is serialized internally.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }

  // in: n real samples; out: n/2+1 bins. Unnormalized.
  void forward(std::span<const double> in, std::span<std::complex<double>> out);
  // in: n/2+1 bins; out: n real samples, scaled by 1/n.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out);

 private:
  std::size_t n_;
  double* real_;
  fftw_complex* spectrum_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

}  // namespace rotpad::detail
