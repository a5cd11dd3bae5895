#include "rotpad/covariance.h"

#include <algorithm>
#include <cmath>

#include "rotpad/errors.h"

namespace rotpad {

BinCovariance clamp_psd(BinCovariance c) {
  // Tiles exactly on the bound (fully coherent) are pulled inside too, so the
  // determinant stays positive.
  const double mag = std::sqrt(std::max(c.ll * c.rr, 0.0)) * (1.0 - kPsdMargin);
  if (std::abs(c.lr) > mag) c.lr = std::copysign(mag, c.lr);
  return c;
}

CovarianceField instantaneous_cov(const Spectrogram& spec) {
  if (spec.channels.size() != 2) throw InvalidArgument("covariance needs a stereo spectrogram");
  CovarianceField field(spec.frames, spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) {
      const Complex xl = spec.at(0, t, k);
      const Complex xr = spec.at(1, t, k);
      auto& c = field.at(t, k);
      c.ll = std::norm(xl);
      c.rr = std::norm(xr);
      c.lr = (std::conj(xl) * xr).real();
    }
  }
  return field;
}

CovarianceField smooth_time(const CovarianceField& field, std::size_t len) {
  if (len == 0 || len % 2 == 0)
    throw InvalidArgument("smoothing length must be odd and >= 1, got " + std::to_string(len));
  CovarianceField out(field.frames, field.bins);
  out.smoothing_len = len;
  const std::size_t half = len / 2;
  for (std::size_t t = 0; t < field.frames; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(field.frames - 1, t + half);
    const double inv = 1.0 / double(hi - lo + 1);
    for (std::size_t k = 0; k < field.bins; ++k) {
      BinCovariance acc;
      for (std::size_t s = lo; s <= hi; ++s) {
        const auto& c = field.at(s, k);
        acc.ll += c.ll;
        acc.rr += c.rr;
        acc.lr += c.lr;
      }
      acc.ll *= inv;
      acc.rr *= inv;
      acc.lr *= inv;
      out.at(t, k) = clamp_psd(acc);
    }
  }
  return out;
}

CovarianceField regularize(const CovarianceField& field) {
  CovarianceField out = field;
  for (std::size_t t = 0; t < field.frames; ++t) {
    double broadband = 0.0;
    for (std::size_t k = 0; k < field.bins; ++k) broadband += field.at(t, k).trace();
    const double floor = kEnergyFloor * (broadband + 1e-30);
    for (std::size_t k = 0; k < field.bins; ++k) {
      auto& c = out.at(t, k);
      c.ll = std::max(c.ll, floor);
      c.rr = std::max(c.rr, floor);
      c = clamp_psd(c);
    }
  }
  return out;
}

}  // namespace rotpad
