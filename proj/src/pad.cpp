#include "rotpad/pad.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "rotpad/errors.h"

namespace rotpad {

RotationAngle rotation_angle(const BinCovariance& cov) {
  const double y = cov.ll - cov.rr;
  const double x = 2.0 * cov.lr;
  if (y == 0.0 && x == 0.0) return {0.0};
  double theta = 0.5 * std::atan2(y, x);
  // atan2 returns (-pi, pi]; halving maps -pi/2 exactly onto the excluded end.
  if (theta <= -(std::numbers::pi / 2)) theta += std::numbers::pi;
  return {theta};
}

BinCovariance rotate_cov(const BinCovariance& cov, RotationAngle theta) {
  const double c = std::cos(theta.radians);
  const double s = std::sin(theta.radians);
  BinCovariance out;
  out.ll = c * c * cov.ll - 2.0 * c * s * cov.lr + s * s * cov.rr;
  out.rr = s * s * cov.ll + 2.0 * c * s * cov.lr + c * c * cov.rr;
  out.lr = c * s * (cov.ll - cov.rr) + (c * c - s * s) * cov.lr;
  return out;
}

UnmixPair pad_unmix(const BinCovariance& cov) {
  const double diff = cov.ll - cov.rr;
  const double k = std::sqrt(diff * diff + 4.0 * cov.lr * cov.lr);
  const double denom = cov.ll + cov.rr + k;
  if (!(denom > 0.0) || !std::isfinite(denom)) return {Mat2::identity(), Mat2{}};
  const double scale = 2.0 / denom;
  const Mat2 ambient{cov.rr * scale, -cov.lr * scale, -cov.lr * scale, cov.ll * scale};
  return {ambient, Mat2::identity() - ambient};
}

UnmixField pad_unmix_field(const CovarianceField& field) {
  const CovarianceField reg = regularize(field);
  UnmixField out(field.frames, field.bins);
  for (std::size_t i = 0; i < reg.grid.size(); ++i) out.ambient[i] = pad_unmix(reg.grid[i]).ambient;
  return out;
}

UnmixField smooth_unmix(const UnmixField& field, std::size_t len) {
  if (len == 0 || len % 2 == 0)
    throw InvalidArgument("smoothing length must be odd and >= 1, got " + std::to_string(len));
  if (len == 1) return field;
  UnmixField out(field.frames, field.bins);
  const std::size_t half = len / 2;
  for (std::size_t t = 0; t < field.frames; ++t) {
    const std::size_t lo = t >= half ? t - half : 0;
    const std::size_t hi = std::min(field.frames - 1, t + half);
    const double inv = 1.0 / double(hi - lo + 1);
    for (std::size_t k = 0; k < field.bins; ++k) {
      Mat2 acc;
      for (std::size_t s = lo; s <= hi; ++s) acc = acc + field.at(s, k);
      out.at(t, k) = acc * inv;
    }
  }
  return out;
}

PadOutput apply_unmix(const Spectrogram& spec, const UnmixField& field) {
  if (spec.channels.size() != 2) throw InvalidArgument("stereo input required");
  if (field.frames != spec.frames || field.bins != spec.bins)
    throw InvalidArgument("un-mixing field does not match spectrogram");
  PadOutput out{Spectrogram(spec.config, 2, spec.frames, spec.original_len, spec.sample_rate),
                Spectrogram(spec.config, 2, spec.frames, spec.original_len, spec.sample_rate)};
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) {
      const UnmixPair u = field.pair(t, k);
      const Complex xl = spec.at(0, t, k);
      const Complex xr = spec.at(1, t, k);
      out.ambient.at(0, t, k) = u.ambient.a00 * xl + u.ambient.a01 * xr;
      out.ambient.at(1, t, k) = u.ambient.a10 * xl + u.ambient.a11 * xr;
      out.primary.at(0, t, k) = u.primary.a00 * xl + u.primary.a01 * xr;
      out.primary.at(1, t, k) = u.primary.a10 * xl + u.primary.a11 * xr;
    }
  }
  return out;
}

PadOutput apply_pad(const Spectrogram& spec, const CovarianceField& field, std::size_t unmix_smooth) {
  if (field.frames != spec.frames || field.bins != spec.bins)
    throw InvalidArgument("covariance field does not match spectrogram");
  return apply_unmix(spec, smooth_unmix(pad_unmix_field(field), unmix_smooth));
}

}  // namespace rotpad
