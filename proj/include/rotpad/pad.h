#pragma once

#include <cstddef>
#include <vector>

#include "rotpad/covariance.h"
#include "rotpad/stft.h"

namespace rotpad {

struct Mat2 {
  double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  Mat2 operator-(const Mat2& o) const { return {a00 - o.a00, a01 - o.a01, a10 - o.a10, a11 - o.a11}; }
  Mat2 operator+(const Mat2& o) const { return {a00 + o.a00, a01 + o.a01, a10 + o.a10, a11 + o.a11}; }
  Mat2 operator*(double s) const { return {a00 * s, a01 * s, a10 * s, a11 * s}; }
  bool operator==(const Mat2&) const = default;
};

/// Angle of the rotation that equalizes the two channel energies, in (-pi/2, pi/2].
struct RotationAngle {
  double radians = 0.0;
};

/// Ambient and primary un-mixing matrices for one tile; primary = I - ambient.
struct UnmixPair {
  Mat2 ambient;
  Mat2 primary;
};

/// theta = 0.5 * atan2(ll - rr, 2 lr). atan2(0, 0) = 0.
RotationAngle rotation_angle(const BinCovariance& cov);

/// R C R^T with R = [[cos, -sin], [sin, cos]]. Result fields hold c11, c22, c12.
BinCovariance rotate_cov(const BinCovariance& cov, RotationAngle theta);

/// Rotate-to-center, extract the center as primary, counter-rotate; collapsed to
///   ambient = [[rr, -lr], [-lr, ll]] * 2 / (ll + rr + k),
///   k = sqrt((ll - rr)^2 + 4 lr^2),
/// which equals the (k - ll - rr) / (2 (lr^2 - ll rr)) scaling but does not
/// divide by the determinant. All-silent tiles give ambient = I.
UnmixPair pad_unmix(const BinCovariance& cov);

/// Per-tile ambient matrices; the primary matrix is derived as I - ambient.
struct UnmixField {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<Mat2> ambient;

  UnmixField() = default;
  UnmixField(std::size_t t, std::size_t k) : frames(t), bins(k), ambient(t * k) {}

  Mat2& at(std::size_t t, std::size_t k) { return ambient[t * bins + k]; }
  const Mat2& at(std::size_t t, std::size_t k) const { return ambient[t * bins + k]; }
  UnmixPair pair(std::size_t t, std::size_t k) const {
    const Mat2& a = at(t, k);
    return {a, Mat2::identity() - a};
  }
};

/// Regularizes the field and evaluates pad_unmix on every tile.
UnmixField pad_unmix_field(const CovarianceField& field);

/// Centered sliding mean of the ambient matrices over `len` frames (odd),
/// truncated at the edges.
UnmixField smooth_unmix(const UnmixField& field, std::size_t len);

/// Two-channel ambient and primary spectrograms; ambient + primary = input.
struct PadOutput {
  Spectrogram ambient;
  Spectrogram primary;
};

/// Un-mix with the already-smoothed matrices.
PadOutput apply_unmix(const Spectrogram& spec, const UnmixField& field);

/// Full per-tile chain: regularize, pad_unmix, smooth_unmix(unmix_smooth), apply.
PadOutput apply_pad(const Spectrogram& spec, const CovarianceField& field,
                    std::size_t unmix_smooth = 3);

}  // namespace rotpad
