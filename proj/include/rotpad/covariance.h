#pragma once

#include <cstddef>
#include <vector>

#include "rotpad/stft.h"

namespace rotpad {

/// Real-valued summary of a 2x2 Hermitian covariance: the two auto energies
/// and the real part of the cross term.
struct BinCovariance {
  double ll = 0.0;
  double rr = 0.0;
  double lr = 0.0;

  double trace() const { return ll + rr; }
  double det() const { return ll * rr - lr * lr; }
};

/// Relative margin kept below the Cauchy-Schwarz bound by clamp_psd.
inline constexpr double kPsdMargin = 1e-9;
/// Per-frame energy floor as a fraction of the frame's broadband energy.
inline constexpr double kEnergyFloor = 1e-12;

/// T x K grid of covariances aligned with a Spectrogram.
struct CovarianceField {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t smoothing_len = 1;
  std::vector<BinCovariance> grid;

  CovarianceField() = default;
  CovarianceField(std::size_t t, std::size_t k) : frames(t), bins(k), grid(t * k) {}

  BinCovariance& at(std::size_t t, std::size_t k) { return grid[t * bins + k]; }
  const BinCovariance& at(std::size_t t, std::size_t k) const { return grid[t * bins + k]; }
};

/// Limits |lr| to sqrt(ll*rr) (1 - kPsdMargin), keeping its sign.
BinCovariance clamp_psd(BinCovariance c);

/// Per tile: |X_L|^2, |X_R|^2 and Re{conj(X_L) X_R}. Needs a 2-channel spectrogram.
CovarianceField instantaneous_cov(const Spectrogram& spec);

/// Centered sliding mean over `len` frames per bin, truncated at the edges.
/// `len` must be odd. The PSD clamp is re-applied to every output tile.
CovarianceField smooth_time(const CovarianceField& field, std::size_t len);

/// Floors ll and rr at kEnergyFloor * (frame broadband energy + 1e-30) and
/// applies clamp_psd. Run before anything divides by covariance entries.
CovarianceField regularize(const CovarianceField& field);

}  // namespace rotpad
