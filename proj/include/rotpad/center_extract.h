#pragma once

#include <array>

#include "rotpad/covariance.h"
#include "rotpad/stft.h"

namespace rotpad {

/// Energies of the left-only, center and right-only components of the
/// three-source stereo model x_L = l + c, x_R = r + c.
struct ComponentEnergies {
  double left = 0.0;
  double center = 0.0;
  double right = 0.0;
};

/// 3x2 Wiener un-mixing matrix. Rows estimate l, r, c from [x_L, x_R].
struct CeUnmix {
  std::array<std::array<double, 2>, 3> g{};

  const std::array<double, 2>& left() const { return g[0]; }
  const std::array<double, 2>& right() const { return g[1]; }
  const std::array<double, 2>& center() const { return g[2]; }
};

/// Determinant below which ce_unmix falls back to pass-through.
inline constexpr double kMinDeterminant = 1e-30;

ComponentEnergies component_energies(const BinCovariance& cov);

/// G = C_sx C_x^-1 in closed form. Negative cross terms are treated as zero
/// (no anti-phase center). The l and r rows are built as the complement of the
/// c row, so l + c = x_L and r + c = x_R hold to rounding.
CeUnmix ce_unmix(const BinCovariance& cov);

/// Single-channel spectrograms of the three estimates.
struct CeOutput {
  Spectrogram left;
  Spectrogram right;
  Spectrogram center;
};

/// Regularizes `field`, then applies ce_unmix per tile.
CeOutput apply_ce(const Spectrogram& spec, const CovarianceField& field);

}  // namespace rotpad
