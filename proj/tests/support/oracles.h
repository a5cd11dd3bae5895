#pragma once

// Reference computations that deliberately avoid the library's code paths.

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "rotpad/audio_io.h"
#include "rotpad/covariance.h"

namespace oracle {

/// G = C_obj D^T C_x^-1 by an explicit 2x2 solve in extended precision; rows l, r, c.
Eigen::Matrix<double, 3, 2> wiener_ce(const rotpad::BinCovariance& cov);

/// Rotation matrix [[cos, -sin], [sin, cos]].
Eigen::Matrix2d rotation(double theta);

/// Explicit rotate / extract center / counter-rotate chain. Returns the full
/// 4x2 matrix with rows a_L, a_R, p_L, p_R.
Eigen::Matrix<double, 4, 2> pad_full_via_rotation(const rotpad::BinCovariance& cov);

/// Loudness with the published 48 kHz K-weighting, evaluated block by block.
double bs1770_loudness(const std::vector<std::vector<double>>& channels,
                       const std::vector<double>& weights);

/// Naive O(N^2) DFT bin.
std::complex<double> dft_bin(const std::vector<double>& x, std::size_t n_fft, std::size_t k);

}  // namespace oracle
