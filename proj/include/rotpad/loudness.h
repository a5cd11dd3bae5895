#pragma once

#include <array>
#include <string>

#include "rotpad/audio_io.h"

namespace rotpad {

/// Biquad in direct form: b0 b1 b2 / 1 a1 a2.
struct Biquad {
  std::array<double, 3> b{};
  std::array<double, 2> a{};
};

/// K-weighting stages (high shelf, then RLB high-pass). At 48 kHz these are the
/// coefficients published with BS.1770; other rates use a bilinear design of
/// the same analog prototypes.
std::array<Biquad, 2> k_weighting(int sample_rate);

/// Gain applied to a channel's mean square before summation.
double channel_weight(const std::string& label);

/// Integrated loudness in LUFS (400 ms blocks, 100 ms step, -70 LUFS absolute and
/// -10 LU relative gates). Returns -infinity when every block is gated out.
/// Throws InvalidArgument when the signal is shorter than one block.
double integrated_loudness(const AudioBuffer& buf);

struct Normalized {
  AudioBuffer audio;
  double gain_db = 0.0;
};

/// Single broadband gain so the result measures `target_lufs`.
Normalized normalize_to(const AudioBuffer& buf, double target_lufs);

}  // namespace rotpad
