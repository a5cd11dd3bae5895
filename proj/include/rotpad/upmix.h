#pragma once

#include <array>
#include <string>

#include "rotpad/audio_io.h"

namespace rotpad {

enum class DialRegion { Narrowing, Relocation, Boost };

std::string to_string(DialRegion region);

inline constexpr int kDialPositions = 31;
inline constexpr int kReferenceDial = 5;

inline constexpr std::array<double, 5> kNarrowingCoefficients = {0.5, 0.57, 0.66, 0.76, 0.87};
inline constexpr std::array<double, 16> kRelocationGainsDb = {
    0, -1.5, -3, -5, -7.5, -10.5, -14, -18, -23, -28, -34, -41, -49, -59, -76, -96};
inline constexpr std::array<double, 10> kBoostGainsDb = {1, 3, 5, 7, 9, 11, 13, 15, 17, 20};

/// One of the 31 up-mix positions. `param` is the cross-mix coefficient in the
/// narrowing region and a gain in dB otherwise.
struct DialSetting {
  int index = kReferenceDial;
  DialRegion region = DialRegion::Relocation;
  double param = 0.0;

  /// Throws InvalidArgument outside 0..30.
  static DialSetting from_index(int index);
};

/// Time-domain primary/ambient pair, both stereo and the same length as the input.
struct PadSignals {
  AudioBuffer primary;
  AudioBuffer ambient;
};

struct QuadRender {
  AudioBuffer audio;  // FL FR SL SR
  double rfr_db = 0.0;
  double loudness_lufs = 0.0;
  double norm_gain_db = 0.0;
  DialSetting dial;
};

/// Loudspeaker feeds for the three regions:
///   narrowing  FL = a xL + (1-a) xR, FR = (1-a) xL + a xR, rears silent
///   relocation FL = pL + g aL, FR = pR + g aR, SL = (1-g) aL, SR = (1-g) aR
///   boost      FL = pL, FR = pR, SL = b aL, SR = b aR
/// with g and b the linear amplitudes of the dial's dB value. Not normalized;
/// loudness_lufs is left as NaN.
QuadRender render(const AudioBuffer& input, const PadSignals& pad, const DialSetting& dial);

/// render() followed by loudness normalization to `target_lufs`.
QuadRender render_normalized(const AudioBuffer& input, const PadSignals& pad,
                             const DialSetting& dial, double target_lufs);

/// 10 log10(rear energy / front energy) for FL FR SL SR. -inf for silent rears,
/// +inf for silent fronts with audible rears.
double rfr_db(const AudioBuffer& quad);

/// FL + 0.7 SL, FR + 0.7 SR, for stereo monitoring of a quad render.
inline constexpr double kFoldDownGain = 0.7;
AudioBuffer fold_down(const AudioBuffer& quad);

}  // namespace rotpad
