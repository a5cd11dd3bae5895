#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "rotpad/audio_io.h"
#include "rotpad/stft.h"
#include "rotpad/upmix.h"

namespace rotpad {

enum class DecompositionMode { Ce, Pad };

DecompositionMode parse_mode(const std::string& name);

struct PipelineConfig {
  StftConfig stft;
  std::size_t cov_smooth_frames = 5;
  std::size_t unmix_smooth_frames = 3;
  DecompositionMode mode = DecompositionMode::Pad;
  std::optional<double> loudness_target;  // nullopt: match the input item

  void validate() const;
};

/// Time-domain left/right/center estimates, each mono.
struct CeSignals {
  AudioBuffer left;
  AudioBuffer right;
  AudioBuffer center;
};

/// Stereo -> primary + ambient stereo pairs. Throws InvalidArgument for
/// anything but 2 channels.
PadSignals decompose_pad(const AudioBuffer& stereo, const PipelineConfig& cfg = {});

CeSignals decompose_ce(const AudioBuffer& stereo, const PipelineConfig& cfg = {});

}  // namespace rotpad
