#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "rotpad/audio_io.h"

namespace rotpad {

using Complex = std::complex<double>;

/// Analysis parameters. The defaults are 1024-sample sine-windowed frames, 50%
/// overlap, and a 2048-point transform (frame zero-padded to twice its length).
struct StftConfig {
  std::size_t frame_len = 1024;
  std::size_t hop = 512;
  std::size_t zero_pad_factor = 2;

  std::size_t transform_size() const { return frame_len * zero_pad_factor; }
  std::size_t bins() const { return transform_size() / 2 + 1; }
  std::size_t frames_for(std::size_t len) const { return (len + frame_len + hop - 1) / hop; }

  /// Throws InvalidArgument unless the sine window overlap-adds to a constant at this hop.
  void validate() const;

  bool operator==(const StftConfig&) const = default;
};

/// sin(pi (n + 0.5) / frame_len).
std::vector<double> sine_window(std::size_t frame_len);

/// Analysis window divided by the overlap-added squared window, so that the
/// analysis x synthesis product sums to one across frames.
std::vector<double> synthesis_window(const StftConfig& cfg);

/// Complex tiles for any number of channels, stored frame-major per channel.
///
/// Only the non-negative frequency bins are kept. Parseval across a frame:
/// |X_0|^2 + |X_{K-1}|^2 + 2 sum_{0<k<K-1} |X_k|^2 = M sum_n (w[n] x[n])^2,
/// with M the transform size.
struct Spectrogram {
  StftConfig config;
  int sample_rate = 48000;
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::size_t original_len = 0;
  std::vector<std::vector<Complex>> channels;

  Spectrogram() = default;
  Spectrogram(const StftConfig& cfg, std::size_t channel_count, std::size_t frame_count,
              std::size_t len, int rate);

  Complex& at(std::size_t ch, std::size_t t, std::size_t k) { return channels[ch][t * bins + k]; }
  const Complex& at(std::size_t ch, std::size_t t, std::size_t k) const {
    return channels[ch][t * bins + k];
  }
  bool same_shape(const Spectrogram& other) const {
    return frames == other.frames && bins == other.bins && config == other.config;
  }
};

/// Frame t covers input samples [t*hop - (frame_len - hop), t*hop + hop); the
/// signal is zero-extended on both sides so every sample sits under full windows.
Spectrogram analyze(const AudioBuffer& stereo, const StftConfig& cfg);

/// Any channel count; used internally by analyze and by tests.
Spectrogram analyze_channels(const AudioBuffer& buf, const StftConfig& cfg);

/// Weighted overlap-add, truncated to out_len samples.
AudioBuffer synthesize(const Spectrogram& spec, const StftConfig& cfg, std::size_t out_len);

}  // namespace rotpad
