#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace rotpad {

/// Planar multichannel audio. Amplitudes are nominally within [-1, 1].
struct AudioBuffer {
  int sample_rate = 48000;
  std::vector<std::string> layout;            // one label per channel, e.g. FL FR SL SR
  std::vector<std::vector<double>> samples;   // samples[channel][n]

  AudioBuffer() = default;
  AudioBuffer(std::size_t channels, std::size_t frames, int rate);

  std::size_t channels() const { return samples.size(); }
  std::size_t frames() const { return samples.empty() ? 0 : samples.front().size(); }
  double duration_s() const { return sample_rate > 0 ? double(frames()) / sample_rate : 0.0; }

  /// Throws InvalidArgument when channel lengths or layout size disagree.
  void validate() const;
};

enum class SampleFormat { Pcm16, Pcm24, Float32 };

SampleFormat parse_sample_format(const std::string& name);

struct WriteReport {
  std::size_t clipped_samples = 0;
};

/// Labels used when a file carries no channel mask.
std::vector<std::string> default_layout(std::size_t channels);

AudioBuffer read_wav(const std::filesystem::path& path);
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

/// Integer formats clamp out-of-range samples and count them; they never fail.
WriteReport write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
                      SampleFormat format);
std::string encode_wav(const AudioBuffer& buf, SampleFormat format,
                       WriteReport* report = nullptr);

/// FL FR SL SR -> FL FR C LFE SL SR with silent C and LFE.
AudioBuffer quad_to_surround51(const AudioBuffer& quad);

}  // namespace rotpad
