#include "rotpad/stft.h"

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include "fft.h"
#include "rotpad/errors.h"

namespace rotpad {

namespace detail {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  std::lock_guard lock(planner_mutex());
  real_ = fftw_alloc_real(n);
  spectrum_ = fftw_alloc_complex(n / 2 + 1);
  forward_ = fftw_plan_dft_r2c_1d(int(n), real_, spectrum_, FFTW_ESTIMATE);
  inverse_ = fftw_plan_dft_c2r_1d(int(n), spectrum_, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(forward_);
  fftw_destroy_plan(inverse_);
  fftw_free(real_);
  fftw_free(spectrum_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
  std::copy(in.begin(), in.end(), real_);
  fftw_execute(forward_);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {spectrum_[k][0], spectrum_[k][1]};
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
  for (std::size_t k = 0; k < in.size(); ++k) {
    spectrum_[k][0] = in[k].real();
    spectrum_[k][1] = in[k].imag();
  }
  // Bin 0 and Nyquist must be real for a c2r transform of real data.
  spectrum_[0][1] = 0.0;
  spectrum_[n_ / 2][1] = 0.0;
  fftw_execute(inverse_);
  const double scale = 1.0 / double(n_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = real_[i] * scale;
}

}  // namespace detail

void StftConfig::validate() const {
  if (frame_len < 2 || hop == 0 || hop > frame_len || zero_pad_factor == 0)
    throw InvalidArgument("invalid STFT configuration");
  // The squared sine window overlap-adds to frame_len / (2 hop) when hop divides frame_len / 2.
  if ((frame_len / 2) % hop != 0 || frame_len % 2 != 0)
    throw InvalidArgument("hop " + std::to_string(hop) + " must divide frame_len/2 = " +
                          std::to_string(frame_len / 2));
}

std::vector<double> sine_window(std::size_t frame_len) {
  std::vector<double> w(frame_len);
  for (std::size_t n = 0; n < frame_len; ++n)
    w[n] = std::sin(std::numbers::pi * (double(n) + 0.5) / double(frame_len));
  return w;
}

std::vector<double> synthesis_window(const StftConfig& cfg) {
  auto w = sine_window(cfg.frame_len);
  const double overlap = double(cfg.frame_len) / (2.0 * double(cfg.hop));
  for (auto& v : w) v /= overlap;
  return w;
}

Spectrogram::Spectrogram(const StftConfig& cfg, std::size_t channel_count,
                         std::size_t frame_count, std::size_t len, int rate)
    : config(cfg),
      sample_rate(rate),
      frames(frame_count),
      bins(cfg.bins()),
      original_len(len),
      channels(channel_count, std::vector<Complex>(frame_count * cfg.bins())) {}

Spectrogram analyze_channels(const AudioBuffer& buf, const StftConfig& cfg) {
  cfg.validate();
  buf.validate();
  const std::size_t len = buf.frames();
  const std::size_t frames = cfg.frames_for(len);
  const std::size_t lead = cfg.frame_len - cfg.hop;
  Spectrogram spec(cfg, buf.channels(), frames, len, buf.sample_rate);

  const auto window = sine_window(cfg.frame_len);
  detail::RealFft fft(cfg.transform_size());
  std::vector<double> frame(cfg.transform_size(), 0.0);

  for (std::size_t ch = 0; ch < buf.channels(); ++ch) {
    const auto& x = buf.samples[ch];
    for (std::size_t t = 0; t < frames; ++t) {
      // Signed start so the leading frames reach into the zero extension.
      const std::ptrdiff_t start = std::ptrdiff_t(t * cfg.hop) - std::ptrdiff_t(lead);
      for (std::size_t n = 0; n < cfg.frame_len; ++n) {
        const std::ptrdiff_t i = start + std::ptrdiff_t(n);
        frame[n] = (i >= 0 && std::size_t(i) < len) ? x[std::size_t(i)] * window[n] : 0.0;
      }
      fft.forward(frame, std::span(spec.channels[ch]).subspan(t * spec.bins, spec.bins));
    }
  }
  return spec;
}

Spectrogram analyze(const AudioBuffer& stereo, const StftConfig& cfg) {
  if (stereo.channels() != 2) throw InvalidArgument("stereo input required");
  return analyze_channels(stereo, cfg);
}

AudioBuffer synthesize(const Spectrogram& spec, const StftConfig& cfg, std::size_t out_len) {
  if (!(spec.config == cfg)) throw InvalidArgument("spectrogram was produced with a different STFT config");
  cfg.validate();
  if (spec.bins != cfg.bins()) throw InvalidArgument("spectrogram bin count does not match config");
  for (const auto& ch : spec.channels)
    if (ch.size() != spec.frames * spec.bins) throw InvalidArgument("spectrogram dimensions inconsistent");

  const std::size_t lead = cfg.frame_len - cfg.hop;
  const auto window = synthesis_window(cfg);
  detail::RealFft fft(cfg.transform_size());
  std::vector<double> frame(cfg.transform_size());

  AudioBuffer out(spec.channels.size(), out_len, spec.sample_rate);
  for (std::size_t ch = 0; ch < spec.channels.size(); ++ch) {
    auto& y = out.samples[ch];
    for (std::size_t t = 0; t < spec.frames; ++t) {
      fft.inverse(std::span(spec.channels[ch]).subspan(t * spec.bins, spec.bins), frame);
      const std::ptrdiff_t start = std::ptrdiff_t(t * cfg.hop) - std::ptrdiff_t(lead);
      for (std::size_t n = 0; n < cfg.frame_len; ++n) {
        const std::ptrdiff_t i = start + std::ptrdiff_t(n);
        if (i >= 0 && std::size_t(i) < out_len) y[std::size_t(i)] += frame[n] * window[n];
      }
    }
  }
  return out;
}

}  // namespace rotpad
