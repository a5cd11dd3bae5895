#include "rotpad/loudness.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "rotpad/errors.h"

namespace rotpad {

namespace {

constexpr double kBlockSeconds = 0.4;
constexpr double kStepSeconds = 0.1;
constexpr double kAbsoluteGate = -70.0;
constexpr double kRelativeGate = -10.0;
constexpr double kOffset = -0.691;

std::vector<double> filter(const std::vector<double>& x, const Biquad& q) {
  std::vector<double> y(x.size());
  double x1 = 0, x2 = 0, y1 = 0, y2 = 0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double v = q.b[0] * x[n] + q.b[1] * x1 + q.b[2] * x2 - q.a[0] * y1 - q.a[1] * y2;
    x2 = x1;
    x1 = x[n];
    y2 = y1;
    y1 = v;
    y[n] = v;
  }
  return y;
}

double to_lufs(double power) {
  return power > 0.0 ? kOffset + 10.0 * std::log10(power) : -std::numeric_limits<double>::infinity();
}

}  // namespace

std::array<Biquad, 2> k_weighting(int sample_rate) {
  if (sample_rate == 48000) {
    return {{{{1.53512485958697, -2.69169618940638, 1.19839281085285},
              {-1.69065929318241, 0.73248077421585}},
             {{1.0, -2.0, 1.0}, {-1.99004745483398, 0.99007225036621}}}};
  }
  const double rate = sample_rate;
  std::array<Biquad, 2> out;
  {
    const double f0 = 1681.974450955533;
    const double gain_db = 3.999843853973347;
    const double q = 0.7071752369554196;
    const double k = std::tan(std::numbers::pi * f0 / rate);
    const double vh = std::pow(10.0, gain_db / 20.0);
    const double vb = std::pow(vh, 0.4996667741545416);
    const double a0 = 1.0 + k / q + k * k;
    out[0].b = {(vh + vb * k / q + k * k) / a0, 2.0 * (k * k - vh) / a0, (vh - vb * k / q + k * k) / a0};
    out[0].a = {2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
  }
  {
    const double f0 = 38.13547087602444;
    const double q = 0.5003270373238773;
    const double k = std::tan(std::numbers::pi * f0 / rate);
    const double a0 = 1.0 + k / q + k * k;
    out[1].b = {1.0, -2.0, 1.0};
    out[1].a = {2.0 * (k * k - 1.0) / a0, (1.0 - k / q + k * k) / a0};
  }
  return out;
}

double channel_weight(const std::string& label) {
  if (label == "LFE") return 0.0;
  if (label == "SL" || label == "SR" || label == "BL" || label == "BR") return 1.41;
  return 1.0;
}

double integrated_loudness(const AudioBuffer& buf) {
  buf.validate();
  const auto block = std::size_t(std::llround(kBlockSeconds * buf.sample_rate));
  const auto step = std::size_t(std::llround(kStepSeconds * buf.sample_rate));
  if (buf.frames() < block) throw InvalidArgument("too short to gate");
  const std::size_t blocks = (buf.frames() - block) / step + 1;

  const auto stages = k_weighting(buf.sample_rate);
  // Weighted block power summed over channels.
  std::vector<double> power(blocks, 0.0);
  for (std::size_t c = 0; c < buf.channels(); ++c) {
    const double weight = channel_weight(buf.layout[c]);
    if (weight == 0.0) continue;
    const auto y = filter(filter(buf.samples[c], stages[0]), stages[1]);
    // Prefix sums of y^2 give each block's energy in O(1).
    std::vector<double> prefix(y.size() + 1, 0.0);
    for (std::size_t n = 0; n < y.size(); ++n) prefix[n + 1] = prefix[n] + y[n] * y[n];
    for (std::size_t j = 0; j < blocks; ++j)
      power[j] += weight * (prefix[j * step + block] - prefix[j * step]) / double(block);
  }

  auto gated_mean = [&](double threshold) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double p : power) {
      if (to_lufs(p) > threshold) {
        sum += p;
        ++n;
      }
    }
    return n ? sum / double(n) : 0.0;
  };

  const double above_absolute = gated_mean(kAbsoluteGate);
  if (above_absolute <= 0.0) return -std::numeric_limits<double>::infinity();
  const double relative = to_lufs(above_absolute) + kRelativeGate;
  const double gated = gated_mean(std::max(relative, kAbsoluteGate));
  return to_lufs(gated);
}

Normalized normalize_to(const AudioBuffer& buf, double target_lufs) {
  double measured = integrated_loudness(buf);
  if (!std::isfinite(measured)) throw InvalidArgument("cannot normalize silent audio");
  Normalized out{buf, 0.0};
  // Gating thresholds move with the gain, so a second pass absorbs blocks that
  // cross the absolute gate.
  for (int pass = 0; pass < 4 && std::abs(target_lufs - measured) > 1e-4; ++pass) {
    out.gain_db += target_lufs - measured;
    const double g = std::pow(10.0, out.gain_db / 20.0);
    for (std::size_t c = 0; c < buf.channels(); ++c)
      for (std::size_t n = 0; n < buf.frames(); ++n) out.audio.samples[c][n] = g * buf.samples[c][n];
    measured = integrated_loudness(out.audio);
  }
  return out;
}

}  // namespace rotpad
