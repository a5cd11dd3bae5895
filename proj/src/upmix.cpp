#include "rotpad/upmix.h"

#include <cmath>
#include <limits>

#include "rotpad/errors.h"
#include "rotpad/loudness.h"

namespace rotpad {

namespace {

double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

void require_shape(const AudioBuffer& buf, const AudioBuffer& ref, const char* what) {
  if (buf.channels() != 2 || buf.frames() != ref.frames() || buf.sample_rate != ref.sample_rate)
    throw InvalidArgument(std::string(what) + " does not match the input length/rate");
}

}  // namespace

std::string to_string(DialRegion region) {
  switch (region) {
    case DialRegion::Narrowing: return "narrowing";
    case DialRegion::Relocation: return "relocation";
    case DialRegion::Boost: return "boost";
  }
  return "unknown";
}

DialSetting DialSetting::from_index(int index) {
  if (index < 0 || index >= kDialPositions)
    throw InvalidArgument("dial must be in 0-30, got " + std::to_string(index));
  constexpr int narrowing = int(kNarrowingCoefficients.size());
  constexpr int relocation = int(kRelocationGainsDb.size());
  if (index < narrowing) return {index, DialRegion::Narrowing, kNarrowingCoefficients[std::size_t(index)]};
  if (index < narrowing + relocation)
    return {index, DialRegion::Relocation, kRelocationGainsDb[std::size_t(index - narrowing)]};
  return {index, DialRegion::Boost, kBoostGainsDb[std::size_t(index - narrowing - relocation)]};
}

QuadRender render(const AudioBuffer& input, const PadSignals& pad, const DialSetting& dial) {
  if (input.channels() != 2) throw InvalidArgument("stereo input required");
  require_shape(pad.primary, input, "primary signal");
  require_shape(pad.ambient, input, "ambient signal");

  const std::size_t len = input.frames();
  QuadRender out;
  out.dial = dial;
  out.audio = AudioBuffer(4, len, input.sample_rate);
  auto& fl = out.audio.samples[0];
  auto& fr = out.audio.samples[1];
  auto& sl = out.audio.samples[2];
  auto& sr = out.audio.samples[3];
  const auto& xl = input.samples[0];
  const auto& xr = input.samples[1];
  const auto& pl = pad.primary.samples[0];
  const auto& pr = pad.primary.samples[1];
  const auto& al = pad.ambient.samples[0];
  const auto& ar = pad.ambient.samples[1];

  switch (dial.region) {
    case DialRegion::Narrowing: {
      const double a = dial.param;
      for (std::size_t n = 0; n < len; ++n) {
        fl[n] = a * xl[n] + (1.0 - a) * xr[n];
        fr[n] = (1.0 - a) * xl[n] + a * xr[n];
      }
      break;
    }
    case DialRegion::Relocation: {
      const double g = db_to_amplitude(dial.param);
      for (std::size_t n = 0; n < len; ++n) {
        fl[n] = pl[n] + g * al[n];
        fr[n] = pr[n] + g * ar[n];
        sl[n] = (1.0 - g) * al[n];
        sr[n] = (1.0 - g) * ar[n];
      }
      break;
    }
    case DialRegion::Boost: {
      const double b = db_to_amplitude(dial.param);
      for (std::size_t n = 0; n < len; ++n) {
        fl[n] = pl[n];
        fr[n] = pr[n];
        sl[n] = b * al[n];
        sr[n] = b * ar[n];
      }
      break;
    }
  }
  out.rfr_db = rfr_db(out.audio);
  out.loudness_lufs = std::numeric_limits<double>::quiet_NaN();
  return out;
}

QuadRender render_normalized(const AudioBuffer& input, const PadSignals& pad,
                             const DialSetting& dial, double target_lufs) {
  QuadRender out = render(input, pad, dial);
  auto norm = normalize_to(out.audio, target_lufs);
  out.audio = std::move(norm.audio);
  out.norm_gain_db = norm.gain_db;
  out.loudness_lufs = integrated_loudness(out.audio);
  out.rfr_db = rfr_db(out.audio);
  return out;
}

double rfr_db(const AudioBuffer& quad) {
  quad.validate();
  if (quad.channels() != 4) throw InvalidArgument("RFR expects 4 channels (FL FR SL SR)");
  auto energy = [&](std::size_t c) {
    double e = 0.0;
    for (double v : quad.samples[c]) e += v * v;
    return e;
  };
  const double front = energy(0) + energy(1);
  const double rear = energy(2) + energy(3);
  if (rear == 0.0) return -std::numeric_limits<double>::infinity();
  if (front == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(rear / front);
}

AudioBuffer fold_down(const AudioBuffer& quad) {
  quad.validate();
  if (quad.channels() != 4) throw InvalidArgument("fold-down expects 4 channels");
  AudioBuffer out(2, quad.frames(), quad.sample_rate);
  for (std::size_t n = 0; n < quad.frames(); ++n) {
    out.samples[0][n] = quad.samples[0][n] + kFoldDownGain * quad.samples[2][n];
    out.samples[1][n] = quad.samples[1][n] + kFoldDownGain * quad.samples[3][n];
  }
  return out;
}

}  // namespace rotpad
