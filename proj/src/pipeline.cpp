#include "rotpad/pipeline.h"

#include "rotpad/center_extract.h"
#include "rotpad/covariance.h"
#include "rotpad/errors.h"
#include "rotpad/pad.h"

namespace rotpad {

DecompositionMode parse_mode(const std::string& name) {
  if (name == "pad") return DecompositionMode::Pad;
  if (name == "ce") return DecompositionMode::Ce;
  throw InvalidArgument("unknown mode '" + name + "' (expected pad or ce)");
}

void PipelineConfig::validate() const {
  stft.validate();
  if (cov_smooth_frames == 0 || cov_smooth_frames % 2 == 0)
    throw InvalidArgument("--cov-smooth must be odd and >= 1");
  if (unmix_smooth_frames == 0 || unmix_smooth_frames % 2 == 0)
    throw InvalidArgument("--unmix-smooth must be odd and >= 1");
}

namespace {

AudioBuffer stereo_from(const AudioBuffer& two_channel) {
  AudioBuffer out = two_channel;
  out.layout = {"FL", "FR"};
  return out;
}

}  // namespace

PadSignals decompose_pad(const AudioBuffer& stereo, const PipelineConfig& cfg) {
  cfg.validate();
  const Spectrogram spec = analyze(stereo, cfg.stft);
  const CovarianceField cov = smooth_time(instantaneous_cov(spec), cfg.cov_smooth_frames);
  const PadOutput pad = apply_pad(spec, cov, cfg.unmix_smooth_frames);
  return {stereo_from(synthesize(pad.primary, cfg.stft, stereo.frames())),
          stereo_from(synthesize(pad.ambient, cfg.stft, stereo.frames()))};
}

CeSignals decompose_ce(const AudioBuffer& stereo, const PipelineConfig& cfg) {
  cfg.validate();
  const Spectrogram spec = analyze(stereo, cfg.stft);
  const CovarianceField cov = smooth_time(instantaneous_cov(spec), cfg.cov_smooth_frames);
  const CeOutput ce = apply_ce(spec, cov);
  return {synthesize(ce.left, cfg.stft, stereo.frames()),
          synthesize(ce.right, cfg.stft, stereo.frames()),
          synthesize(ce.center, cfg.stft, stereo.frames())};
}

}  // namespace rotpad
