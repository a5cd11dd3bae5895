#include "rotpad/center_extract.h"

#include <algorithm>

#include "rotpad/errors.h"

namespace rotpad {

ComponentEnergies component_energies(const BinCovariance& cov) {
  ComponentEnergies e;
  e.center = std::max(cov.lr, 0.0);
  e.left = std::max(cov.ll - e.center, 0.0);
  e.right = std::max(cov.rr - e.center, 0.0);
  return e;
}

CeUnmix ce_unmix(const BinCovariance& cov) {
  const double ll = cov.ll;
  const double rr = cov.rr;
  const double lr = std::max(cov.lr, 0.0);
  const double det = ll * rr - lr * lr;

  CeUnmix out;
  if (!(det >= kMinDeterminant)) {
    out.g = {{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}}};
    return out;
  }
  const double c_l = (rr * lr - lr * lr) / det;
  const double c_r = (ll * lr - lr * lr) / det;
  out.g[2] = {c_l, c_r};
  out.g[0] = {1.0 - c_l, -c_r};
  out.g[1] = {-c_l, 1.0 - c_r};
  return out;
}

CeOutput apply_ce(const Spectrogram& spec, const CovarianceField& field) {
  if (spec.channels.size() != 2) throw InvalidArgument("stereo input required");
  if (field.frames != spec.frames || field.bins != spec.bins)
    throw InvalidArgument("covariance field does not match spectrogram");
  const CovarianceField reg = regularize(field);

  auto mono = [&] { return Spectrogram(spec.config, 1, spec.frames, spec.original_len, spec.sample_rate); };
  CeOutput out{mono(), mono(), mono()};
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) {
      const CeUnmix u = ce_unmix(reg.at(t, k));
      const Complex xl = spec.at(0, t, k);
      const Complex xr = spec.at(1, t, k);
      out.left.at(0, t, k) = u.g[0][0] * xl + u.g[0][1] * xr;
      out.right.at(0, t, k) = u.g[1][0] * xl + u.g[1][1] * xr;
      out.center.at(0, t, k) = u.g[2][0] * xl + u.g[2][1] * xr;
    }
  }
  return out;
}

}  // namespace rotpad
