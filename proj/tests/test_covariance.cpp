#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "rotpad/covariance.h"
#include "rotpad/errors.h"
#include "support/signals.h"

using namespace rotpad;

namespace {

Spectrogram single_tile(Complex xl, Complex xr) {
  Spectrogram spec(StftConfig{}, 2, 1, 0, 48000);
  spec.at(0, 0, 7) = xl;
  spec.at(1, 0, 7) = xr;
  return spec;
}

CovarianceField constant_field(std::size_t frames, std::size_t bins, BinCovariance c) {
  CovarianceField f(frames, bins);
  for (auto& g : f.grid) g = c;
  return f;
}

}  // namespace

TEST_CASE("instantaneous covariance of single tiles") {
  auto cov = [](Complex l, Complex r) { return instantaneous_cov(single_tile(l, r)).at(0, 7); };

  const auto a = cov({1, 0}, {0, 0});
  CHECK(a.ll == 1.0);
  CHECK(a.rr == 0.0);
  CHECK(a.lr == 0.0);

  // 90 degree phase: fully coherent but zero real cross term.
  const auto b = cov({1, 0}, {0, 1});
  CHECK(b.lr == 0.0);
  CHECK(b.ll == 1.0);
  CHECK(b.rr == 1.0);

  const auto c = cov({2, 0}, {1, 0});
  CHECK(c.ll == 4.0);
  CHECK(c.rr == 1.0);
  CHECK(c.lr == 2.0);
  CHECK(c.det() == 0.0);
}

TEST_CASE("covariance scales with the square of a real gain") {
  const auto x = signals::stereo(signals::white_noise(6000, 1), signals::white_noise(6000, 2));
  const Spectrogram spec = analyze(x, StftConfig{});
  Spectrogram scaled = spec;
  for (auto& ch : scaled.channels)
    for (auto& z : ch) z *= -3.0;
  const auto f = instantaneous_cov(spec);
  const auto g = instantaneous_cov(scaled);
  for (std::size_t i = 0; i < f.grid.size(); i += 97) {
    CHECK(g.grid[i].ll == Catch::Approx(9.0 * f.grid[i].ll).margin(1e-12));
    CHECK(g.grid[i].rr == Catch::Approx(9.0 * f.grid[i].rr).margin(1e-12));
    CHECK(g.grid[i].lr == Catch::Approx(9.0 * f.grid[i].lr).margin(1e-12));
  }
}

TEST_CASE("smoothing over one frame is the identity") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CovarianceField f(10, 3);
  for (auto& c : f.grid) c = {u(rng), u(rng), 0.0};
  const auto s = smooth_time(f, 1);
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    CHECK(s.grid[i].ll == f.grid[i].ll);
    CHECK(s.grid[i].rr == f.grid[i].rr);
  }
}

TEST_CASE("smoothing leaves a constant field unchanged") {
  const auto f = constant_field(12, 4, {2.0, 1.0, 0.5});
  const auto s = smooth_time(f, 5);
  CHECK(s.smoothing_len == 5);
  for (const auto& c : s.grid) {
    CHECK(c.ll == Catch::Approx(2.0));
    CHECK(c.rr == Catch::Approx(1.0));
    CHECK(c.lr == Catch::Approx(0.5));
  }
}

TEST_CASE("an impulse frame spreads as v/5 over the five-frame window") {
  CovarianceField f(20, 2);
  const BinCovariance v{5.0, 10.0, 2.0};
  f.at(10, 1) = v;
  const auto s = smooth_time(f, 5);
  for (std::size_t t = 0; t < 20; ++t) {
    const bool inside = t >= 8 && t <= 12;
    CHECK(s.at(t, 1).ll == Catch::Approx(inside ? 1.0 : 0.0));
    CHECK(s.at(t, 1).rr == Catch::Approx(inside ? 2.0 : 0.0));
    CHECK(s.at(t, 1).lr == Catch::Approx(inside ? 0.4 : 0.0));
    CHECK(s.at(t, 0).ll == 0.0);
  }
}

TEST_CASE("edges average over the truncated window") {
  CovarianceField f(6, 1);
  f.at(0, 0) = {3.0, 3.0, 0.0};
  const auto s = smooth_time(f, 5);
  CHECK(s.at(0, 0).ll == Catch::Approx(1.0));   // frames 0..2
  CHECK(s.at(1, 0).ll == Catch::Approx(0.75));  // frames 0..3
  CHECK(s.at(2, 0).ll == Catch::Approx(0.6));   // frames 0..4
  CHECK(s.at(3, 0).ll == 0.0);
}

TEST_CASE("even or zero smoothing length is an error") {
  const auto f = constant_field(4, 1, {1, 1, 0});
  CHECK_THROWS_AS(smooth_time(f, 4), InvalidArgument);
  CHECK_THROWS_AS(smooth_time(f, 0), InvalidArgument);
}

TEST_CASE("smoothed fields stay positive semidefinite") {
  const auto x = signals::stereo(signals::white_noise(20000, 3), signals::white_noise(20000, 4));
  const auto f = smooth_time(instantaneous_cov(analyze(x, StftConfig{})), 5);
  for (const auto& c : f.grid) {
    REQUIRE(c.ll >= 0.0);
    REQUIRE(c.rr >= 0.0);
    REQUIRE(c.lr * c.lr <= c.ll * c.rr);
  }
}

TEST_CASE("PSD clamp pulls the cross term just inside the bound") {
  const auto c = clamp_psd({4.0, 1.0, 2.5});
  CHECK(c.lr == Catch::Approx(2.0 * (1.0 - kPsdMargin)).epsilon(1e-15));
  const auto n = clamp_psd({4.0, 1.0, -3.0});
  CHECK(n.lr == Catch::Approx(-2.0 * (1.0 - kPsdMargin)).epsilon(1e-15));
  const auto ok = clamp_psd({4.0, 1.0, 1.0});
  CHECK(ok.lr == 1.0);
}

TEST_CASE("regularize floors energies relative to the frame and keeps PSD") {
  CovarianceField f(2, 3);
  f.at(0, 0) = {1.0, 0.0, 0.0};
  f.at(0, 1) = {1.0, 1.0, 1.0};  // coherent tile
  const auto r = regularize(f);
  const double frame_energy = 1.0 + 2.0;
  CHECK(r.at(0, 0).rr == Catch::Approx(kEnergyFloor * frame_energy).epsilon(1e-6));
  CHECK(r.at(0, 1).det() > 0.0);
  CHECK(r.at(0, 1).lr < 1.0);
  // Silent frame: floor stays positive.
  CHECK(r.at(1, 2).ll > 0.0);
  CHECK(r.at(1, 2).rr > 0.0);
}
