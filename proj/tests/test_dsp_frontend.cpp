#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "aeslab/dsp/fft.hpp"
#include "aeslab/dsp/spectral.hpp"
#include "aeslab/io/wav.hpp"
#include "aeslab/rng.hpp"
#include "oracles.hpp"

using namespace aeslab;

namespace {
const dsp::FrameParams kParams;
}

TEST_CASE("fft matches the naive DFT") {
  Rng rng(7);
  std::vector<double> x(424);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  const auto ref = oracle::naive_dft(x, 512);
  const auto got = dsp::rfft(x, 512);
  for (int k = 0; k <= 256; ++k) {
    CHECK(std::abs(got[static_cast<size_t>(k)] - ref[static_cast<size_t>(k)]) < 1e-9);
  }
}

TEST_CASE("analyze: zero signal of 848 samples gives 3 zero frames") {
  TimeSignal x(848, 0.0);
  const auto spec = dsp::analyze(x, kParams);
  CHECK(spec.frames == 3);
  CHECK(spec.bins == 257);
  for (const auto& v : spec.data) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("analyze: unit impulse at n=0 gives w(0) in every bin") {
  TimeSignal x(848, 0.0);
  x[0] = 1.0;
  const auto spec = dsp::analyze(x, kParams);
  const double w0 = kParams.sqrt_hann()[0];  // periodic sqrt-Hann: sin(0) = 0
  CHECK(w0 == 0.0);
  for (int k = 0; k < spec.bins; ++k) {
    CHECK(std::abs(spec.at(0, k) - dsp::Complex(w0, 0.0)) < 1e-15);
  }
}

TEST_CASE("analyze: 1 kHz sine peaks at bin 32, against the reference DFT") {
  TimeSignal x(4 * 424);
  for (size_t n = 0; n < x.size(); ++n) {
    x[n] = std::sin(2.0 * std::numbers::pi * 1000.0 * static_cast<double>(n) / 16000.0);
  }
  const auto spec = dsp::analyze(x, kParams);

  int peak_bin = 0;
  double peak = 0.0;
  for (int k = 0; k < spec.bins; ++k) {
    if (std::abs(spec.at(1, k)) > peak) {
      peak = std::abs(spec.at(1, k));
      peak_bin = k;
    }
  }
  CHECK(peak_bin == 32);

  // Cross-check frame 1 against the windowed naive DFT.
  const auto window = kParams.sqrt_hann();
  std::vector<double> frame(424);
  for (int n = 0; n < 424; ++n) frame[static_cast<size_t>(n)] = x[212 + n] * window[static_cast<size_t>(n)];
  const auto ref = oracle::naive_dft(frame, 512);
  for (int k = 0; k < spec.bins; ++k) {
    CHECK(std::abs(spec.at(1, k) - ref[static_cast<size_t>(k)]) < 1e-8);
  }
}

TEST_CASE("analyze rejects short signals") {
  TimeSignal x(423, 0.1);
  CHECK_THROWS_AS(dsp::analyze(x, kParams), DataError);
}

TEST_CASE("analyze is linear") {
  Rng rng(11);
  TimeSignal s1(1000), s2(1000);
  for (auto& v : s1) v = rng.uniform(-1, 1);
  for (auto& v : s2) v = rng.uniform(-1, 1);
  const double a = 1.7, b = -0.4;
  TimeSignal mix(1000);
  for (size_t i = 0; i < mix.size(); ++i) mix[i] = a * s1[i] + b * s2[i];
  const auto sp1 = dsp::analyze(s1, kParams);
  const auto sp2 = dsp::analyze(s2, kParams);
  const auto spm = dsp::analyze(mix, kParams);
  for (size_t i = 0; i < spm.data.size(); ++i) {
    CHECK(std::abs(spm.data[i] - (a * sp1.data[i] + b * sp2.data[i])) < 1e-10);
  }
}

TEST_CASE("synthesize(analyze(s)) reconstructs interior samples") {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const size_t len = 424 + 212 * (5 + trial);
    TimeSignal s(len);
    for (auto& v : s) v = rng.uniform(-1.0, 1.0);
    const auto rec = dsp::synthesize(dsp::analyze(s, kParams), kParams);
    for (size_t i = 212; i + 212 < rec.size(); ++i) {
      CHECK(std::abs(rec[i] - s[i]) < 1e-10);
    }
  }
}

TEST_CASE("synthesize: zero spectra give zero signal; single frame support") {
  dsp::SpectralSequence spec;
  spec.frames = 4;
  spec.bins = 257;
  spec.data.assign(4 * 257, dsp::Complex(0.0, 0.0));
  auto out = dsp::synthesize(spec, kParams);
  CHECK(out.size() == kParams.synthesis_length(4));
  for (double v : out) CHECK(v == 0.0);

  // One nonzero frame -> support limited to its 424 samples.
  for (int k = 0; k < 257; ++k) spec.at(1, k) = dsp::Complex(0.3, -0.1);
  out = dsp::synthesize(spec, kParams);
  for (size_t i = 0; i < out.size(); ++i) {
    if (i < 212 || i >= 212 + 424) CHECK(out[i] == 0.0);
  }
}

TEST_CASE("synthesize rejects non-finite spectra") {
  dsp::SpectralSequence spec;
  spec.frames = 1;
  spec.bins = 257;
  spec.data.assign(257, dsp::Complex(0.0, 0.0));
  spec.data[10] = dsp::Complex(std::nan(""), 0.0);
  CHECK_THROWS_AS(dsp::synthesize(spec, kParams), NumericError);
}

TEST_CASE("apply_mask: Eq-style gain compression") {
  const dsp::Complex y(0.8, -0.6);

  SUBCASE("zero mask gives zero output") {
    CHECK(std::abs(dsp::apply_mask(y, {0.0, 0.0})) == 0.0);
  }
  SUBCASE("large mask saturates toward identity") {
    const auto e = dsp::apply_mask(y, {1e6, 0.0});
    CHECK(std::abs(e - y) < 1e-9);
    CHECK(std::abs(e) <= std::abs(y));
  }
  SUBCASE("purely imaginary mask of magnitude atanh(0.5) gives 0.5j*y") {
    const double m = std::atanh(0.5);
    const auto e = dsp::apply_mask(y, {0.0, m});
    const auto expect = dsp::Complex(0.0, 0.5) * y;
    CHECK(std::abs(e - expect) < 1e-12);
  }
  SUBCASE("gain magnitude never exceeds |y|, phases add") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
      const dsp::Complex m(rng.uniform(-3, 3), rng.uniform(-3, 3));
      const auto e = dsp::apply_mask(y, m);
      CHECK(std::abs(e) <= std::abs(y) + 1e-12);
      if (std::abs(m) > 1e-9) {
        double phase_diff = std::arg(e) - (std::arg(y) + std::arg(m));
        while (phase_diff > std::numbers::pi) phase_diff -= 2 * std::numbers::pi;
        while (phase_diff < -std::numbers::pi) phase_diff += 2 * std::numbers::pi;
        CHECK(std::abs(phase_diff) < 1e-9);
      }
    }
  }
}

TEST_CASE("compress_input") {
  SUBCASE("c=1 is the identity") {
    const dsp::Complex y(0.3, 0.4);
    CHECK(std::abs(dsp::compress_input(y, 1.0) - y) < 1e-15);
  }
  SUBCASE("cube root of 8*exp(j pi/4)") {
    const dsp::Complex y = std::polar(8.0, std::numbers::pi / 4);
    const auto z = dsp::compress_input(y, 1.0 / 3.0);
    CHECK(std::abs(z - std::polar(2.0, std::numbers::pi / 4)) < 1e-12);
  }
  SUBCASE("low levels are amplified, phase preserved") {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
      const dsp::Complex y = std::polar(rng.uniform(1e-6, 0.999), rng.uniform(-3.0, 3.0));
      const auto z = dsp::compress_input(y, 0.3);
      CHECK(std::abs(z) > std::abs(y));
      CHECK(std::abs(std::arg(z) - std::arg(y)) < 1e-12);
    }
  }
  SUBCASE("zero maps to zero") {
    CHECK(std::abs(dsp::compress_input({0.0, 0.0}, 0.3)) == 0.0);
  }
}

TEST_CASE("assemble_features layout, padding and compression") {
  Rng rng(13);
  TimeSignal x(848), y(848);
  for (auto& v : x) v = rng.uniform(-1, 1);
  for (auto& v : y) v = rng.uniform(-1, 1);
  const auto X = dsp::analyze(x, kParams);
  const auto Y = dsp::analyze(y, kParams);

  const auto feats = dsp::assemble_features(X, Y, kParams, false);
  REQUIRE(feats.size() == static_cast<size_t>(3) * 264 * 4);
  for (int f = 0; f < 3; ++f) {
    for (int k = 0; k < 257; ++k) {
      const double* cell = &feats[(static_cast<size_t>(f) * 264 + k) * 4];
      CHECK(cell[0] == Y.at(f, k).real());
      CHECK(cell[1] == Y.at(f, k).imag());
      CHECK(cell[2] == X.at(f, k).real());
      CHECK(cell[3] == X.at(f, k).imag());
    }
    for (int k = 257; k < 264; ++k) {
      const double* cell = &feats[(static_cast<size_t>(f) * 264 + k) * 4];
      for (int c = 0; c < 4; ++c) CHECK(cell[c] == 0.0);
    }
  }

  const auto compressed = dsp::assemble_features(X, Y, kParams, true);
  for (int f = 0; f < 3; ++f) {
    for (int k = 0; k < 257; ++k) {
      const double* cell = &compressed[(static_cast<size_t>(f) * 264 + k) * 4];
      const auto yc = dsp::compress_input(Y.at(f, k), 0.3);
      CHECK(cell[0] == doctest::Approx(yc.real()).epsilon(1e-12));
      CHECK(cell[1] == doctest::Approx(yc.imag()).epsilon(1e-12));
    }
  }

  // Frame-count mismatch is rejected.
  auto X2 = X;
  X2.frames = 2;
  X2.data.resize(2 * 257);
  CHECK_THROWS_AS(dsp::assemble_features(X2, Y, kParams, false), DataError);
}

TEST_CASE("crop_mask inverts the padding and ignores padded bins") {
  Rng rng(17);
  std::vector<double> net(static_cast<size_t>(2) * 264 * 2);
  for (auto& v : net) v = rng.uniform(-1, 1);
  const auto m = dsp::crop_mask(net, 2, kParams);
  CHECK(m.frames == 2);
  CHECK(m.bins == 257);
  for (int f = 0; f < 2; ++f) {
    for (int k = 0; k < 257; ++k) {
      const double* cell = &net[(static_cast<size_t>(f) * 264 + k) * 2];
      CHECK(m.at(f, k) == dsp::Complex(cell[0], cell[1]));
    }
  }
  // Values in the discarded bins never influence the result.
  auto net2 = net;
  for (int f = 0; f < 2; ++f) {
    for (int k = 257; k < 264; ++k) {
      net2[(static_cast<size_t>(f) * 264 + k) * 2] = 99.0;
      net2[(static_cast<size_t>(f) * 264 + k) * 2 + 1] = -99.0;
    }
  }
  const auto m2 = dsp::crop_mask(net2, 2, kParams);
  CHECK(m2.data == m.data);
}

TEST_CASE("wav round trip at 16-bit precision") {
  Rng rng(23);
  TimeSignal s(5000);
  for (auto& v : s) v = rng.uniform(-0.9, 0.9);
  const std::string path = "/tmp/aeslab_test_roundtrip.wav";
  io::write_wav(path, s);
  const auto back = io::read_wav(path);
  REQUIRE(back.size() == s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    CHECK(std::abs(back[i] - s[i]) <= 0.5 / 32768.0 + 1e-12);
  }
}
