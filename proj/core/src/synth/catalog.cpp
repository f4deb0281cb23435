#include "aeslab/synth/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "aeslab/io/wav.hpp"

namespace aeslab::synth {

namespace fs = std::filesystem;

Catalog Catalog::from_directory(const std::string& dir, Kind kind) {
  Catalog c;
  c.kind_ = kind;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") {
      c.files_.push_back(entry.path().string());
    }
  }
  std::sort(c.files_.begin(), c.files_.end());
  if (c.files_.empty()) {
    throw DataError("Catalog: no .wav files in " + dir);
  }
  return c;
}

Catalog Catalog::procedural(Kind kind) {
  Catalog c;
  c.kind_ = kind;
  c.procedural_ = true;
  return c;
}

TimeSignal synth_speech_like(size_t samples, Rng& rng) {
  // Speech-shaped noise: white noise through a soft two-pole lowpass plus a
  // formant-ish resonance, gated by syllable-rate bursts.
  TimeSignal out(samples, 0.0);
  double lp1 = 0.0, lp2 = 0.0;
  double env = 0.0, env_target = 0.0;
  size_t next_switch = 0;
  const double fs = static_cast<double>(kSampleRate);
  // Resonator around a randomized "formant".
  const double f0 = rng.uniform(300.0, 900.0);
  const double r = 0.96;
  const double w0 = 2.0 * 3.14159265358979323846 * f0 / fs;
  double y1 = 0.0, y2 = 0.0;
  for (size_t i = 0; i < samples; ++i) {
    if (i >= next_switch) {
      // Burst lengths 80-400 ms, pauses 60-300 ms.
      const bool voiced = rng.uniform() < 0.65;
      env_target = voiced ? rng.uniform(0.4, 1.0) : 0.0;
      const double dur = voiced ? rng.uniform(0.08, 0.4) : rng.uniform(0.06, 0.3);
      next_switch = i + static_cast<size_t>(dur * fs);
    }
    env += (env_target - env) * 0.002;
    const double w = rng.normal();
    lp1 += (w - lp1) * 0.25;
    lp2 += (lp1 - lp2) * 0.25;
    const double v = lp2 + 0.3 * (2.0 * r * std::cos(w0) * y1 - r * r * y2 + 0.1 * w);
    y2 = y1;
    y1 = v;
    out[i] = 0.25 * env * v;
  }
  return out;
}

TimeSignal synth_noise_like(size_t samples, Rng& rng) {
  // Stationary colored noise (one-pole lowpassed white noise).
  TimeSignal out(samples, 0.0);
  double lp = 0.0;
  const double pole = rng.uniform(0.05, 0.5);
  for (size_t i = 0; i < samples; ++i) {
    lp += (rng.normal() - lp) * pole;
    out[i] = 0.1 * lp;
  }
  return out;
}

TimeSignal Catalog::draw(size_t samples, Rng& rng) const {
  if (procedural_) {
    return kind_ == Kind::kSpeech ? synth_speech_like(samples, rng)
                                  : synth_noise_like(samples, rng);
  }
  if (files_.empty()) throw DataError("Catalog: empty catalog");
  // Random file, random cut; loop the file if it is shorter than requested.
  const auto& path = files_[rng.below(files_.size())];
  TimeSignal audio = io::read_wav(path);
  if (audio.empty()) throw DataError("Catalog: empty audio file " + path);
  TimeSignal out(samples);
  size_t pos = audio.size() > samples
                   ? static_cast<size_t>(rng.below(audio.size() - samples))
                   : static_cast<size_t>(rng.below(audio.size()));
  for (size_t i = 0; i < samples; ++i) {
    out[i] = audio[pos];
    pos = (pos + 1) % audio.size();
  }
  return out;
}

}  // namespace aeslab::synth
