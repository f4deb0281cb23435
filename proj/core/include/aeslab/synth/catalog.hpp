#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aeslab/common.hpp"
#include "aeslab/rng.hpp"

namespace aeslab::synth {

// Source audio provider. Backed either by a directory of 16 kHz mono WAVs or,
// when no directory is given, by procedurally generated material so datasets
// and tests run hermetically:
//   - speech: speech-shaped noise with syllabic burst envelopes
//   - noise:  stationary colored noise
class Catalog {
 public:
  enum class Kind { kSpeech, kNoise };

  static Catalog from_directory(const std::string& dir, Kind kind);
  static Catalog procedural(Kind kind);

  bool empty() const { return !procedural_ && files_.empty(); }
  size_t file_count() const { return files_.size(); }

  // A cut of exactly `samples` samples. Deterministic per rng state.
  TimeSignal draw(size_t samples, Rng& rng) const;

 private:
  Catalog() = default;

  bool procedural_ = false;
  Kind kind_ = Kind::kSpeech;
  std::vector<std::string> files_;
};

// Exposed for tests: the procedural generators themselves.
TimeSignal synth_speech_like(size_t samples, Rng& rng);
TimeSignal synth_noise_like(size_t samples, Rng& rng);

}  // namespace aeslab::synth
