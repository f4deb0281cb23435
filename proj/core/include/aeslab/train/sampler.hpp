#pragma once

#include <string>
#include <vector>

#include "aeslab/dsp/frame_params.hpp"
#include "aeslab/synth/dataset.hpp"

namespace aeslab::train {

// Fixed per-batch counts of DT/STFE/STNE sequences, or uniform random draws.
struct MinibatchConditionSplit {
  int dt = 16;
  int stfe = 0;
  int stne = 0;
  bool random_mode = false;
  int batch_size = 16;

  void validate() const;
  static MinibatchConditionSplit parse(const std::string& text);  // "13/2/1" | "random"
  std::string describe() const;
};

// One BPTT excerpt with aligned component slices.
struct TrainingSequence {
  TimeSignal x, y, s, n, d;
  synth::Condition condition = synth::Condition::kDT;
  size_t file_index = 0;
  size_t offset = 0;
};

// Mean power above -60 dBFS counts as active.
bool is_active(const TimeSignal& v, size_t start, size_t len);
synth::Condition excerpt_condition(const synth::SignalBundle& b, size_t start, size_t len);

// Draws batch_size excerpts of `frames` frames at random offsets from the
// non-validation files, honoring the requested per-condition counts.
std::vector<TrainingSequence> sample_minibatch(const synth::Dataset& dataset,
                                               const MinibatchConditionSplit& mcs,
                                               uint64_t seed, int frames,
                                               const dsp::FrameParams& params);

}  // namespace aeslab::train
