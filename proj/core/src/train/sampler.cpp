#include "aeslab/train/sampler.hpp"

#include <cstdio>

#include "aeslab/rng.hpp"

namespace aeslab::train {

void MinibatchConditionSplit::validate() const {
  if (batch_size <= 0) throw ConfigError("MCS: batch size must be positive");
  if (random_mode) return;
  if (dt < 0 || stfe < 0 || stne < 0 || dt + stfe + stne != batch_size) {
    throw ConfigError("MCS: counts " + describe() + " must sum to batch size " +
                      std::to_string(batch_size));
  }
}

MinibatchConditionSplit MinibatchConditionSplit::parse(const std::string& text) {
  MinibatchConditionSplit m;
  if (text == "random" || text == "rand") {
    m.random_mode = true;
    return m;
  }
  int a = 0, b = 0, c = 0;
  if (std::sscanf(text.c_str(), "%d/%d/%d", &a, &b, &c) != 3) {
    throw ConfigError("MCS: expected d/f/n or 'random', got '" + text + "'");
  }
  m.dt = a;
  m.stfe = b;
  m.stne = c;
  m.batch_size = a + b + c;
  m.validate();
  return m;
}

std::string MinibatchConditionSplit::describe() const {
  if (random_mode) return "random";
  return std::to_string(dt) + "/" + std::to_string(stfe) + "/" + std::to_string(stne);
}

bool is_active(const TimeSignal& v, size_t start, size_t len) {
  double p = 0.0;
  for (size_t i = start; i < start + len && i < v.size(); ++i) p += v[i] * v[i];
  p /= static_cast<double>(len);
  return p > 1e-6;  // -60 dBFS
}

synth::Condition excerpt_condition(const synth::SignalBundle& b, size_t start, size_t len) {
  const bool s_active = is_active(b.s, start, len);
  const bool x_active = is_active(b.x, start, len);
  if (s_active && x_active) return synth::Condition::kDT;
  if (x_active) return synth::Condition::kSTFE;
  return synth::Condition::kSTNE;
}

std::vector<TrainingSequence> sample_minibatch(const synth::Dataset& dataset,
                                               const MinibatchConditionSplit& mcs,
                                               uint64_t seed, int frames,
                                               const dsp::FrameParams& params) {
  mcs.validate();
  const size_t excerpt_len = params.synthesis_length(frames);
  std::vector<size_t> pool;
  for (size_t i = 0; i < dataset.entries.size(); ++i) {
    if (!dataset.entries[i].validation &&
        dataset.entries[i].bundle.y.size() >= excerpt_len) {
      pool.push_back(i);
    }
  }
  if (pool.empty()) throw DataError("sample_minibatch: no usable training files");

  Rng rng(seed);
  std::vector<synth::Condition> wanted;
  if (mcs.random_mode) {
    for (int i = 0; i < mcs.batch_size; ++i) {
      wanted.push_back(static_cast<synth::Condition>(rng.below(3)));
    }
  } else {
    wanted.insert(wanted.end(), static_cast<size_t>(mcs.dt), synth::Condition::kDT);
    wanted.insert(wanted.end(), static_cast<size_t>(mcs.stfe), synth::Condition::kSTFE);
    wanted.insert(wanted.end(), static_cast<size_t>(mcs.stne), synth::Condition::kSTNE);
  }

  std::vector<TrainingSequence> batch;
  for (synth::Condition want : wanted) {
    bool found = false;
    for (int attempt = 0; attempt < 10000 && !found; ++attempt) {
      const size_t fi = pool[rng.below(pool.size())];
      const synth::SignalBundle& b = dataset.entries[fi].bundle;
      const size_t max_off = b.y.size() - excerpt_len;
      const size_t off = max_off == 0 ? 0 : rng.below(max_off + 1);
      if (excerpt_condition(b, off, excerpt_len) != want) continue;

      TrainingSequence seq;
      auto cut = [&](const TimeSignal& v) {
        return TimeSignal(v.begin() + static_cast<ptrdiff_t>(off),
                          v.begin() + static_cast<ptrdiff_t>(off + excerpt_len));
      };
      seq.x = cut(b.x);
      seq.y = cut(b.y);
      seq.s = cut(b.s);
      seq.n = cut(b.n);
      seq.d = cut(b.d);
      seq.condition = want;
      seq.file_index = fi;
      seq.offset = off;
      batch.push_back(std::move(seq));
      found = true;
    }
    if (!found) {
      throw DataError("sample_minibatch: insufficient sequences of condition " +
                      synth::condition_name(want));
    }
  }
  return batch;
}

}  // namespace aeslab::train
