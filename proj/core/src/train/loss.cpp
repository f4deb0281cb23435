#include "aeslab/train/loss.hpp"

#include <cmath>

#include "aeslab/model/pipeline.hpp"

namespace aeslab::train {

double logmse(const TimeSignal& estimate, const TimeSignal& target) {
  if (estimate.size() != target.size()) {
    throw DataError("logmse: length mismatch " + std::to_string(estimate.size()) +
                    " vs " + std::to_string(target.size()));
  }
  double s = 0.0;
  for (size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - target[i];
    s += d * d;
  }
  return 10.0 * std::log10(s + kLogMseEpsilon);
}

double LossWeights::alpha(synth::Condition c) const {
  switch (c) {
    case synth::Condition::kDT:
      return alpha_dt;
    case synth::Condition::kSTFE:
      return alpha_stfe;
    case synth::Condition::kSTNE:
      return alpha_stne;
  }
  return 0.0;
}

double LossWeights::beta(synth::Condition c) const {
  switch (c) {
    case synth::Condition::kDT:
      return beta_dt;
    case synth::Condition::kSTFE:
      return beta_stfe;
    case synth::Condition::kSTNE:
      return beta_stne;
  }
  return 0.0;
}

void LossWeights::validate() const {
  const double a[3] = {alpha_dt, alpha_stfe, alpha_stne};
  const double b[3] = {beta_dt, beta_stfe, beta_stne};
  for (int i = 0; i < 3; ++i) {
    if (a[i] < 0.0 || b[i] < 0.0 || a[i] >= 1.0 || b[i] >= 1.0 || a[i] + b[i] >= 1.0) {
      throw ConfigError("LossWeights: require alpha, beta in [0,1) with alpha+beta < 1");
    }
  }
}

LossWeights LossWeights::preset_ca_15_1_0() {
  LossWeights w;
  w.alpha_dt = 0.2;
  w.beta_dt = 0.2;
  w.alpha_stfe = 0.2;
  w.beta_stfe = 0.0;
  return w;
}

LossWeights LossWeights::preset_ca_16_0_0() {
  LossWeights w;
  w.alpha_dt = 0.33;
  w.beta_dt = 0.0;
  return w;
}

WhiteBoxComponents white_box_components(const dsp::SpectralSequence& gains,
                                        const dsp::SpectralSequence& s_spec,
                                        const dsp::SpectralSequence& d_spec,
                                        const dsp::FrameParams& params, size_t pad_to) {
  WhiteBoxComponents wb;
  wb.s_tilde = model::apply_gains(gains, s_spec, params, pad_to);
  wb.d_tilde = model::apply_gains(gains, d_spec, params, pad_to);
  return wb;
}

double condition_loss(const LossEntry& entry, const LossWeights& weights) {
  weights.validate();
  const double a = weights.alpha(entry.condition);
  const double b = weights.beta(entry.condition);
  TimeSignal mix_target(entry.s.size());
  for (size_t i = 0; i < mix_target.size(); ++i) mix_target[i] = entry.s[i] + entry.n[i];
  const TimeSignal zeros(entry.d_tilde.size(), 0.0);
  return (1.0 - a - b) * logmse(entry.e, mix_target) + a * logmse(entry.s_tilde, entry.s) +
         b * logmse(entry.d_tilde, zeros);
}

}  // namespace aeslab::train
