#pragma once

#include <string>

#include "aeslab/common.hpp"
#include "aeslab/dsp/spectral.hpp"
#include "aeslab/synth/scene.hpp"

namespace aeslab::train {

// 10*log10(sum_n (est-target)^2 + eps). The epsilon keeps the loss finite at
// perfect reconstruction: identical signals give -120 dB.
double logmse(const TimeSignal& estimate, const TimeSignal& target);
constexpr double kLogMseEpsilon = 1e-12;

// Per-condition weighting of the component losses. alpha scales the speech
// component term, beta the residual echo term; the mixture term gets
// 1 - alpha - beta.
struct LossWeights {
  double alpha_dt = 0.0, beta_dt = 0.0;
  double alpha_stfe = 0.0, beta_stfe = 0.0;
  double alpha_stne = 0.0, beta_stne = 0.0;

  double alpha(synth::Condition c) const;
  double beta(synth::Condition c) const;
  void validate() const;

  static LossWeights zeros() { return {}; }
  // Fine-tuning presets: (15/1/0) CA and (16/0/0) CA.
  static LossWeights preset_ca_15_1_0();
  static LossWeights preset_ca_16_0_0();
};

// White-box components: applies the effective gain to the speech and echo
// spectra and synthesizes both to the time domain.
struct WhiteBoxComponents {
  TimeSignal s_tilde;
  TimeSignal d_tilde;
};
WhiteBoxComponents white_box_components(const dsp::SpectralSequence& gains,
                                        const dsp::SpectralSequence& s_spec,
                                        const dsp::SpectralSequence& d_spec,
                                        const dsp::FrameParams& params, size_t pad_to);

// One loss evaluation input: the enhanced output, the mixture components, and
// the white-box components, all time-aligned.
struct LossEntry {
  TimeSignal e;
  TimeSignal s;
  TimeSignal n;
  TimeSignal s_tilde;
  TimeSignal d_tilde;
  synth::Condition condition = synth::Condition::kDT;
};

// (1-a-b)*logmse(e, s+n) + a*logmse(s_tilde, s) + b*logmse(d_tilde, 0).
double condition_loss(const LossEntry& entry, const LossWeights& weights);

}  // namespace aeslab::train
