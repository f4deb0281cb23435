#pragma once

#include "aeslab/dsp/spectral.hpp"
#include "aeslab/model/crn.hpp"

namespace aeslab::model {

struct EnhanceResult {
  TimeSignal e;                 // enhanced signal, padded to the input length
  dsp::SpectralSequence gains;  // effective complex gain G per frame/bin
};

// Full chain: analyze -> features (compressed iff the config says so) ->
// network -> crop -> gain compression -> masking -> OLA. State is reset per
// call; long files stream through in chunks, which is exact because only the
// recurrence crosses frames.
EnhanceResult forward_masking(const CrnModel& model, const dsp::FrameParams& params,
                              const TimeSignal& x, const TimeSignal& y,
                              bool eval_float32 = false);

// Applies a gain sequence to a component spectrum and synthesizes, padding the
// result to pad_to samples. Shared by the enhancement path, the white-box
// component decomposition, and the forced-gain baselines.
TimeSignal apply_gains(const dsp::SpectralSequence& gains,
                       const dsp::SpectralSequence& spectrum,
                       const dsp::FrameParams& params, size_t pad_to);

// Frequency-flat constant gain sequence (identity/mute/attenuation baselines).
dsp::SpectralSequence flat_gains(int frames, int bins, double gain);

}  // namespace aeslab::model
