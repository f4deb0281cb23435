#include "aeslab/model/pipeline.hpp"

#include <algorithm>

namespace aeslab::model {

TimeSignal apply_gains(const dsp::SpectralSequence& gains,
                       const dsp::SpectralSequence& spectrum,
                       const dsp::FrameParams& params, size_t pad_to) {
  if (gains.frames != spectrum.frames || gains.bins != spectrum.bins) {
    throw DataError("apply_gains: shape mismatch");
  }
  dsp::SpectralSequence e;
  e.frames = gains.frames;
  e.bins = gains.bins;
  e.data.resize(gains.data.size());
  for (size_t i = 0; i < gains.data.size(); ++i) {
    e.data[i] = gains.data[i] * spectrum.data[i];
  }
  TimeSignal out = dsp::synthesize(e, params);
  out.resize(std::max(pad_to, out.size()), 0.0);
  if (out.size() > pad_to) out.resize(pad_to);
  return out;
}

dsp::SpectralSequence flat_gains(int frames, int bins, double gain) {
  dsp::SpectralSequence g;
  g.frames = frames;
  g.bins = bins;
  g.data.assign(static_cast<size_t>(frames) * bins, dsp::Complex(gain, 0.0));
  return g;
}

EnhanceResult forward_masking(const CrnModel& model, const dsp::FrameParams& params,
                              const TimeSignal& x, const TimeSignal& y,
                              bool eval_float32) {
  if (x.size() != y.size()) throw DataError("forward_masking: x/y length mismatch");
  const dsp::SpectralSequence X = dsp::analyze(x, params);
  const dsp::SpectralSequence Y = dsp::analyze(y, params);
  const std::vector<double> feats =
      dsp::assemble_features(X, Y, params, model.config().input_compression);

  const int T = Y.frames;
  const int L = params.feature_len;
  StreamState state = model.make_state();
  ad::Tensor mask({T, L, 2});

  constexpr int kChunk = 200;
  for (int start = 0; start < T; start += kChunk) {
    const int n = std::min(kChunk, T - start);
    ad::Tensor chunk({n, L, 4});
    std::copy(feats.begin() + static_cast<ptrdiff_t>(start) * L * 4,
              feats.begin() + static_cast<ptrdiff_t>(start + n) * L * 4,
              chunk.v.begin());
    const ad::Tensor m = eval_float32 ? model.forward_inference<float>(chunk, state)
                                      : model.forward_inference<double>(chunk, state);
    std::copy(m.v.begin(), m.v.end(),
              mask.v.begin() + static_cast<ptrdiff_t>(start) * L * 2);
  }

  const dsp::SpectralSequence M = dsp::crop_mask(mask.v, T, params);
  EnhanceResult res;
  res.gains.frames = T;
  res.gains.bins = M.bins;
  res.gains.data.resize(M.data.size());
  for (size_t i = 0; i < M.data.size(); ++i) {
    res.gains.data[i] = dsp::mask_gain(M.data[i]);
  }
  res.e = apply_gains(res.gains, Y, params, y.size());
  return res;
}

}  // namespace aeslab::model
