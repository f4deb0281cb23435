#pragma once

#include <complex>
#include <vector>

#include "aeslab/common.hpp"
#include "aeslab/dsp/frame_params.hpp"

namespace aeslab::dsp {

using Complex = std::complex<double>;

// frames x (K/2+1) complex coefficients from the analysis front-end.
struct SpectralSequence {
  int frames = 0;
  int bins = 0;
  std::vector<Complex> data;  // row-major [frame][bin]

  Complex& at(int frame, int bin) {
    return data[static_cast<size_t>(frame) * bins + bin];
  }
  const Complex& at(int frame, int bin) const {
    return data[static_cast<size_t>(frame) * bins + bin];
  }
};

// sqrt-Hann windowed frames, zero-padded to the DFT size; bins 0..K/2 kept.
SpectralSequence analyze(const TimeSignal& signal, const FrameParams& params);

// Conjugate-symmetric extension, K-point inverse DFT, truncation to the frame
// length, synthesis sqrt-Hann window, 50% overlap-add.
TimeSignal synthesize(const SpectralSequence& spectra, const FrameParams& params);

// Minimum magnitude below which the masking gain is defined as zero.
constexpr double kMaskEpsilon = 1e-12;

// E = Y * tanh(|M|) * M/|M|, with gain 0 when |M| < kMaskEpsilon.
Complex apply_mask(Complex y, Complex m);
void apply_mask_frame(const Complex* y, const Complex* m, Complex* e, int bins);

// The effective complex gain of the masking rule: G = tanh(|M|) * M/|M|.
// apply_mask(y, m) == mask_gain(m) * y exactly.
Complex mask_gain(Complex m);

// Magnitude compression |Y|^c with phase preserved. Encoder input only.
Complex compress_input(Complex y, double c);

// frames x L x 4 feature tensor, channels [Re Y, Im Y, Re X, Im X], bins
// zero-padded from K/2+1 to L. Row-major [frame][freq][channel].
std::vector<double> assemble_features(const SpectralSequence& x,
                                      const SpectralSequence& y,
                                      const FrameParams& params,
                                      bool compressed);

// Inverse of the L-padding: first K/2+1 frequency entries of a frames x L x 2
// (Re M, Im M) tensor.
SpectralSequence crop_mask(const std::vector<double>& network_output, int frames,
                           const FrameParams& params);

}  // namespace aeslab::dsp
