#pragma once

#include <vector>

#include "aeslab/autodiff/tape.hpp"
#include "aeslab/dsp/frame_params.hpp"

namespace aeslab::ad {

// Elementwise / scalar algebra ------------------------------------------------
ValueRef add(Tape& t, ValueRef a, ValueRef b);
ValueRef scale(Tape& t, ValueRef a, double k);
ValueRef weighted_sum(Tape& t, const std::vector<ValueRef>& terms,
                      const std::vector<double>& coeffs);
ValueRef elu(Tape& t, ValueRef a);

// Shape plumbing ---------------------------------------------------------------
ValueRef reshape(Tape& t, ValueRef a, std::vector<int> shape);
ValueRef gather_cols(Tape& t, ValueRef a, int start, int len);
ValueRef concat_cols(Tape& t, const std::vector<ValueRef>& parts);
ValueRef permute_cols(Tape& t, ValueRef a, std::vector<int> perm);
// [T x F x C] -> [T x len x C], first `len` frequency entries.
ValueRef crop_freq(Tape& t, ValueRef a, int len);

// Frequency-axis convolutions, applied identically to every frame --------------
// x: [T x Fb x Cin], w: [N x Cin x Cout], b: [Cout].
ValueRef conv_freq(Tape& t, ValueRef x, ValueRef w, ValueRef b, int stride);
// Transposed, stride 2, doubles the frequency length.
ValueRef deconv_freq(Tape& t, ValueRef x, ValueRef w, ValueRef b);
// w: [N x C], b: [C]; each channel convolved independently.
ValueRef depthwise_conv(Tape& t, ValueRef x, ValueRef w, ValueRef b);

// Recurrent sequences ----------------------------------------------------------
// x: [T x Din], w: [3H x Din], u: [3H x H], b: [3H], h0: [H] -> [T x H].
ValueRef gru_sequence(Tape& t, ValueRef x, ValueRef w, ValueRef u, ValueRef b,
                      ValueRef h0);
// x: [T x Fb x Cin], wx: [N x Cin x 4H], uh: [N x H x 4H], b: [4H],
// h0/c0: [Fb x H] -> [T x Fb x H].
ValueRef convlstm_sequence(Tape& t, ValueRef x, ValueRef wx, ValueRef uh,
                           ValueRef b, ValueRef h0, ValueRef c0, int taps);

// Masking / synthesis chain ----------------------------------------------------
// m: [T x bins x 2] -> effective complex gain G = tanh(|M|) * M/|M|.
ValueRef mask_gain(Tape& t, ValueRef m);
// Complex elementwise product with a constant spectrum [T x bins x 2].
ValueRef complex_mul_const(Tape& t, ValueRef g, const Tensor& spectrum);
// [T x bins x 2] -> time signal via conjugate-symmetric IDFT, windowing, OLA.
ValueRef ola_synthesize(Tape& t, ValueRef e, const dsp::FrameParams& params);
// 10*log10(sum((a-b)^2) + eps) against a constant target.
ValueRef logmse(Tape& t, ValueRef a, const Tensor& target);

constexpr double kLossEpsilon = 1e-12;

}  // namespace aeslab::ad
