#pragma once

#include <cmath>

#include "aeslab/common.hpp"

namespace aeslab::ad::kernels {

// Frequency-axis convolution geometry. "Same" padding; for even tap counts
// the extra pad sample goes on the left.
struct ConvGeom {
  int in_len = 0;
  int out_len = 0;
  int taps = 0;
  int cin = 0;
  int cout = 0;
  int stride = 1;
  int pad_left = 0;
};

inline ConvGeom conv_geom(int in_len, int taps, int cin, int cout, int stride) {
  ConvGeom g;
  g.in_len = in_len;
  g.taps = taps;
  g.cin = cin;
  g.cout = cout;
  g.stride = stride;
  g.out_len = (in_len + stride - 1) / stride;
  const int pad_total =
      std::max(0, (g.out_len - 1) * stride + taps - in_len);
  g.pad_left = (pad_total + 1) / 2;
  return g;
}

// Transposed convolution doubling the frequency length: the exact adjoint of
// conv_geom(2*in_len, taps, ..., stride=2) with input/output channels swapped.
inline ConvGeom deconv_geom(int in_len, int taps, int cin, int cout) {
  ConvGeom g = conv_geom(2 * in_len, taps, cout, cin, 2);
  ConvGeom d;
  d.in_len = in_len;
  d.out_len = 2 * in_len;
  d.taps = taps;
  d.cin = cin;
  d.cout = cout;
  d.stride = 2;
  d.pad_left = g.pad_left;
  return d;
}

// x: [in_len x cin], w: [taps x cin x cout], b: [cout], out: [out_len x cout].
template <typename Real>
void conv_frame(const Real* x, const Real* w, const Real* b, Real* out,
                const ConvGeom& g) {
  for (int o = 0; o < g.out_len; ++o) {
    Real* row = out + static_cast<size_t>(o) * g.cout;
    for (int co = 0; co < g.cout; ++co) row[co] = b ? b[co] : Real(0);
    for (int n = 0; n < g.taps; ++n) {
      const int p = o * g.stride + n - g.pad_left;
      if (p < 0 || p >= g.in_len) continue;
      const Real* xin = x + static_cast<size_t>(p) * g.cin;
      const Real* wn = w + static_cast<size_t>(n) * g.cin * g.cout;
      for (int ci = 0; ci < g.cin; ++ci) {
        const Real xv = xin[ci];
        if (xv == Real(0)) continue;
        const Real* wrow = wn + static_cast<size_t>(ci) * g.cout;
        for (int co = 0; co < g.cout; ++co) row[co] += xv * wrow[co];
      }
    }
  }
}

// x: [in_len x cin], w: [taps x cin x cout], out: [2*in_len x cout].
template <typename Real>
void deconv_frame(const Real* x, const Real* w, const Real* b, Real* out,
                  const ConvGeom& g) {
  for (int p = 0; p < g.out_len; ++p) {
    Real* row = out + static_cast<size_t>(p) * g.cout;
    for (int co = 0; co < g.cout; ++co) row[co] = b ? b[co] : Real(0);
  }
  for (int o = 0; o < g.in_len; ++o) {
    const Real* xin = x + static_cast<size_t>(o) * g.cin;
    for (int n = 0; n < g.taps; ++n) {
      const int p = o * g.stride + n - g.pad_left;
      if (p < 0 || p >= g.out_len) continue;
      Real* row = out + static_cast<size_t>(p) * g.cout;
      const Real* wn = w + static_cast<size_t>(n) * g.cin * g.cout;
      for (int ci = 0; ci < g.cin; ++ci) {
        const Real xv = xin[ci];
        if (xv == Real(0)) continue;
        const Real* wrow = wn + static_cast<size_t>(ci) * g.cout;
        for (int co = 0; co < g.cout; ++co) row[co] += xv * wrow[co];
      }
    }
  }
}

// Per-channel convolution, stride 1. w: [taps x c], b: [c].
template <typename Real>
void depthwise_frame(const Real* x, const Real* w, const Real* b, Real* out,
                     int len, int taps, int channels) {
  const int pad_left = taps / 2;  // (taps-1+1)/2: left-biased for even taps
  for (int o = 0; o < len; ++o) {
    Real* row = out + static_cast<size_t>(o) * channels;
    for (int c = 0; c < channels; ++c) row[c] = b ? b[c] : Real(0);
    for (int n = 0; n < taps; ++n) {
      const int p = o + n - pad_left;
      if (p < 0 || p >= len) continue;
      const Real* xin = x + static_cast<size_t>(p) * channels;
      const Real* wn = w + static_cast<size_t>(n) * channels;
      for (int c = 0; c < channels; ++c) row[c] += xin[c] * wn[c];
    }
  }
}

template <typename Real>
Real sigmoid(Real x) {
  return Real(1) / (Real(1) + std::exp(-x));
}

template <typename Real>
Real elu(Real x) {
  return x >= Real(0) ? x : std::expm1(x);
}

// Single GRU step. Gate rows in W/U/b are stacked [update; reset; candidate].
// The candidate applies the reset gate after the recurrent matmul:
//   z = sig(Wz x + Uz h + bz)
//   r = sig(Wr x + Ur h + br)
//   c = tanh(Wc x + r.(Uc h) + bc)
//   h' = z.h + (1-z).c
// Scratch buffers z/r/c/uch ([hidden] each) receive the gate activations.
template <typename Real>
void gru_step(const Real* x, const Real* h, const Real* w, const Real* u,
              const Real* b, int din, int hidden, Real* z, Real* r, Real* c,
              Real* uch, Real* h_new) {
  for (int gate = 0; gate < 3; ++gate) {
    Real* dst = gate == 0 ? z : gate == 1 ? r : c;
    const Real* wg = w + static_cast<size_t>(gate) * hidden * din;
    const Real* ug = u + static_cast<size_t>(gate) * hidden * hidden;
    const Real* bg = b + static_cast<size_t>(gate) * hidden;
    for (int i = 0; i < hidden; ++i) {
      Real acc = bg[i];
      const Real* wrow = wg + static_cast<size_t>(i) * din;
      for (int j = 0; j < din; ++j) acc += wrow[j] * x[j];
      if (gate < 2) {
        const Real* urow = ug + static_cast<size_t>(i) * hidden;
        for (int j = 0; j < hidden; ++j) acc += urow[j] * h[j];
        dst[i] = sigmoid(acc);
      } else {
        const Real* urow = ug + static_cast<size_t>(i) * hidden;
        Real rec = Real(0);
        for (int j = 0; j < hidden; ++j) rec += urow[j] * h[j];
        uch[i] = rec;
        dst[i] = std::tanh(acc + r[i] * rec);
      }
    }
  }
  for (int i = 0; i < hidden; ++i) h_new[i] = z[i] * h[i] + (Real(1) - z[i]) * c[i];
}

// Single ConvLSTM step on one frame [len x channels]. Gate blocks along the
// channel axis are [input; forget; candidate; output]. No peepholes.
//   pre = conv(x; wx) + conv(h; uh) + b
//   c' = sig(pre_f).c + sig(pre_i).tanh(pre_g)
//   h' = sig(pre_o).tanh(c')
// `pre` is scratch of size len*4*hidden; gates are written back into it.
template <typename Real>
void convlstm_step(const Real* x, const Real* h, const Real* c, const Real* wx,
                   const Real* uh, const Real* b, int len, int cin, int hidden,
                   int taps, Real* pre, Real* scratch, Real* h_new, Real* c_new) {
  const ConvGeom gx = conv_geom(len, taps, cin, 4 * hidden, 1);
  const ConvGeom gh = conv_geom(len, taps, hidden, 4 * hidden, 1);
  conv_frame(x, wx, b, pre, gx);
  conv_frame(h, uh, static_cast<const Real*>(nullptr), scratch, gh);
  const size_t total = static_cast<size_t>(len) * 4 * hidden;
  for (size_t i = 0; i < total; ++i) pre[i] += scratch[i];
  for (int f = 0; f < len; ++f) {
    Real* row = pre + static_cast<size_t>(f) * 4 * hidden;
    const Real* crow = c + static_cast<size_t>(f) * hidden;
    Real* hrow = h_new + static_cast<size_t>(f) * hidden;
    Real* crow_new = c_new + static_cast<size_t>(f) * hidden;
    for (int i = 0; i < hidden; ++i) {
      const Real gi = sigmoid(row[i]);
      const Real gf = sigmoid(row[hidden + i]);
      const Real gg = std::tanh(row[2 * hidden + i]);
      const Real go = sigmoid(row[3 * hidden + i]);
      const Real cv = gf * crow[i] + gi * gg;
      crow_new[i] = cv;
      hrow[i] = go * std::tanh(cv);
      row[i] = gi;
      row[hidden + i] = gf;
      row[2 * hidden + i] = gg;
      row[3 * hidden + i] = go;
    }
  }
}

}  // namespace aeslab::ad::kernels
