#include "aeslab/autodiff/ops.hpp"

#include <cmath>
#include <complex>
#include <memory>

#include "aeslab/autodiff/kernels.hpp"
#include "aeslab/dsp/fft.hpp"

namespace aeslab::ad {

using kernels::ConvGeom;

namespace {

int frames_of(const Tensor& t) { return t.dim(0); }

void check_rank(const Tensor& t, int rank, const char* op) {
  if (t.rank() != rank) {
    throw NumericError(std::string(op) + ": expected rank " + std::to_string(rank) +
                       ", got " + t.shape_str());
  }
}

}  // namespace

ValueRef add(Tape& t, ValueRef a, ValueRef b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  if (!av.same_shape(bv)) {
    throw NumericError("add: shape mismatch " + av.shape_str() + " vs " + bv.shape_str());
  }
  Tensor out = av;
  for (size_t i = 0; i < out.numel(); ++i) out.v[i] += bv.v[i];
  return t.push(std::move(out), {a.id, b.id}, [a, b](Tape& tp, int id) {
    const Tensor& g = tp.grad(id);
    if (tp.requires_grad(a.id)) {
      Tensor& ga = tp.grad(a);
      for (size_t i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i];
    }
    if (tp.requires_grad(b.id)) {
      Tensor& gb = tp.grad(b);
      for (size_t i = 0; i < g.numel(); ++i) gb.v[i] += g.v[i];
    }
  });
}

ValueRef scale(Tape& t, ValueRef a, double k) {
  Tensor out = t.value(a);
  for (double& v : out.v) v *= k;
  return t.push(std::move(out), {a.id}, [a, k](Tape& tp, int id) {
    const Tensor& g = tp.grad(id);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < g.numel(); ++i) ga.v[i] += k * g.v[i];
  });
}

ValueRef weighted_sum(Tape& t, const std::vector<ValueRef>& terms,
                      const std::vector<double>& coeffs) {
  if (terms.empty() || terms.size() != coeffs.size()) {
    throw NumericError("weighted_sum: terms/coeffs mismatch");
  }
  double acc = 0.0;
  std::vector<int> parents;
  for (size_t i = 0; i < terms.size(); ++i) {
    const Tensor& v = t.value(terms[i]);
    if (v.numel() != 1) throw NumericError("weighted_sum: scalar terms only");
    acc += coeffs[i] * v.v[0];
    parents.push_back(terms[i].id);
  }
  auto ts = terms;
  auto cs = coeffs;
  return t.push(Tensor::scalar(acc), std::move(parents), [ts, cs](Tape& tp, int id) {
    const double g = tp.grad(id).v[0];
    for (size_t i = 0; i < ts.size(); ++i) {
      if (tp.requires_grad(ts[i].id)) tp.grad(ts[i]).v[0] += cs[i] * g;
    }
  });
}

ValueRef elu(Tape& t, ValueRef a) {
  Tensor out = t.value(a);
  for (double& v : out.v) v = kernels::elu(v);
  return t.push(std::move(out), {a.id}, [a](Tape& tp, int id) {
    const Tensor& g = tp.grad(id);
    const Tensor& y = tp.value(id);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < g.numel(); ++i) {
      // For x < 0 the output is exp(x)-1, so the local slope is y+1.
      ga.v[i] += g.v[i] * (y.v[i] >= 0.0 ? 1.0 : y.v[i] + 1.0);
    }
  });
}

ValueRef reshape(Tape& t, ValueRef a, std::vector<int> shape) {
  Tensor out(std::move(shape), t.value(a).v);
  return t.push(std::move(out), {a.id}, [a](Tape& tp, int id) {
    const Tensor& g = tp.grad(id);
    Tensor& ga = tp.grad(a);
    for (size_t i = 0; i < g.numel(); ++i) ga.v[i] += g.v[i];
  });
}

ValueRef gather_cols(Tape& t, ValueRef a, int start, int len) {
  const Tensor& av = t.value(a);
  check_rank(av, 2, "gather_cols");
  const int rows = av.dim(0), cols = av.dim(1);
  if (start < 0 || start + len > cols) throw NumericError("gather_cols: out of range");
  Tensor out({rows, len});
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < len; ++j) out.at2(i, j) = av.at2(i, start + j);
  }
  return t.push(std::move(out), {a.id}, [a, start, len](Tape& tp, int id) {
    const Tensor& g = tp.grad(id);
    Tensor& ga = tp.grad(a);
    const int rows = g.dim(0);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < len; ++j) ga.at2(i, start + j) += g.at2(i, j);
    }
  });
}

ValueRef concat_cols(Tape& t, const std::vector<ValueRef>& parts) {
  if (parts.empty()) throw NumericError("concat_cols: no parts");
  const int rows = t.value(parts[0]).dim(0);
  int cols = 0;
  std::vector<int> parents;
  for (ValueRef p : parts) {
    check_rank(t.value(p), 2, "concat_cols");
    if (t.value(p).dim(0) != rows) throw NumericError("concat_cols: row mismatch");
    cols += t.value(p).dim(1);
    parents.push_back(p.id);
  }
  Tensor out({rows, cols});
  int off = 0;
  for (ValueRef p : parts) {
    const Tensor& pv = t.value(p);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < pv.dim(1); ++j) out.at2(i, off + j) = pv.at2(i, j);
    }
    off += pv.dim(1);
  }
  auto ps = parts;
  return t.push(std::move(out), std::move(parents), [ps](Tape& tp, int id) {
    const Tensor& g = tp.grad(id);
    const int rows = g.dim(0);
    int off = 0;
    for (ValueRef p : ps) {
      const int w = tp.value(p).dim(1);
      if (tp.requires_grad(p.id)) {
        Tensor& gp = tp.grad(p);
        for (int i = 0; i < rows; ++i) {
          for (int j = 0; j < w; ++j) gp.at2(i, j) += g.at2(i, off + j);
        }
      }
      off += w;
    }
  });
}

ValueRef permute_cols(Tape& t, ValueRef a, std::vector<int> perm) {
  const Tensor& av = t.value(a);
  check_rank(av, 2, "permute_cols");
  const int rows = av.dim(0), cols = av.dim(1);
  if (static_cast<int>(perm.size()) != cols) throw NumericError("permute_cols: bad perm");
  Tensor out({rows, cols});
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out.at2(i, j) = av.at2(i, perm[static_cast<size_t>(j)]);
  }
  auto pm = std::make_shared<std::vector<int>>(std::move(perm));
  return t.push(std::move(out), {a.id}, [a, pm](Tape& tp, int id) {
    const Tensor& g = tp.grad(id);
    Tensor& ga = tp.grad(a);
    const int rows = g.dim(0), cols = g.dim(1);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) ga.at2(i, (*pm)[static_cast<size_t>(j)]) += g.at2(i, j);
    }
  });
}

ValueRef crop_freq(Tape& t, ValueRef a, int len) {
  const Tensor& av = t.value(a);
  check_rank(av, 3, "crop_freq");
  const int frames = av.dim(0), full = av.dim(1), ch = av.dim(2);
  if (len > full) throw NumericError("crop_freq: length exceeds input");
  Tensor out({frames, len, ch});
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < len; ++k) {
      for (int c = 0; c < ch; ++c) out.at3(f, k, c) = av.at3(f, k, c);
    }
  }
  return t.push(std::move(out), {a.id}, [a, len](Tape& tp, int id) {
    const Tensor& g = tp.grad(id);
    Tensor& ga = tp.grad(a);
    const int frames = g.dim(0), ch = g.dim(2);
    for (int f = 0; f < frames; ++f) {
      for (int k = 0; k < len; ++k) {
        for (int c = 0; c < ch; ++c) ga.at3(f, k, c) += g.at3(f, k, c);
      }
    }
  });
}

// --- convolutions -------------------------------------------------------------

namespace {

// Adjoint pieces shared by conv backward and deconv forward/backward.
void conv_backward_x(const Tensor& gout, const Tensor& w, Tensor& gx,
                     const ConvGeom& g, int frames) {
  for (int f = 0; f < frames; ++f) {
    const double* go = &gout.v[static_cast<size_t>(f) * g.out_len * g.cout];
    double* gxr = &gx.v[static_cast<size_t>(f) * g.in_len * g.cin];
    for (int o = 0; o < g.out_len; ++o) {
      const double* grow = go + static_cast<size_t>(o) * g.cout;
      for (int n = 0; n < g.taps; ++n) {
        const int p = o * g.stride + n - g.pad_left;
        if (p < 0 || p >= g.in_len) continue;
        const double* wn = &w.v[static_cast<size_t>(n) * g.cin * g.cout];
        double* gxi = gxr + static_cast<size_t>(p) * g.cin;
        for (int ci = 0; ci < g.cin; ++ci) {
          const double* wrow = wn + static_cast<size_t>(ci) * g.cout;
          double acc = 0.0;
          for (int co = 0; co < g.cout; ++co) acc += wrow[co] * grow[co];
          gxi[ci] += acc;
        }
      }
    }
  }
}

void conv_backward_w(const Tensor& gout, const Tensor& x, Tensor& gw,
                     const ConvGeom& g, int frames) {
  for (int f = 0; f < frames; ++f) {
    const double* go = &gout.v[static_cast<size_t>(f) * g.out_len * g.cout];
    const double* xr = &x.v[static_cast<size_t>(f) * g.in_len * g.cin];
    for (int o = 0; o < g.out_len; ++o) {
      const double* grow = go + static_cast<size_t>(o) * g.cout;
      for (int n = 0; n < g.taps; ++n) {
        const int p = o * g.stride + n - g.pad_left;
        if (p < 0 || p >= g.in_len) continue;
        const double* xi = xr + static_cast<size_t>(p) * g.cin;
        double* gwn = &gw.v[static_cast<size_t>(n) * g.cin * g.cout];
        for (int ci = 0; ci < g.cin; ++ci) {
          const double xv = xi[ci];
          if (xv == 0.0) continue;
          double* gwrow = gwn + static_cast<size_t>(ci) * g.cout;
          for (int co = 0; co < g.cout; ++co) gwrow[co] += xv * grow[co];
        }
      }
    }
  }
}

void conv_backward_b(const Tensor& gout, Tensor& gb, int cout) {
  const size_t rows = gout.numel() / static_cast<size_t>(cout);
  for (size_t r = 0; r < rows; ++r) {
    const double* grow = &gout.v[r * static_cast<size_t>(cout)];
    for (int co = 0; co < cout; ++co) gb.v[static_cast<size_t>(co)] += grow[co];
  }
}

}  // namespace

ValueRef conv_freq(Tape& t, ValueRef x, ValueRef w, ValueRef b, int stride) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  const Tensor& bv = t.value(b);
  check_rank(xv, 3, "conv_freq");
  check_rank(wv, 3, "conv_freq weights");
  if (stride != 1 && stride != 2) throw NumericError("conv_freq: stride must be 1 or 2");
  if (wv.dim(1) != xv.dim(2)) {
    throw NumericError("conv_freq: channel mismatch, input " + xv.shape_str() +
                       " vs kernel " + wv.shape_str());
  }
  if (bv.numel() != static_cast<size_t>(wv.dim(2))) {
    throw NumericError("conv_freq: bias size mismatch");
  }
  const int frames = frames_of(xv);
  const ConvGeom g = kernels::conv_geom(xv.dim(1), wv.dim(0), wv.dim(1), wv.dim(2), stride);
  Tensor out({frames, g.out_len, g.cout});
  for (int f = 0; f < frames; ++f) {
    kernels::conv_frame(&xv.v[static_cast<size_t>(f) * g.in_len * g.cin], wv.v.data(),
                        bv.v.data(), &out.v[static_cast<size_t>(f) * g.out_len * g.cout],
                        g);
  }
  return t.push(std::move(out), {x.id, w.id, b.id}, [x, w, b, g](Tape& tp, int id) {
    const Tensor& gout = tp.grad(id);
    const int frames = gout.dim(0);
    if (tp.requires_grad(x.id)) conv_backward_x(gout, tp.value(w), tp.grad(x), g, frames);
    if (tp.requires_grad(w.id)) conv_backward_w(gout, tp.value(x), tp.grad(w), g, frames);
    if (tp.requires_grad(b.id)) conv_backward_b(gout, tp.grad(b), g.cout);
  });
}

ValueRef deconv_freq(Tape& t, ValueRef x, ValueRef w, ValueRef b) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  const Tensor& bv = t.value(b);
  check_rank(xv, 3, "deconv_freq");
  check_rank(wv, 3, "deconv_freq weights");
  if (wv.dim(1) != xv.dim(2)) {
    throw NumericError("deconv_freq: channel mismatch, input " + xv.shape_str() +
                       " vs kernel " + wv.shape_str());
  }
  if (bv.numel() != static_cast<size_t>(wv.dim(2))) {
    throw NumericError("deconv_freq: bias size mismatch");
  }
  const int frames = frames_of(xv);
  const ConvGeom g = kernels::deconv_geom(xv.dim(1), wv.dim(0), wv.dim(1), wv.dim(2));
  Tensor out({frames, g.out_len, g.cout});
  for (int f = 0; f < frames; ++f) {
    kernels::deconv_frame(&xv.v[static_cast<size_t>(f) * g.in_len * g.cin], wv.v.data(),
                          bv.v.data(), &out.v[static_cast<size_t>(f) * g.out_len * g.cout],
                          g);
  }
  return t.push(std::move(out), {x.id, w.id, b.id}, [x, w, b, g](Tape& tp, int id) {
    const Tensor& gout = tp.grad(id);
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(w);
    const int frames = gout.dim(0);
    // Scatter forward means gather backward: the deconv adjoint w.r.t. x is a
    // strided conv of the output gradient with the same kernel.
    if (tp.requires_grad(x.id)) {
      Tensor& gx = tp.grad(x);
      for (int f = 0; f < frames; ++f) {
        const double* go = &gout.v[static_cast<size_t>(f) * g.out_len * g.cout];
        double* gxr = &gx.v[static_cast<size_t>(f) * g.in_len * g.cin];
        for (int o = 0; o < g.in_len; ++o) {
          for (int n = 0; n < g.taps; ++n) {
            const int p = o * g.stride + n - g.pad_left;
            if (p < 0 || p >= g.out_len) continue;
            const double* grow = go + static_cast<size_t>(p) * g.cout;
            const double* wn = &wv.v[static_cast<size_t>(n) * g.cin * g.cout];
            double* gxi = gxr + static_cast<size_t>(o) * g.cin;
            for (int ci = 0; ci < g.cin; ++ci) {
              const double* wrow = wn + static_cast<size_t>(ci) * g.cout;
              double acc = 0.0;
              for (int co = 0; co < g.cout; ++co) acc += wrow[co] * grow[co];
              gxi[ci] += acc;
            }
          }
        }
      }
    }
    if (tp.requires_grad(w.id)) {
      Tensor& gw = tp.grad(w);
      for (int f = 0; f < frames; ++f) {
        const double* go = &gout.v[static_cast<size_t>(f) * g.out_len * g.cout];
        const double* xr = &xv.v[static_cast<size_t>(f) * g.in_len * g.cin];
        for (int o = 0; o < g.in_len; ++o) {
          const double* xi = xr + static_cast<size_t>(o) * g.cin;
          for (int n = 0; n < g.taps; ++n) {
            const int p = o * g.stride + n - g.pad_left;
            if (p < 0 || p >= g.out_len) continue;
            const double* grow = go + static_cast<size_t>(p) * g.cout;
            double* gwn = &gw.v[static_cast<size_t>(n) * g.cin * g.cout];
            for (int ci = 0; ci < g.cin; ++ci) {
              const double xval = xi[ci];
              if (xval == 0.0) continue;
              double* gwrow = gwn + static_cast<size_t>(ci) * g.cout;
              for (int co = 0; co < g.cout; ++co) gwrow[co] += xval * grow[co];
            }
          }
        }
      }
    }
    if (tp.requires_grad(b.id)) conv_backward_b(gout, tp.grad(b), g.cout);
  });
}

ValueRef depthwise_conv(Tape& t, ValueRef x, ValueRef w, ValueRef b) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  const Tensor& bv = t.value(b);
  check_rank(xv, 3, "depthwise_conv");
  check_rank(wv, 2, "depthwise_conv weights");
  const int channels = xv.dim(2);
  if (wv.dim(1) != channels || bv.numel() != static_cast<size_t>(channels)) {
    throw NumericError("depthwise_conv: channel mismatch, input " + xv.shape_str() +
                       " vs kernel " + wv.shape_str());
  }
  const int frames = frames_of(xv);
  const int len = xv.dim(1);
  const int taps = wv.dim(0);
  Tensor out({frames, len, channels});
  for (int f = 0; f < frames; ++f) {
    kernels::depthwise_frame(&xv.v[static_cast<size_t>(f) * len * channels], wv.v.data(),
                             bv.v.data(), &out.v[static_cast<size_t>(f) * len * channels],
                             len, taps, channels);
  }
  return t.push(std::move(out), {x.id, w.id, b.id},
                [x, w, b, len, taps, channels](Tape& tp, int id) {
    const Tensor& gout = tp.grad(id);
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(w);
    const int frames = gout.dim(0);
    const int pad_left = taps / 2;
    if (tp.requires_grad(x.id)) {
      Tensor& gx = tp.grad(x);
      for (int f = 0; f < frames; ++f) {
        for (int o = 0; o < len; ++o) {
          for (int n = 0; n < taps; ++n) {
            const int p = o + n - pad_left;
            if (p < 0 || p >= len) continue;
            for (int c = 0; c < channels; ++c) {
              gx.at3(f, p, c) += gout.at3(f, o, c) * wv.at2(n, c);
            }
          }
        }
      }
    }
    if (tp.requires_grad(w.id)) {
      Tensor& gw = tp.grad(w);
      for (int f = 0; f < frames; ++f) {
        for (int o = 0; o < len; ++o) {
          for (int n = 0; n < taps; ++n) {
            const int p = o + n - pad_left;
            if (p < 0 || p >= len) continue;
            for (int c = 0; c < channels; ++c) {
              gw.at2(n, c) += gout.at3(f, o, c) * xv.at3(f, p, c);
            }
          }
        }
      }
    }
    if (tp.requires_grad(b.id)) conv_backward_b(gout, tp.grad(b), channels);
  });
}

// --- recurrent sequences -------------------------------------------------------

ValueRef gru_sequence(Tape& t, ValueRef x, ValueRef w, ValueRef u, ValueRef b,
                      ValueRef h0) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  const Tensor& uv = t.value(u);
  const Tensor& bv = t.value(b);
  const Tensor& h0v = t.value(h0);
  check_rank(xv, 2, "gru_sequence");
  const int T = xv.dim(0);
  const int din = xv.dim(1);
  const int hidden = h0v.dim(0);
  if (wv.dim(0) != 3 * hidden || wv.dim(1) != din || uv.dim(0) != 3 * hidden ||
      uv.dim(1) != hidden || bv.numel() != static_cast<size_t>(3 * hidden)) {
    throw NumericError("gru_sequence: parameter shapes inconsistent with (Din=" +
                       std::to_string(din) + ", H=" + std::to_string(hidden) + ")");
  }

  Tensor h_all({T, hidden});
  // Saved activations for BPTT: z, r, c, and Uc*h per step.
  auto saved = std::make_shared<std::vector<double>>(static_cast<size_t>(T) * 4 * hidden);
  std::vector<double> h_prev(h0v.v);
  for (int step = 0; step < T; ++step) {
    double* z = &(*saved)[static_cast<size_t>(step) * 4 * hidden];
    double* r = z + hidden;
    double* c = r + hidden;
    double* uch = c + hidden;
    double* h_new = &h_all.v[static_cast<size_t>(step) * hidden];
    kernels::gru_step(&xv.v[static_cast<size_t>(step) * din], h_prev.data(), wv.v.data(),
                      uv.v.data(), bv.v.data(), din, hidden, z, r, c, uch, h_new);
    for (int i = 0; i < hidden; ++i) {
      if (!std::isfinite(h_new[i])) {
        throw NumericError("gru_sequence: non-finite state at step " +
                           std::to_string(step));
      }
    }
    h_prev.assign(h_new, h_new + hidden);
  }

  return t.push(std::move(h_all), {x.id, w.id, u.id, b.id, h0.id},
                [x, w, u, b, h0, saved, din, hidden](Tape& tp, int id) {
    const Tensor& gout = tp.grad(id);
    const Tensor& h_all = tp.value(id);
    const Tensor& xv = tp.value(x);
    const Tensor& wv = tp.value(w);
    const Tensor& uv = tp.value(u);
    const Tensor& h0v = tp.value(h0);
    const int T = gout.dim(0);

    const bool need_x = tp.requires_grad(x.id);
    const bool need_w = tp.requires_grad(w.id);
    const bool need_u = tp.requires_grad(u.id);
    const bool need_b = tp.requires_grad(b.id);
    const bool need_h0 = tp.requires_grad(h0.id);

    std::vector<double> gh(static_cast<size_t>(hidden), 0.0);
    std::vector<double> gaz(static_cast<size_t>(hidden)), gar(static_cast<size_t>(hidden)),
        gac(static_cast<size_t>(hidden)), guch(static_cast<size_t>(hidden)),
        gh_next(static_cast<size_t>(hidden));
    for (int step = T - 1; step >= 0; --step) {
      const double* z = &(*saved)[static_cast<size_t>(step) * 4 * hidden];
      const double* r = z + hidden;
      const double* c = r + hidden;
      const double* uch = c + hidden;
      const double* hprev =
          step > 0 ? &h_all.v[static_cast<size_t>(step - 1) * hidden] : h0v.v.data();
      for (int i = 0; i < hidden; ++i) {
        gh[static_cast<size_t>(i)] += gout.at2(step, i);
      }
      for (int i = 0; i < hidden; ++i) {
        const double ghv = gh[static_cast<size_t>(i)];
        const double gz = ghv * (hprev[i] - c[i]);
        gaz[static_cast<size_t>(i)] = gz * z[i] * (1.0 - z[i]);
        const double gc = ghv * (1.0 - z[i]);
        const double gac_v = gc * (1.0 - c[i] * c[i]);
        gac[static_cast<size_t>(i)] = gac_v;
        const double gr = gac_v * uch[i];
        gar[static_cast<size_t>(i)] = gr * r[i] * (1.0 - r[i]);
        guch[static_cast<size_t>(i)] = gac_v * r[i];
      }
      // Parameter and input gradients for this step.
      const double* xt = &xv.v[static_cast<size_t>(step) * din];
      if (need_w) {
        Tensor& gw = tp.grad(w);
        for (int gate = 0; gate < 3; ++gate) {
          const double* ga = gate == 0 ? gaz.data() : gate == 1 ? gar.data() : gac.data();
          double* gwg = &gw.v[static_cast<size_t>(gate) * hidden * din];
          for (int i = 0; i < hidden; ++i) {
            const double gv = ga[i];
            if (gv == 0.0) continue;
            double* grow = gwg + static_cast<size_t>(i) * din;
            for (int j = 0; j < din; ++j) grow[j] += gv * xt[j];
          }
        }
      }
      if (need_u) {
        Tensor& gu = tp.grad(u);
        for (int gate = 0; gate < 3; ++gate) {
          const double* ga = gate == 0 ? gaz.data() : gate == 1 ? gar.data() : guch.data();
          double* gug = &gu.v[static_cast<size_t>(gate) * hidden * hidden];
          for (int i = 0; i < hidden; ++i) {
            const double gv = ga[i];
            if (gv == 0.0) continue;
            double* grow = gug + static_cast<size_t>(i) * hidden;
            for (int j = 0; j < hidden; ++j) grow[j] += gv * hprev[j];
          }
        }
      }
      if (need_b) {
        Tensor& gb = tp.grad(b);
        for (int i = 0; i < hidden; ++i) {
          gb.v[static_cast<size_t>(i)] += gaz[static_cast<size_t>(i)];
          gb.v[static_cast<size_t>(hidden + i)] += gar[static_cast<size_t>(i)];
          gb.v[static_cast<size_t>(2 * hidden + i)] += gac[static_cast<size_t>(i)];
        }
      }
      if (need_x) {
        Tensor& gx = tp.grad(x);
        double* gxt = &gx.v[static_cast<size_t>(step) * din];
        for (int gate = 0; gate < 3; ++gate) {
          const double* ga = gate == 0 ? gaz.data() : gate == 1 ? gar.data() : gac.data();
          const double* wg = &wv.v[static_cast<size_t>(gate) * hidden * din];
          for (int i = 0; i < hidden; ++i) {
            const double gv = ga[i];
            if (gv == 0.0) continue;
            const double* wrow = wg + static_cast<size_t>(i) * din;
            for (int j = 0; j < din; ++j) gxt[j] += gv * wrow[j];
          }
        }
      }
      // Carry into h_{t-1}: direct z-path plus the three U transposes.
      for (int i = 0; i < hidden; ++i) {
        gh_next[static_cast<size_t>(i)] = gh[static_cast<size_t>(i)] * z[i];
      }
      for (int gate = 0; gate < 3; ++gate) {
        const double* ga = gate == 0 ? gaz.data() : gate == 1 ? gar.data() : guch.data();
        const double* ug = &uv.v[static_cast<size_t>(gate) * hidden * hidden];
        for (int i = 0; i < hidden; ++i) {
          const double gv = ga[i];
          if (gv == 0.0) continue;
          const double* urow = ug + static_cast<size_t>(i) * hidden;
          for (int j = 0; j < hidden; ++j) gh_next[static_cast<size_t>(j)] += gv * urow[j];
        }
      }
      gh.swap(gh_next);
      std::fill(gh_next.begin(), gh_next.end(), 0.0);
    }
    if (need_h0) {
      Tensor& gh0 = tp.grad(h0);
      for (int i = 0; i < hidden; ++i) gh0.v[static_cast<size_t>(i)] += gh[static_cast<size_t>(i)];
    }
  });
}

ValueRef convlstm_sequence(Tape& t, ValueRef x, ValueRef wx, ValueRef uh,
                           ValueRef b, ValueRef h0, ValueRef c0, int taps) {
  const Tensor& xv = t.value(x);
  const Tensor& wxv = t.value(wx);
  const Tensor& uhv = t.value(uh);
  const Tensor& bv = t.value(b);
  const Tensor& h0v = t.value(h0);
  const Tensor& c0v = t.value(c0);
  check_rank(xv, 3, "convlstm_sequence");
  const int T = xv.dim(0);
  const int len = xv.dim(1);
  const int cin = xv.dim(2);
  const int hidden = h0v.dim(1);
  if (wxv.dim(0) != taps || wxv.dim(1) != cin || wxv.dim(2) != 4 * hidden ||
      uhv.dim(0) != taps || uhv.dim(1) != hidden || uhv.dim(2) != 4 * hidden ||
      bv.numel() != static_cast<size_t>(4 * hidden) || h0v.dim(0) != len ||
      !c0v.same_shape(h0v)) {
    throw NumericError("convlstm_sequence: inconsistent shapes");
  }

  const size_t gate_sz = static_cast<size_t>(len) * 4 * hidden;
  const size_t state_sz = static_cast<size_t>(len) * hidden;
  auto gates = std::make_shared<std::vector<double>>(static_cast<size_t>(T) * gate_sz);
  auto cells = std::make_shared<std::vector<double>>(static_cast<size_t>(T) * state_sz);

  Tensor h_all({T, len, hidden});
  std::vector<double> h_prev(h0v.v), c_prev(c0v.v), scratch(gate_sz);
  for (int step = 0; step < T; ++step) {
    double* pre = &(*gates)[static_cast<size_t>(step) * gate_sz];
    double* c_new = &(*cells)[static_cast<size_t>(step) * state_sz];
    double* h_new = &h_all.v[static_cast<size_t>(step) * state_sz];
    kernels::convlstm_step(&xv.v[static_cast<size_t>(step) * len * cin], h_prev.data(),
                           c_prev.data(), wxv.v.data(), uhv.v.data(), bv.v.data(), len,
                           cin, hidden, taps, pre, scratch.data(), h_new, c_new);
    for (size_t i = 0; i < state_sz; ++i) {
      if (!std::isfinite(h_new[i])) {
        throw NumericError("convlstm_sequence: non-finite state at step " +
                           std::to_string(step));
      }
    }
    h_prev.assign(h_new, h_new + state_sz);
    c_prev.assign(c_new, c_new + state_sz);
  }

  return t.push(std::move(h_all), {x.id, wx.id, uh.id, b.id, h0.id, c0.id},
                [x, wx, uh, b, h0, c0, gates, cells, taps, len, cin,
                 hidden](Tape& tp, int id) {
    const Tensor& gout = tp.grad(id);
    const Tensor& h_all = tp.value(id);
    const Tensor& xv = tp.value(x);
    const Tensor& wxv = tp.value(wx);
    const Tensor& uhv = tp.value(uh);
    const Tensor& h0v = tp.value(h0);
    const Tensor& c0v = tp.value(c0);
    const int T = gout.dim(0);
    const size_t gate_sz = static_cast<size_t>(len) * 4 * hidden;
    const size_t state_sz = static_cast<size_t>(len) * hidden;
    const ConvGeom gx = kernels::conv_geom(len, taps, cin, 4 * hidden, 1);
    const ConvGeom gh = kernels::conv_geom(len, taps, hidden, 4 * hidden, 1);

    Tensor gh_carry({len, hidden});
    Tensor gc_carry({len, hidden});
    Tensor gpre({len, 4 * hidden});
    for (int step = T - 1; step >= 0; --step) {
      const double* pre = &(*gates)[static_cast<size_t>(step) * gate_sz];
      const double* c_now = &(*cells)[static_cast<size_t>(step) * state_sz];
      const double* c_prev =
          step > 0 ? &(*cells)[static_cast<size_t>(step - 1) * state_sz] : c0v.v.data();
      const double* h_prev =
          step > 0 ? &h_all.v[static_cast<size_t>(step - 1) * state_sz] : h0v.v.data();
      for (int f = 0; f < len; ++f) {
        for (int i = 0; i < hidden; ++i) {
          const size_t si = static_cast<size_t>(f) * hidden + i;
          const double ghv = gout.v[static_cast<size_t>(step) * state_sz + si] +
                             gh_carry.v[si];
          const double gi = pre[static_cast<size_t>(f) * 4 * hidden + i];
          const double gf = pre[static_cast<size_t>(f) * 4 * hidden + hidden + i];
          const double gg = pre[static_cast<size_t>(f) * 4 * hidden + 2 * hidden + i];
          const double go = pre[static_cast<size_t>(f) * 4 * hidden + 3 * hidden + i];
          const double tc = std::tanh(c_now[si]);
          const double g_go = ghv * tc;
          double gc = ghv * go * (1.0 - tc * tc) + gc_carry.v[si];
          const double g_gf = gc * c_prev[si];
          const double g_gi = gc * gg;
          const double g_gg = gc * gi;
          gc_carry.v[si] = gc * gf;
          double* gp = &gpre.v[static_cast<size_t>(f) * 4 * hidden];
          gp[i] = g_gi * gi * (1.0 - gi);
          gp[hidden + i] = g_gf * gf * (1.0 - gf);
          gp[2 * hidden + i] = g_gg * (1.0 - gg * gg);
          gp[3 * hidden + i] = g_go * go * (1.0 - go);
        }
      }
      // gpre flows through both convolutions.
      Tensor gpre3({1, len, 4 * hidden}, gpre.v);
      if (tp.requires_grad(x.id)) {
        Tensor gx_step({1, len, cin});
        conv_backward_x(gpre3, wxv, gx_step, gx, 1);
        Tensor& gxt = tp.grad(x);
        for (size_t i = 0; i < gx_step.numel(); ++i) {
          gxt.v[static_cast<size_t>(step) * len * cin + i] += gx_step.v[i];
        }
      }
      if (tp.requires_grad(wx.id)) {
        Tensor xt({1, len, cin},
                  std::vector<double>(xv.v.begin() + static_cast<ptrdiff_t>(
                                                         static_cast<size_t>(step) * len * cin),
                                      xv.v.begin() + static_cast<ptrdiff_t>(
                                                         static_cast<size_t>(step + 1) * len * cin)));
        conv_backward_w(gpre3, xt, tp.grad(wx), gx, 1);
      }
      {
        Tensor hp({1, len, hidden}, std::vector<double>(h_prev, h_prev + state_sz));
        if (tp.requires_grad(uh.id)) conv_backward_w(gpre3, hp, tp.grad(uh), gh, 1);
        Tensor gh_prev({1, len, hidden});
        conv_backward_x(gpre3, uhv, gh_prev, gh, 1);
        for (size_t i = 0; i < state_sz; ++i) gh_carry.v[i] = gh_prev.v[i];
      }
      if (tp.requires_grad(b.id)) conv_backward_b(gpre3, tp.grad(b), 4 * hidden);
    }
    if (tp.requires_grad(h0.id)) {
      Tensor& g = tp.grad(h0);
      for (size_t i = 0; i < state_sz; ++i) g.v[i] += gh_carry.v[i];
    }
    if (tp.requires_grad(c0.id)) {
      Tensor& g = tp.grad(c0);
      for (size_t i = 0; i < state_sz; ++i) g.v[i] += gc_carry.v[i];
    }
  });
}

// --- masking / synthesis chain --------------------------------------------------

ValueRef mask_gain(Tape& t, ValueRef m) {
  const Tensor& mv = t.value(m);
  check_rank(mv, 3, "mask_gain");
  if (mv.dim(2) != 2) throw NumericError("mask_gain: expected 2 channels (Re, Im)");
  Tensor out(mv.shape);
  const size_t pairs = mv.numel() / 2;
  for (size_t i = 0; i < pairs; ++i) {
    const double mr = mv.v[2 * i];
    const double mi = mv.v[2 * i + 1];
    const double mag = std::sqrt(mr * mr + mi * mi);
    if (mag < 1e-12) continue;  // gain defined as 0 at the origin
    const double gain = std::tanh(mag) / mag;
    out.v[2 * i] = gain * mr;
    out.v[2 * i + 1] = gain * mi;
  }
  return t.push(std::move(out), {m.id}, [m](Tape& tp, int id) {
    const Tensor& g = tp.grad(id);
    const Tensor& mv = tp.value(m);
    Tensor& gm = tp.grad(m);
    const size_t pairs = g.numel() / 2;
    for (size_t i = 0; i < pairs; ++i) {
      const double mr = mv.v[2 * i];
      const double mi = mv.v[2 * i + 1];
      const double m2 = mr * mr + mi * mi;
      const double mag = std::sqrt(m2);
      double tval, u;
      if (mag < 1e-4) {
        // series of tanh(m)/m and its radial derivative near 0
        tval = 1.0 - m2 / 3.0 + 2.0 * m2 * m2 / 15.0;
        u = -2.0 / 3.0 + 8.0 * m2 / 15.0;
      } else {
        const double th = std::tanh(mag);
        const double sech2 = 1.0 - th * th;
        tval = th / mag;
        u = (sech2 * mag - th) / (m2 * mag);
      }
      const double gr = g.v[2 * i];
      const double gi = g.v[2 * i + 1];
      gm.v[2 * i] += gr * (tval + mr * mr * u) + gi * (mr * mi * u);
      gm.v[2 * i + 1] += gr * (mr * mi * u) + gi * (tval + mi * mi * u);
    }
  });
}

ValueRef complex_mul_const(Tape& t, ValueRef g, const Tensor& spectrum) {
  const Tensor& gv = t.value(g);
  if (!gv.same_shape(spectrum)) {
    throw NumericError("complex_mul_const: shape mismatch " + gv.shape_str() + " vs " +
                       spectrum.shape_str());
  }
  Tensor out(gv.shape);
  const size_t pairs = gv.numel() / 2;
  for (size_t i = 0; i < pairs; ++i) {
    const double gr = gv.v[2 * i], gi = gv.v[2 * i + 1];
    const double yr = spectrum.v[2 * i], yi = spectrum.v[2 * i + 1];
    out.v[2 * i] = gr * yr - gi * yi;
    out.v[2 * i + 1] = gr * yi + gi * yr;
  }
  auto spec = std::make_shared<Tensor>(spectrum);
  return t.push(std::move(out), {g.id}, [g, spec](Tape& tp, int id) {
    const Tensor& gout = tp.grad(id);
    Tensor& gg = tp.grad(g);
    const size_t pairs = gout.numel() / 2;
    for (size_t i = 0; i < pairs; ++i) {
      const double er = gout.v[2 * i], ei = gout.v[2 * i + 1];
      const double yr = spec->v[2 * i], yi = spec->v[2 * i + 1];
      gg.v[2 * i] += er * yr + ei * yi;
      gg.v[2 * i + 1] += -er * yi + ei * yr;
    }
  });
}

ValueRef ola_synthesize(Tape& t, ValueRef e, const dsp::FrameParams& params) {
  const Tensor& ev = t.value(e);
  check_rank(ev, 3, "ola_synthesize");
  const int bins = params.bins();
  if (ev.dim(1) != bins || ev.dim(2) != 2) {
    throw NumericError("ola_synthesize: expected [T x " + std::to_string(bins) + " x 2]");
  }
  const int T = ev.dim(0);
  const int K = params.dft_size;
  const auto window = params.sqrt_hann();
  Tensor out({static_cast<int>(params.synthesis_length(T))});

  std::vector<std::complex<double>> buf(static_cast<size_t>(K));
  for (int f = 0; f < T; ++f) {
    for (int k = 0; k < bins; ++k) {
      buf[static_cast<size_t>(k)] = {ev.at3(f, k, 0), ev.at3(f, k, 1)};
    }
    for (int k = 1; k < K / 2; ++k) {
      buf[static_cast<size_t>(K - k)] = std::conj(buf[static_cast<size_t>(k)]);
    }
    dsp::fft(buf, true);
    const size_t offset = static_cast<size_t>(f) * params.frame_shift;
    for (int n = 0; n < params.frame_len; ++n) {
      out.v[offset + static_cast<size_t>(n)] +=
          buf[static_cast<size_t>(n)].real() * window[static_cast<size_t>(n)];
    }
  }
  const auto p = params;
  return t.push(std::move(out), {e.id}, [e, p](Tape& tp, int id) {
    const Tensor& gout = tp.grad(id);
    Tensor& ge = tp.grad(e);
    const int T = ge.dim(0);
    const int K = p.dft_size;
    const int bins = p.bins();
    const auto window = p.sqrt_hann();
    // Adjoint: frame extraction, windowing, forward DFT scaled by 1/K, then
    // folding of the conjugate-symmetric extension.
    std::vector<std::complex<double>> buf(static_cast<size_t>(K));
    for (int f = 0; f < T; ++f) {
      std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
      const size_t offset = static_cast<size_t>(f) * p.frame_shift;
      for (int n = 0; n < p.frame_len; ++n) {
        buf[static_cast<size_t>(n)] =
            gout.v[offset + static_cast<size_t>(n)] * window[static_cast<size_t>(n)];
      }
      dsp::fft(buf, false);
      const double inv_k = 1.0 / static_cast<double>(K);
      for (int k = 0; k < bins; ++k) {
        std::complex<double> gk = buf[static_cast<size_t>(k)] * inv_k;
        if (k > 0 && k < K / 2) {
          gk += std::conj(buf[static_cast<size_t>(K - k)]) * inv_k;
        }
        // Bins 0 and K/2 contribute only their real parts in the forward map.
        ge.at3(f, k, 0) += gk.real();
        if (k > 0 && k < K / 2) ge.at3(f, k, 1) += gk.imag();
      }
    }
  });
}

ValueRef logmse(Tape& t, ValueRef a, const Tensor& target) {
  const Tensor& av = t.value(a);
  if (av.numel() != target.numel()) {
    throw NumericError("logmse: length mismatch " + av.shape_str() + " vs " +
                       target.shape_str());
  }
  double s = 0.0;
  for (size_t i = 0; i < av.numel(); ++i) {
    const double d = av.v[i] - target.v[i];
    s += d * d;
  }
  const double val = 10.0 * std::log10(s + kLossEpsilon);
  auto tgt = std::make_shared<Tensor>(target);
  return t.push(Tensor::scalar(val), {a.id}, [a, tgt, s](Tape& tp, int id) {
    const double g = tp.grad(id).v[0];
    Tensor& ga = tp.grad(a);
    const Tensor& av = tp.value(a);
    const double k = g * 20.0 / (std::numbers::ln10 * (s + kLossEpsilon));
    for (size_t i = 0; i < av.numel(); ++i) {
      ga.v[i] += k * (av.v[i] - tgt->v[i]);
    }
  });
}

}  // namespace aeslab::ad
