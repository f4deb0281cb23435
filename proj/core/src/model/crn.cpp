#include "aeslab/model/crn.hpp"

#include <cmath>

#include "aeslab/autodiff/kernels.hpp"
#include "aeslab/rng.hpp"

namespace aeslab::model {

using ad::Tensor;
using ad::ValueRef;

NetPlan build_plan(const CrnConfig& config) {
  config.validate();
  NetPlan p;
  p.config = config;
  const int F = config.kernel_count;
  const int N = config.kernel_size;

  int len = config.feature_len;
  int cin = 4;
  for (int i = 0; i < 6; ++i) {
    const int stride = config.encoder_strides[static_cast<size_t>(i)];
    const int cout = i == 5 ? config.bottleneck_in_channels : F;
    ConvPlan c;
    c.name = "enc" + std::to_string(i + 1);
    c.in_len = len;
    c.out_len = (len + stride - 1) / stride;
    c.taps = N;
    c.cin = cin;
    c.cout = cout;
    c.stride = stride;
    p.encoder.push_back(c);
    len = c.out_len;
    cin = cout;
  }
  // Skip sources: the encoder outputs at each upsampled resolution.
  p.skip_sources = {0, 2, 4};  // enc1 (264), enc3 (132), enc5 (66)
  for (int src : p.skip_sources) {
    const ConvPlan& e = p.encoder[static_cast<size_t>(src)];
    DepthwisePlan dw;
    dw.name = "skip" + std::to_string(e.out_len);
    dw.len = e.out_len;
    dw.taps = N;
    dw.channels = e.cout;
    p.skips.push_back(dw);
  }

  const int bn_len = config.bottleneck_len();
  int crb;
  if (config.bottleneck == Bottleneck::kConvLstm2) {
    p.lstm_layers.push_back({"lstm1", bn_len, config.bottleneck_in_channels, F, N});
    p.lstm_layers.push_back({"lstm2", bn_len, F, F, N});
    crb = F;
  } else {
    ConvPlan entry;
    entry.name = "bn_in";
    entry.in_len = bn_len;
    entry.out_len = bn_len;
    entry.taps = N;
    entry.cin = config.bottleneck_in_channels;
    entry.cout = F;
    p.bn_in = entry;

    const int width = config.bottleneck_width();
    GruLayerPlan g1{"gru1", config.groups_layer1, width / config.groups_layer1,
                    width / config.groups_layer1};
    p.gru_layers.push_back(g1);
    if (config.bottleneck == Bottleneck::kGroupedGru2) {
      GruLayerPlan g2{"gru2", config.groups_layer2, width / config.groups_layer2,
                      width / config.groups_layer2};
      p.gru_layers.push_back(g2);
    }

    ConvPlan restore;
    restore.name = "bn_out";
    restore.in_len = bn_len;
    restore.out_len = bn_len;
    restore.taps = N;
    restore.cin = F;
    restore.cout = config.restore_channels();
    p.bn_out = restore;
    crb = config.restore_channels();
  }

  // Decoder mirrors the strided structure: three stride-2 deconvolutions
  // interleaved with convolutions, then the linear output layer.
  struct DecSpec {
    bool transposed;
    int in_len;
  };
  const DecSpec dec[5] = {{true, bn_len},     {false, 2 * bn_len}, {true, 2 * bn_len},
                          {false, 4 * bn_len}, {true, 4 * bn_len}};
  int dcin = crb;
  for (int i = 0; i < 5; ++i) {
    ConvPlan c;
    c.name = "dec" + std::to_string(i + 1);
    c.in_len = dec[i].in_len;
    c.out_len = dec[i].transposed ? 2 * c.in_len : c.in_len;
    c.taps = N;
    c.cin = dcin;
    c.cout = F;
    c.stride = dec[i].transposed ? 2 : 1;
    c.transposed = dec[i].transposed;
    p.decoder.push_back(c);
    dcin = F;
  }
  ConvPlan out;
  out.name = "out";
  out.in_len = config.feature_len;
  out.out_len = config.feature_len;
  out.taps = N;
  out.cin = F;
  out.cout = 2;
  out.activated = false;
  p.decoder.push_back(out);
  return p;
}

namespace {

Tensor glorot(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.v) v = rng.uniform(-limit, limit);
  return t;
}

// Orthogonal square matrix: modified Gram-Schmidt on the rows of a Gaussian
// draw (rows of an orthogonal matrix are orthonormal, and row access is
// contiguous).
Tensor orthogonal(int n, Rng& rng) {
  Tensor t({n, n});
  for (double& v : t.v) v = rng.normal();
  for (int i = 0; i < n; ++i) {
    double* ri = &t.v[static_cast<size_t>(i) * n];
    for (int k = 0; k < i; ++k) {
      const double* rk = &t.v[static_cast<size_t>(k) * n];
      double dot = 0.0;
      for (int j = 0; j < n; ++j) dot += ri[j] * rk[j];
      for (int j = 0; j < n; ++j) ri[j] -= dot * rk[j];
    }
    double norm = 0.0;
    for (int j = 0; j < n; ++j) norm += ri[j] * ri[j];
    norm = std::sqrt(std::max(norm, 1e-30));
    for (int j = 0; j < n; ++j) ri[j] /= norm;
  }
  return t;
}

void init_conv(std::map<std::string, Tensor>& params, const ConvPlan& c, uint64_t seed) {
  Rng rng(hash_combine(seed, c.name));
  params[c.name + ".w"] =
      glorot({c.taps, c.cin, c.cout}, c.taps * c.cin, c.taps * c.cout, rng);
  params[c.name + ".b"] = Tensor({c.cout});
}

}  // namespace

CrnModel CrnModel::build(const CrnConfig& config, uint64_t seed) {
  CrnModel m;
  m.plan_ = build_plan(config);
  const NetPlan& p = m.plan_;
  auto& params = m.params_;

  for (const auto& c : p.encoder) init_conv(params, c, seed);
  for (const auto& c : p.decoder) init_conv(params, c, seed);
  if (p.bn_in) init_conv(params, *p.bn_in, seed);
  if (p.bn_out) init_conv(params, *p.bn_out, seed);
  for (const auto& dw : p.skips) {
    Rng rng(hash_combine(seed, dw.name));
    params[dw.name + ".w"] = glorot({dw.taps, dw.channels}, dw.taps, dw.taps, rng);
    params[dw.name + ".b"] = Tensor({dw.channels});
  }
  for (const auto& g : p.gru_layers) {
    for (int k = 0; k < g.groups; ++k) {
      char suffix[16];
      std::snprintf(suffix, sizeof(suffix), ".g%02d", k);
      const std::string base = g.prefix + suffix;
      Rng rng(hash_combine(seed, base));
      Tensor w({3 * g.hidden, g.chunk});
      for (int gate = 0; gate < 3; ++gate) {
        Tensor wg = glorot({g.hidden, g.chunk}, g.chunk, g.hidden, rng);
        std::copy(wg.v.begin(), wg.v.end(),
                  w.v.begin() + static_cast<ptrdiff_t>(gate) * g.hidden * g.chunk);
      }
      Tensor u({3 * g.hidden, g.hidden});
      for (int gate = 0; gate < 3; ++gate) {
        Tensor ug = orthogonal(g.hidden, rng);
        std::copy(ug.v.begin(), ug.v.end(),
                  u.v.begin() + static_cast<ptrdiff_t>(gate) * g.hidden * g.hidden);
      }
      params[base + ".w"] = std::move(w);
      params[base + ".u"] = std::move(u);
      params[base + ".b"] = Tensor({3 * g.hidden});
    }
  }
  for (const auto& l : p.lstm_layers) {
    Rng rng(hash_combine(seed, l.name));
    params[l.name + ".wx"] =
        glorot({l.taps, l.cin, 4 * l.hidden}, l.taps * l.cin, l.taps * 4 * l.hidden, rng);
    params[l.name + ".uh"] = glorot({l.taps, l.hidden, 4 * l.hidden}, l.taps * l.hidden,
                                    l.taps * 4 * l.hidden, rng);
    Tensor b({4 * l.hidden});
    // Forget gate bias starts at 1.
    for (int i = 0; i < l.hidden; ++i) b.v[static_cast<size_t>(l.hidden + i)] = 1.0;
    params[l.name + ".b"] = std::move(b);
  }
  return m;
}

void CrnModel::set_params(const std::map<std::string, Tensor>& p) {
  for (auto& [name, t] : params_) {
    const auto it = p.find(name);
    if (it == p.end()) throw DataError("set_params: missing parameter " + name);
    if (!it->second.same_shape(t)) {
      throw DataError("set_params: shape mismatch for " + name + ": " +
                      it->second.shape_str() + " vs " + t.shape_str());
    }
    t = it->second;
  }
}

CrnModel::TapeBindings CrnModel::bind(ad::Tape& tape) const {
  TapeBindings b;
  for (const auto& [name, t] : params_) b.p[name] = tape.param(t, name);
  return b;
}

namespace {

// Channel-major flatten permutation: output column c*len+f reads row-major
// input column f*ch+c, so each GRU chunk is a contiguous set of feature maps.
std::vector<int> channel_major_perm(int len, int ch) {
  std::vector<int> perm(static_cast<size_t>(len) * ch);
  for (int c = 0; c < ch; ++c) {
    for (int f = 0; f < len; ++f) {
      perm[static_cast<size_t>(c) * len + f] = f * ch + c;
    }
  }
  return perm;
}

std::vector<int> inverse_perm(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[static_cast<size_t>(perm[i])] = static_cast<int>(i);
  return inv;
}

// Representation rearrangement between grouped layers: interleave the chunks
// so every downstream group sees features from all upstream groups.
std::vector<int> interleave_perm(int width, int groups) {
  const int chunk = width / groups;
  std::vector<int> perm(static_cast<size_t>(width));
  for (int i = 0; i < chunk; ++i) {
    for (int g = 0; g < groups; ++g) {
      perm[static_cast<size_t>(i) * groups + g] = g * chunk + i;
    }
  }
  return perm;
}

}  // namespace

ValueRef CrnModel::forward_tape(ad::Tape& t, const TapeBindings& b,
                                const Tensor& features) const {
  const NetPlan& p = plan_;
  const int T = features.dim(0);
  auto P = [&](const std::string& name) {
    const auto it = b.p.find(name);
    if (it == b.p.end()) throw NumericError("forward_tape: unbound parameter " + name);
    return it->second;
  };

  ValueRef h = t.constant(features);
  std::vector<ValueRef> enc_out;
  for (const auto& c : p.encoder) {
    h = ad::conv_freq(t, h, P(c.name + ".w"), P(c.name + ".b"), c.stride);
    if (c.activated) h = ad::elu(t, h);
    enc_out.push_back(h);
  }

  std::vector<ValueRef> skip_out;
  for (size_t i = 0; i < p.skips.size(); ++i) {
    const auto& dw = p.skips[i];
    skip_out.push_back(ad::depthwise_conv(t, enc_out[static_cast<size_t>(p.skip_sources[i])],
                                          P(dw.name + ".w"), P(dw.name + ".b")));
  }

  const int bn_len = p.config.bottleneck_len();
  const int F = p.config.kernel_count;
  if (!p.lstm_layers.empty()) {
    for (const auto& l : p.lstm_layers) {
      ValueRef h0 = t.constant(Tensor({l.len, l.hidden}));
      ValueRef c0 = t.constant(Tensor({l.len, l.hidden}));
      h = ad::convlstm_sequence(t, h, P(l.name + ".wx"), P(l.name + ".uh"),
                                P(l.name + ".b"), h0, c0, l.taps);
    }
  } else {
    const auto& entry = *p.bn_in;
    h = ad::elu(t, ad::conv_freq(t, h, P(entry.name + ".w"), P(entry.name + ".b"), 1));
    const int width = p.config.bottleneck_width();
    const auto cm = channel_major_perm(bn_len, F);
    ValueRef flat = ad::permute_cols(t, ad::reshape(t, h, {T, width}), cm);
    for (size_t li = 0; li < p.gru_layers.size(); ++li) {
      const auto& g = p.gru_layers[li];
      if (li > 0) flat = ad::permute_cols(t, flat, interleave_perm(width, p.gru_layers[li - 1].groups));
      std::vector<ValueRef> outs;
      for (int k = 0; k < g.groups; ++k) {
        char suffix[16];
        std::snprintf(suffix, sizeof(suffix), ".g%02d", k);
        const std::string base = g.prefix + suffix;
        ValueRef chunk = ad::gather_cols(t, flat, k * g.chunk, g.chunk);
        ValueRef h0 = t.constant(Tensor({g.hidden}));
        outs.push_back(ad::gru_sequence(t, chunk, P(base + ".w"), P(base + ".u"),
                                        P(base + ".b"), h0));
      }
      flat = ad::concat_cols(t, outs);
    }
    h = ad::reshape(t, ad::permute_cols(t, flat, inverse_perm(cm)), {T, bn_len, F});
    const auto& restore = *p.bn_out;
    h = ad::elu(t, ad::conv_freq(t, h, P(restore.name + ".w"), P(restore.name + ".b"), 1));
  }

  // Decoder with skip additions at each restored resolution.
  int skip_idx = static_cast<int>(p.skips.size()) - 1;  // 66 first
  for (const auto& c : p.decoder) {
    if (c.transposed) {
      h = ad::deconv_freq(t, h, P(c.name + ".w"), P(c.name + ".b"));
    } else {
      h = ad::conv_freq(t, h, P(c.name + ".w"), P(c.name + ".b"), 1);
    }
    if (c.activated) h = ad::elu(t, h);
    if (c.transposed && skip_idx >= 0) {
      h = ad::add(t, h, skip_out[static_cast<size_t>(skip_idx)]);
      --skip_idx;
    }
  }
  return h;
}

StreamState CrnModel::make_state() const {
  StreamState s;
  for (const auto& g : plan_.gru_layers) {
    for (int k = 0; k < g.groups; ++k) {
      s.gru.emplace_back(static_cast<size_t>(g.hidden), 0.0);
    }
  }
  for (const auto& l : plan_.lstm_layers) {
    s.lstm_h.emplace_back(static_cast<size_t>(l.len) * l.hidden, 0.0);
    s.lstm_c.emplace_back(static_cast<size_t>(l.len) * l.hidden, 0.0);
  }
  return s;
}

template <typename Real>
ad::Tensor CrnModel::forward_inference(const Tensor& features, StreamState& state) const {
  const NetPlan& p = plan_;
  const int T = features.dim(0);
  const int L = p.config.feature_len;
  const int F = p.config.kernel_count;
  const int bn_len = p.config.bottleneck_len();

  // Cast parameters once per call.
  std::map<std::string, std::vector<Real>> w;
  for (const auto& [name, tensor] : params_) {
    std::vector<Real> cast(tensor.v.size());
    for (size_t i = 0; i < cast.size(); ++i) cast[i] = static_cast<Real>(tensor.v[i]);
    w.emplace(name, std::move(cast));
  }
  auto W = [&](const std::string& n) -> const std::vector<Real>& { return w.at(n); };

  // Cast recurrent state in, cast back out at the end.
  std::vector<std::vector<Real>> gru_state;
  for (auto& g : state.gru) gru_state.emplace_back(g.begin(), g.end());
  std::vector<std::vector<Real>> lstm_h, lstm_c;
  for (auto& v : state.lstm_h) lstm_h.emplace_back(v.begin(), v.end());
  for (auto& v : state.lstm_c) lstm_c.emplace_back(v.begin(), v.end());

  Tensor mask({T, L, 2});

  // Per-layer frame buffers.
  std::vector<std::vector<Real>> enc_buf(p.encoder.size());
  for (size_t i = 0; i < p.encoder.size(); ++i) {
    enc_buf[i].resize(static_cast<size_t>(p.encoder[i].out_len) * p.encoder[i].cout);
  }
  std::vector<std::vector<Real>> skip_buf(p.skips.size());
  for (size_t i = 0; i < p.skips.size(); ++i) {
    skip_buf[i].resize(static_cast<size_t>(p.skips[i].len) * p.skips[i].channels);
  }
  std::vector<Real> in_frame(static_cast<size_t>(L) * 4);
  std::vector<Real> bn_a(static_cast<size_t>(bn_len) * std::max(F, p.config.bottleneck_in_channels));
  std::vector<Real> flat(static_cast<size_t>(p.config.bottleneck_width()));
  std::vector<Real> flat2(flat.size());
  const int gru_scratch = p.gru_layers.empty()
                              ? 1
                              : 4 * p.gru_layers[0].hidden +
                                    (p.gru_layers.size() > 1 ? 4 * p.gru_layers[1].hidden : 0);
  std::vector<Real> scratch(static_cast<size_t>(std::max(gru_scratch, 1)));
  std::vector<Real> lstm_pre, lstm_scratch, lstm_out;
  if (!p.lstm_layers.empty()) {
    size_t mx = 0;
    for (const auto& l : p.lstm_layers) {
      mx = std::max(mx, static_cast<size_t>(l.len) * 4 * l.hidden);
    }
    lstm_pre.resize(mx);
    lstm_scratch.resize(mx);
    lstm_out.resize(static_cast<size_t>(bn_len) * F);
  }
  std::vector<std::vector<Real>> dec_buf(p.decoder.size());
  for (size_t i = 0; i < p.decoder.size(); ++i) {
    dec_buf[i].resize(static_cast<size_t>(p.decoder[i].out_len) * p.decoder[i].cout);
  }

  for (int f = 0; f < T; ++f) {
    for (size_t i = 0; i < in_frame.size(); ++i) {
      in_frame[i] = static_cast<Real>(features.v[static_cast<size_t>(f) * L * 4 + i]);
    }
    // Encoder.
    const Real* cur = in_frame.data();
    for (size_t i = 0; i < p.encoder.size(); ++i) {
      const auto& c = p.encoder[i];
      const auto g = ad::kernels::conv_geom(c.in_len, c.taps, c.cin, c.cout, c.stride);
      ad::kernels::conv_frame(cur, W(c.name + ".w").data(), W(c.name + ".b").data(),
                              enc_buf[i].data(), g);
      if (c.activated) {
        for (Real& v : enc_buf[i]) v = ad::kernels::elu(v);
      }
      cur = enc_buf[i].data();
    }
    // Skips.
    for (size_t i = 0; i < p.skips.size(); ++i) {
      const auto& dw = p.skips[i];
      ad::kernels::depthwise_frame(enc_buf[static_cast<size_t>(p.skip_sources[i])].data(),
                                   W(dw.name + ".w").data(), W(dw.name + ".b").data(),
                                   skip_buf[i].data(), dw.len, dw.taps, dw.channels);
    }

    // Bottleneck.
    const Real* bno = nullptr;
    if (!p.lstm_layers.empty()) {
      const Real* lin = cur;
      for (size_t li = 0; li < p.lstm_layers.size(); ++li) {
        const auto& l = p.lstm_layers[li];
        std::vector<Real>& hh = lstm_h[li];
        std::vector<Real>& cc = lstm_c[li];
        std::vector<Real> h_new(hh.size()), c_new(cc.size());
        ad::kernels::convlstm_step(lin, hh.data(), cc.data(), W(l.name + ".wx").data(),
                                   W(l.name + ".uh").data(), W(l.name + ".b").data(),
                                   l.len, l.cin, l.hidden, l.taps, lstm_pre.data(),
                                   lstm_scratch.data(), h_new.data(), c_new.data());
        hh = std::move(h_new);
        cc = std::move(c_new);
        if (li + 1 == p.lstm_layers.size()) {
          std::copy(hh.begin(), hh.end(), lstm_out.begin());
          bno = lstm_out.data();
        } else {
          lin = hh.data();
        }
      }
    } else {
      const auto& entry = *p.bn_in;
      const auto ge = ad::kernels::conv_geom(entry.in_len, entry.taps, entry.cin,
                                             entry.cout, 1);
      ad::kernels::conv_frame(cur, W(entry.name + ".w").data(),
                              W(entry.name + ".b").data(), bn_a.data(), ge);
      for (size_t i = 0; i < static_cast<size_t>(bn_len) * F; ++i) {
        bn_a[i] = ad::kernels::elu(bn_a[i]);
      }
      // channel-major flatten
      for (int c = 0; c < F; ++c) {
        for (int q = 0; q < bn_len; ++q) {
          flat[static_cast<size_t>(c) * bn_len + q] =
              bn_a[static_cast<size_t>(q) * F + c];
        }
      }
      int state_base = 0;
      for (size_t li = 0; li < p.gru_layers.size(); ++li) {
        const auto& g = p.gru_layers[li];
        if (li > 0) {
          const auto perm = interleave_perm(p.config.bottleneck_width(),
                                            p.gru_layers[li - 1].groups);
          for (size_t j = 0; j < flat.size(); ++j) flat2[j] = flat[static_cast<size_t>(perm[j])];
          flat.swap(flat2);
        }
        for (int k = 0; k < g.groups; ++k) {
          std::vector<Real>& hvec = gru_state[static_cast<size_t>(state_base + k)];
          Real* z = scratch.data();
          Real* r = z + g.hidden;
          Real* c = r + g.hidden;
          Real* uch = c + g.hidden;
          std::vector<Real> h_new(static_cast<size_t>(g.hidden));
          char suffix[16];
          std::snprintf(suffix, sizeof(suffix), ".g%02d", k);
          const std::string base = g.prefix + suffix;
          ad::kernels::gru_step(flat.data() + static_cast<size_t>(k) * g.chunk, hvec.data(),
                                W(base + ".w").data(), W(base + ".u").data(),
                                W(base + ".b").data(), g.chunk, g.hidden, z, r, c, uch,
                                h_new.data());
          std::copy(h_new.begin(), h_new.end(),
                    flat2.begin() + static_cast<ptrdiff_t>(k) * g.hidden);
          hvec = std::move(h_new);
        }
        flat.swap(flat2);
        state_base += g.groups;
      }
      // back to [len x F]
      for (int c = 0; c < F; ++c) {
        for (int q = 0; q < bn_len; ++q) {
          bn_a[static_cast<size_t>(q) * F + c] =
              flat[static_cast<size_t>(c) * bn_len + q];
        }
      }
      const auto& restore = *p.bn_out;
      const auto gr = ad::kernels::conv_geom(restore.in_len, restore.taps, restore.cin,
                                             restore.cout, 1);
      std::vector<Real> restored(static_cast<size_t>(bn_len) * restore.cout);
      ad::kernels::conv_frame(bn_a.data(), W(restore.name + ".w").data(),
                              W(restore.name + ".b").data(), restored.data(), gr);
      for (Real& v : restored) v = ad::kernels::elu(v);
      lstm_out = std::move(restored);
      bno = lstm_out.data();
    }

    // Decoder.
    const Real* dcur = bno;
    int skip_idx = static_cast<int>(p.skips.size()) - 1;
    for (size_t i = 0; i < p.decoder.size(); ++i) {
      const auto& c = p.decoder[i];
      if (c.transposed) {
        const auto g = ad::kernels::deconv_geom(c.in_len, c.taps, c.cin, c.cout);
        ad::kernels::deconv_frame(dcur, W(c.name + ".w").data(), W(c.name + ".b").data(),
                                  dec_buf[i].data(), g);
      } else {
        const auto g = ad::kernels::conv_geom(c.in_len, c.taps, c.cin, c.cout, 1);
        ad::kernels::conv_frame(dcur, W(c.name + ".w").data(), W(c.name + ".b").data(),
                                dec_buf[i].data(), g);
      }
      if (c.activated) {
        for (Real& v : dec_buf[i]) v = ad::kernels::elu(v);
      }
      if (c.transposed && skip_idx >= 0) {
        const auto& sb = skip_buf[static_cast<size_t>(skip_idx)];
        for (size_t j = 0; j < sb.size(); ++j) dec_buf[i][j] += sb[j];
        --skip_idx;
      }
      dcur = dec_buf[i].data();
    }
    for (int k = 0; k < L; ++k) {
      mask.v[(static_cast<size_t>(f) * L + k) * 2] =
          static_cast<double>(dcur[static_cast<size_t>(k) * 2]);
      mask.v[(static_cast<size_t>(f) * L + k) * 2 + 1] =
          static_cast<double>(dcur[static_cast<size_t>(k) * 2 + 1]);
    }
  }

  // Persist recurrent state.
  for (size_t i = 0; i < gru_state.size(); ++i) {
    state.gru[i].assign(gru_state[i].begin(), gru_state[i].end());
  }
  for (size_t i = 0; i < lstm_h.size(); ++i) {
    state.lstm_h[i].assign(lstm_h[i].begin(), lstm_h[i].end());
    state.lstm_c[i].assign(lstm_c[i].begin(), lstm_c[i].end());
  }
  return mask;
}

template ad::Tensor CrnModel::forward_inference<double>(const Tensor&, StreamState&) const;
template ad::Tensor CrnModel::forward_inference<float>(const Tensor&, StreamState&) const;

}  // namespace aeslab::model
