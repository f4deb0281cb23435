#include "aeslab/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "aeslab/dsp/fft.hpp"

namespace aeslab::synth {

std::string condition_name(Condition c) {
  switch (c) {
    case Condition::kDT:
      return "DT";
    case Condition::kSTFE:
      return "STFE";
    case Condition::kSTNE:
      return "STNE";
  }
  return "?";
}

Condition condition_from_name(const std::string& name) {
  if (name == "DT") return Condition::kDT;
  if (name == "STFE") return Condition::kSTFE;
  if (name == "STNE") return Condition::kSTNE;
  throw ConfigError("unknown condition: " + name);
}

void SignalBundle::check_invariants() const {
  const size_t len = y.size();
  if (x.size() != len || s.size() != len || n.size() != len || d.size() != len) {
    throw DataError("SignalBundle: component length mismatch");
  }
  for (size_t i = 0; i < len; ++i) {
    if (y[i] != s[i] + n[i] + d[i]) {
      throw DataError("SignalBundle: y != s+n+d at sample " + std::to_string(i));
    }
  }
}

TimeSignal convolve_truncated(const TimeSignal& x, const TimeSignal& h) {
  if (x.empty() || h.empty()) return TimeSignal(x.size(), 0.0);
  // Overlap-add with blocks sized to the kernel.
  size_t fft_size = 1;
  while (fft_size < 2 * h.size()) fft_size <<= 1;
  fft_size = std::max<size_t>(fft_size, 256);
  const size_t block = fft_size - h.size() + 1;

  std::vector<std::complex<double>> hf(fft_size, 0.0);
  for (size_t i = 0; i < h.size(); ++i) hf[i] = h[i];
  dsp::fft(hf, false);

  TimeSignal out(x.size(), 0.0);
  std::vector<std::complex<double>> buf(fft_size);
  for (size_t start = 0; start < x.size(); start += block) {
    const size_t n = std::min(block, x.size() - start);
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (size_t i = 0; i < n; ++i) buf[i] = x[start + i];
    dsp::fft(buf, false);
    for (size_t i = 0; i < fft_size; ++i) buf[i] *= hf[i];
    dsp::fft(buf, true);
    const size_t limit = std::min(out.size() - start, fft_size);
    for (size_t i = 0; i < limit; ++i) out[start + i] += buf[i].real();
  }
  return out;
}

SignalBundle mix_scene(const TimeSignal& s, const TimeSignal& n, const TimeSignal& x,
                       const NonlinearityModel& nl, const TimeSignal& h,
                       double ser_db, std::optional<double> snr_db) {
  const size_t len = std::min({s.size(), n.size(), x.size()});
  if (len == 0) throw DataError("mix_scene: empty input signals");

  SignalBundle b;
  b.s.assign(s.begin(), s.begin() + static_cast<ptrdiff_t>(len));
  b.n.assign(n.begin(), n.begin() + static_cast<ptrdiff_t>(len));
  b.x.assign(x.begin(), x.begin() + static_cast<ptrdiff_t>(len));
  b.nonlinearity = nl;
  b.ser_db = ser_db;
  b.snr_db = snr_db;

  b.d = convolve_truncated(apply_nonlinearity(b.x, nl), h);

  const double p_s = mean_power(b.s);
  if (p_s <= 0.0) {
    throw DataError("mix_scene: silent nearend speech, SER/SNR scaling undefined");
  }

  const double p_d = mean_power(b.d);
  if (p_d <= 0.0) {
    throw DataError("mix_scene: silent echo path, SER scaling undefined");
  }
  const double d_gain = std::sqrt(p_s / (p_d * std::pow(10.0, ser_db / 10.0)));
  for (double& v : b.d) v *= d_gain;

  if (snr_db.has_value()) {
    const double p_n = mean_power(b.n);
    if (p_n <= 0.0) {
      throw DataError("mix_scene: silent noise with finite SNR requested");
    }
    const double n_gain = std::sqrt(p_s / (p_n * std::pow(10.0, *snr_db / 10.0)));
    for (double& v : b.n) v *= n_gain;
  } else {
    std::fill(b.n.begin(), b.n.end(), 0.0);
  }

  b.y.resize(len);
  for (size_t i = 0; i < len; ++i) b.y[i] = b.s[i] + b.n[i] + b.d[i];
  return b;
}

}  // namespace aeslab::synth
