#include "aeslab/metrics/erle.hpp"

#include <cmath>

namespace aeslab::metrics {

ErleTrace smoothed_erle(const TimeSignal& reference, const TimeSignal& residual,
                        const ErleParams& params) {
  if (reference.size() != residual.size()) {
    throw DataError("smoothed_erle: length mismatch");
  }
  const size_t settle = static_cast<size_t>(params.settle_seconds * kSampleRate);
  if (reference.size() <= settle) {
    throw DataError("smoothed_erle: section shorter than the smoother settling time");
  }
  const double a = params.alpha_smooth;
  double p_ref = 0.0, p_res = 0.0;
  ErleTrace out;
  out.trace_db.reserve(reference.size() - settle);
  double acc = 0.0;
  for (size_t i = 0; i < reference.size(); ++i) {
    p_ref = a * p_ref + (1.0 - a) * reference[i] * reference[i];
    p_res = a * p_res + (1.0 - a) * residual[i] * residual[i];
    if (i < settle) continue;
    double v;
    if (p_res <= 1e-30) {
      v = params.cap_db;
    } else {
      v = std::min(params.cap_db, 10.0 * std::log10(std::max(p_ref, 1e-30) / p_res));
    }
    out.trace_db.push_back(v);
    acc += v;
  }
  out.mean_db = acc / static_cast<double>(out.trace_db.size());
  return out;
}

ErleTrace erle(const TimeSignal& d, const TimeSignal& e, const TimeSignal& n,
               const ErleParams& params) {
  if (d.size() != e.size() || d.size() != n.size()) {
    throw DataError("erle: length mismatch");
  }
  TimeSignal residual(d.size());
  for (size_t i = 0; i < d.size(); ++i) residual[i] = e[i] - n[i];
  return smoothed_erle(d, residual, params);
}

double component_erle(const TimeSignal& d_tilde, const TimeSignal& d,
                      const ErleParams& params) {
  return smoothed_erle(d, d_tilde, params).mean_db;
}

double speech_preservation(const TimeSignal& s_tilde, const TimeSignal& s) {
  if (s_tilde.size() != s.size()) {
    throw DataError("speech_preservation: length mismatch");
  }
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    const double diff = s_tilde[i] - s[i];
    num += diff * diff;
    den += s[i] * s[i];
  }
  if (den <= 0.0) throw DataError("speech_preservation: silent reference");
  return 10.0 * std::log10(num / den + 1e-12);
}

}  // namespace aeslab::metrics
