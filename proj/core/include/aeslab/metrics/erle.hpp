#pragma once

#include <vector>

#include "aeslab/common.hpp"

namespace aeslab::metrics {

// First-order IIR power smoothing with the STFE echo estimate d_hat = e - n.
struct ErleParams {
  double alpha_smooth = 0.99;
  double cap_db = 80.0;
  double settle_seconds = 0.5;  // excluded from the section mean
};

struct ErleTrace {
  double mean_db = 0.0;
  std::vector<double> trace_db;  // per sample past settling
};

// 10*log10(P_d / P_res) with both powers smoothed by alpha; capped at cap_db.
// `reference` is the echo reaching the mic, `residual` what remains of it.
ErleTrace smoothed_erle(const TimeSignal& reference, const TimeSignal& residual,
                        const ErleParams& params);

// ERLE over an STFE section: residual is e - n.
ErleTrace erle(const TimeSignal& d, const TimeSignal& e, const TimeSignal& n,
               const ErleParams& params);

// White-box component ERLE: echo d against the masked echo component.
double component_erle(const TimeSignal& d_tilde, const TimeSignal& d,
                      const ErleParams& params);

// 10*log10(sum((s_tilde-s)^2)/sum(s^2) + eps); -120 dB at perfect preservation.
double speech_preservation(const TimeSignal& s_tilde, const TimeSignal& s);

}  // namespace aeslab::metrics
