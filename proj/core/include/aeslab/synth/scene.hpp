#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aeslab/common.hpp"
#include "aeslab/synth/nonlinearity.hpp"

namespace aeslab::synth {

enum class Condition { kDT, kSTFE, kSTNE };

std::string condition_name(Condition c);
Condition condition_from_name(const std::string& name);

struct ConditionSection {
  Condition condition = Condition::kDT;
  size_t start = 0;  // inclusive, samples
  size_t end = 0;    // exclusive
};

// Aligned component signals of one echo scene. y = s + n + d sample-exact.
struct SignalBundle {
  TimeSignal x;  // farend reference
  TimeSignal s;  // nearend speech
  TimeSignal n;  // noise
  TimeSignal d;  // echo at the mic
  TimeSignal y;  // mic mix
  double ser_db = 0.0;
  std::optional<double> snr_db;  // empty when noiseless
  NonlinearityModel nonlinearity;
  std::vector<ConditionSection> sections;
  uint64_t seed = 0;

  void check_invariants() const;
};

// Linear convolution truncated to x.size() (FFT overlap-add under the hood).
TimeSignal convolve_truncated(const TimeSignal& x, const TimeSignal& h);

// Builds the scene: d = nl(x) * h scaled to the requested SER against s,
// n scaled to the requested SNR, y = s + n + d. Power ratios are measured
// over the full file. snr_db empty means noiseless (n forced to zero).
SignalBundle mix_scene(const TimeSignal& s, const TimeSignal& n, const TimeSignal& x,
                       const NonlinearityModel& nl, const TimeSignal& h,
                       double ser_db, std::optional<double> snr_db);

}  // namespace aeslab::synth
