#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aeslab/model/crn.hpp"

namespace aeslab::model {

// Accounting conventions (stated because published conventions vary):
//   - one multiply-accumulate counts as one FLOP
//   - each nonlinearity or elementwise gate op counts as one FLOP, reported in
//     separate "act" rows so convolution rows stay pure MAC counts
//   - frame rate 16000/212 frames per second
struct ComplexityRow {
  std::string name;
  std::string kind;  // conv | deconv | depthwise | rnn | act
  int64_t params = 0;
  int64_t macs_per_frame = 0;
  int64_t act_per_frame = 0;
};

struct ComplexityReport {
  std::string model_name;
  int64_t parameter_count = 0;
  int64_t flops_per_frame = 0;
  int64_t flops_per_second = 0;
  std::vector<ComplexityRow> rows;
};

constexpr double kFrameRate = 16000.0 / 212.0;

int64_t count_params(const CrnModel& model);
ComplexityReport count_flops(const CrnModel& model, double frame_rate = kFrameRate);

// Published reference constants used for comparison rows only.
struct ReferenceEntry {
  std::string name;
  double params_millions;
  double flops_millions;
};
std::vector<ReferenceEntry> reference_models();

// Ladder report over all six stages plus reference rows.
std::string complexity_table(const std::vector<ComplexityReport>& reports);
std::string complexity_csv(const std::vector<ComplexityReport>& reports);

}  // namespace aeslab::model
