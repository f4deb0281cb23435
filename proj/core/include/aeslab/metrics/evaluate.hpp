#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aeslab/metrics/erle.hpp"
#include "aeslab/model/pipeline.hpp"
#include "aeslab/synth/dataset.hpp"

namespace aeslab::metrics {

// Forced-gain baselines: identity reproduces the unprocessed signal, mute
// removes everything.
enum class EvalSystem { kModel, kIdentityMask, kMute };

// One row per condition per file. PESQ/AECMOS columns are reserved so external
// tool output can be merged; this tool never fills them.
struct EvalRow {
  int file_index = -1;  // -1 marks an aggregate row
  synth::Condition condition = synth::Condition::kDT;
  std::optional<double> component_erle_db;     // DT: white-box component ERLE
  std::optional<double> speech_distortion_db;  // DT
  std::optional<double> erle_db;               // STFE
  std::optional<double> deviation_db;          // STNE: output vs input
  std::optional<double> pesq;                  // reserved
  std::optional<double> aecmos;                // reserved
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalRow> means;  // one per condition present
  std::vector<std::string> errors;
};

struct EvalOptions {
  EvalSystem system = EvalSystem::kModel;
  bool eval_float32 = false;
  ErleParams erle;
  dsp::FrameParams frame;
  int workers = 1;
};

// Runs the masking chain per file with recurrent state carried across the
// file's sections, then scores each section with its condition's metrics.
// `model` may be null for the forced-gain systems. Enhanced signals are
// returned when `enhanced` is non-null.
EvalReport evaluate(const model::CrnModel* model, const synth::Dataset& dataset,
                    const EvalOptions& options,
                    std::vector<TimeSignal>* enhanced = nullptr);

std::string report_csv(const EvalReport& report);
std::string report_text(const EvalReport& report);

}  // namespace aeslab::metrics
