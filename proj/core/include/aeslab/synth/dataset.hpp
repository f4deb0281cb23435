#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "aeslab/common.hpp"
#include "aeslab/rng.hpp"
#include "aeslab/synth/catalog.hpp"
#include "aeslab/synth/room.hpp"
#include "aeslab/synth/scene.hpp"

namespace aeslab::synth {

// Parameter menus for the three dataset recipes. SER/SNR are drawn from a
// continuous range when `*_range` is set, otherwise from the discrete choices.
struct DatasetProfile {
  enum class Kind { kTrain, kCondition };
  Kind kind = Kind::kTrain;

  std::optional<std::array<double, 2>> ser_range;
  std::vector<double> ser_choices;
  std::optional<std::array<double, 2>> snr_range;
  std::vector<double> snr_choices;
  double noiseless_prob = 0.0;

  NonlinearityKind nl_kind = NonlinearityKind::kSef;
  std::vector<double> nl_params;  // mu (SEF) or alpha (arctan) choices

  double file_seconds = 10.0;        // train files
  double section_min_s = 8.0;        // condition files
  double section_max_s = 12.0;

  std::array<double, 2> room_x{3.0, 6.0};
  std::array<double, 2> room_y{3.0, 5.0};
  std::array<double, 2> room_z{2.2, 3.5};
  std::array<double, 2> reflection_range{0.3, 0.8};
  int rir_length = 4096;
};

DatasetProfile train_profile();
DatasetProfile dev_profile();
DatasetProfile test_profile();

// Everything needed to (re)build a bundle from its sources. Component audio
// stays unscaled here; realize() applies nonlinearity, RIR, gating, and the
// SER/SNR scaling.
struct SceneRecipe {
  TimeSignal s;  // gated nearend source
  TimeSignal n;  // noise source (non-silent even for noiseless files)
  TimeSignal x;  // gated farend source
  TimeSignal rir;
  NonlinearityModel nl;
  double ser_db = 0.0;
  bool noiseless = false;
  double snr_db = 0.0;  // ignored when noiseless
  std::vector<ConditionSection> sections;
  uint64_t seed = 0;
};

SignalBundle realize(const SceneRecipe& recipe);

struct DatasetEntry {
  SceneRecipe recipe;
  SignalBundle bundle;
  bool validation = false;
};

struct Dataset {
  std::vector<DatasetEntry> entries;

  size_t validation_count() const {
    size_t c = 0;
    for (const auto& e : entries) c += e.validation ? 1 : 0;
    return c;
  }
};

// One 10 s training bundle; all randomness derives from (master_seed, index).
DatasetEntry make_training_file(uint64_t master_seed, size_t index,
                                const Catalog& speech, const Catalog& noise,
                                const DatasetProfile& profile);

// One condition-sectioned bundle with sections in the order STFE, STNE, DT,
// each 8 to 12 s long.
DatasetEntry make_condition_file(uint64_t master_seed, size_t index,
                                 const Catalog& speech, const Catalog& noise,
                                 const DatasetProfile& profile);

// File generation derives all randomness from (master_seed, index), so the
// result is identical for any worker count.
Dataset make_dataset(uint64_t master_seed, size_t count, size_t validation_count,
                     const Catalog& speech, const Catalog& noise,
                     const DatasetProfile& profile, int workers = 1);

// Reshuffles farend/noise pairings among non-validation entries and redraws
// SER/SNR (and the noiseless flag), then rebuilds the bundles. Validation
// entries are left bit-identical.
void remix_epoch(Dataset& dataset, uint64_t epoch_seed, const DatasetProfile& profile);

// Disk layout: <dir>/file_00042_{x,s,n,d,y,rir}.wav plus manifest.jsonl with
// one record per file. Components are peak-normalized jointly (ratios and
// y = s+n+d are preserved) before the 16-bit write.
void save_dataset(const Dataset& dataset, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace aeslab::synth
