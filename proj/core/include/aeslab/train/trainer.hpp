#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "aeslab/autodiff/adam.hpp"
#include "aeslab/model/crn.hpp"
#include "aeslab/synth/dataset.hpp"
#include "aeslab/train/loss.hpp"
#include "aeslab/train/sampler.hpp"

namespace aeslab::train {

struct TrainSchedule {
  double initial_lr = 1e-4;
  double lr_floor = 1e-5;
  int max_epochs = 100;
  int halve_after_stagnant = 4;   // LR halves after this many epochs w/o improvement
  int stop_after_stagnant = 10;
  int batch_size = 16;
  int bptt_frames = 200;
  int steps_per_epoch = 0;  // 0: derived from the dataset size

  static TrainSchedule standard() { return {}; }
  static TrainSchedule finetune() {
    TrainSchedule s;
    s.initial_lr = 2.5e-5;
    s.lr_floor = 2.5e-6;
    s.max_epochs = 30;
    return s;
  }
  void validate() const {
    if (lr_floor >= initial_lr) throw ConfigError("TrainSchedule: lr floor >= initial lr");
    if (batch_size <= 0 || bptt_frames <= 0) throw ConfigError("TrainSchedule: bad sizes");
  }
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

// Validation-driven learning-rate policy: halve after `halve_after_stagnant`
// consecutive epochs without a strictly better validation loss; stop when the
// LR falls below the floor, stagnation reaches the stop limit, or the epoch
// budget runs out.
class LrController {
 public:
  LrController(const TrainSchedule& s)
      : lr_(s.initial_lr),
        floor_(s.lr_floor),
        halve_every_(s.halve_after_stagnant),
        stop_stagnant_(s.stop_after_stagnant) {}

  // Returns a stop reason ("lr_floor" / "stagnation") or empty to continue.
  std::string observe(double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      stagnant_ = 0;
      improved_ = true;
      return {};
    }
    improved_ = false;
    ++stagnant_;
    if (stagnant_ % halve_every_ == 0) {
      lr_ /= 2.0;
      if (lr_ < floor_) return "lr_floor";
    }
    if (stagnant_ >= stop_stagnant_) return "stagnation";
    return {};
  }

  double lr() const { return lr_; }
  double best() const { return best_; }
  int stagnant() const { return stagnant_; }
  bool improved() const { return improved_; }

  void restore(double lr, double best, int stagnant) {
    lr_ = lr;
    best_ = best;
    stagnant_ = stagnant;
  }

 private:
  double lr_;
  double floor_;
  int halve_every_;
  int stop_stagnant_;
  double best_ = std::numeric_limits<double>::infinity();
  int stagnant_ = 0;
  bool improved_ = false;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::string stop_reason;
  double best_val = 0.0;
};

// Fine-tuning presets: which MCS and loss weights to use.
struct FinetunePreset {
  std::string name;  // plain | ca-15-1-0 | ca-16-0-0
  MinibatchConditionSplit mcs;
  LossWeights weights;
};
FinetunePreset finetune_preset(const std::string& name);

class Trainer {
 public:
  Trainer(model::CrnModel& model, synth::Dataset& dataset,
          const synth::DatasetProfile& profile, TrainSchedule schedule,
          MinibatchConditionSplit mcs, LossWeights weights, uint64_t seed,
          dsp::FrameParams params = {});

  // Runs the epoch loop; writes history.csv, best.ckpt and last.ckpt under
  // out_dir (pass empty to skip persistence). Resumes from last.ckpt when
  // `resume` is set and the file exists.
  TrainResult run(const std::string& out_dir, bool resume = false);

  // One Adam step on an explicit batch; returns the batch loss. Exposed for
  // overfit experiments and tests.
  double step(const std::vector<TrainingSequence>& batch);

  double validation_loss();

  const ad::AdamState& optimizer() const { return adam_; }
  ad::AdamState& optimizer() { return adam_; }

 private:
  double epoch_pass(int epoch);

  model::CrnModel& model_;
  synth::Dataset& data_;
  synth::DatasetProfile profile_;
  TrainSchedule sched_;
  MinibatchConditionSplit mcs_;
  LossWeights weights_;
  uint64_t seed_;
  dsp::FrameParams params_;
  ad::AdamState adam_;
};

// Convenience wrappers mirroring the published recipes.
TrainResult train(model::CrnModel& model, synth::Dataset& dataset,
                  const synth::DatasetProfile& profile, const TrainSchedule& schedule,
                  const MinibatchConditionSplit& mcs, const LossWeights& weights,
                  uint64_t seed, const std::string& out_dir, bool resume = false);

TrainResult finetune(model::CrnModel& model, synth::Dataset& dataset,
                     const synth::DatasetProfile& profile, const FinetunePreset& preset,
                     uint64_t seed, const std::string& out_dir);

}  // namespace aeslab::train
