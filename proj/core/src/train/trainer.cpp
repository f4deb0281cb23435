#include "aeslab/train/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "aeslab/autodiff/checkpoint.hpp"
#include "aeslab/autodiff/ops.hpp"
#include "aeslab/model/pipeline.hpp"
#include "aeslab/rng.hpp"

namespace aeslab::train {

namespace fs = std::filesystem;
using nlohmann::json;

FinetunePreset finetune_preset(const std::string& name) {
  FinetunePreset p;
  p.name = name;
  if (name == "plain") {
    p.mcs = MinibatchConditionSplit::parse("16/0/0");
    p.weights = LossWeights::zeros();
  } else if (name == "ca-15-1-0") {
    p.mcs = MinibatchConditionSplit::parse("15/1/0");
    p.weights = LossWeights::preset_ca_15_1_0();
  } else if (name == "ca-16-0-0") {
    p.mcs = MinibatchConditionSplit::parse("16/0/0");
    p.weights = LossWeights::preset_ca_16_0_0();
  } else {
    throw ConfigError("unknown finetune preset: " + name);
  }
  return p;
}

Trainer::Trainer(model::CrnModel& model, synth::Dataset& dataset,
                 const synth::DatasetProfile& profile, TrainSchedule schedule,
                 MinibatchConditionSplit mcs, LossWeights weights, uint64_t seed,
                 dsp::FrameParams params)
    : model_(model),
      data_(dataset),
      profile_(profile),
      sched_(schedule),
      mcs_(mcs),
      weights_(weights),
      seed_(seed),
      params_(params) {
  sched_.validate();
  mcs_.validate();
  weights_.validate();
  adam_.lr = sched_.initial_lr;
}

namespace {

// Builds the differentiable loss for one excerpt: features -> network ->
// crop -> gain -> masking/OLA for the mixture and both white-box components ->
// weighted logMSE sum.
ad::ValueRef entry_loss(ad::Tape& tape, const model::CrnModel& model,
                        const model::CrnModel::TapeBindings& bind,
                        const TrainingSequence& seq, const LossWeights& weights,
                        const dsp::FrameParams& params) {
  const dsp::SpectralSequence X = dsp::analyze(seq.x, params);
  const dsp::SpectralSequence Y = dsp::analyze(seq.y, params);
  const dsp::SpectralSequence S = dsp::analyze(seq.s, params);
  const dsp::SpectralSequence D = dsp::analyze(seq.d, params);
  const int T = Y.frames;
  const int bins = Y.bins;

  const std::vector<double> feats =
      dsp::assemble_features(X, Y, params, model.config().input_compression);
  ad::Tensor features({T, params.feature_len, 4}, feats);

  auto spec_tensor = [&](const dsp::SpectralSequence& s) {
    ad::Tensor t({T, bins, 2});
    for (int f = 0; f < T; ++f) {
      for (int k = 0; k < bins; ++k) {
        t.at3(f, k, 0) = s.at(f, k).real();
        t.at3(f, k, 1) = s.at(f, k).imag();
      }
    }
    return t;
  };

  ad::ValueRef mask = model.forward_tape(tape, bind, features);
  ad::ValueRef cropped = ad::crop_freq(tape, mask, bins);
  ad::ValueRef gains = ad::mask_gain(tape, cropped);

  const size_t out_len = params.synthesis_length(T);
  auto target_tensor = [&](const TimeSignal& a, const TimeSignal& b) {
    ad::Tensor t({static_cast<int>(out_len)});
    for (size_t i = 0; i < out_len; ++i) {
      t.v[i] = a[i] + (b.empty() ? 0.0 : b[i]);
    }
    return t;
  };

  ad::ValueRef e =
      ad::ola_synthesize(tape, ad::complex_mul_const(tape, gains, spec_tensor(Y)), params);
  ad::ValueRef j_mix = ad::logmse(tape, e, target_tensor(seq.s, seq.n));

  const double a = weights.alpha(seq.condition);
  const double b = weights.beta(seq.condition);
  if (a == 0.0 && b == 0.0) return j_mix;

  ad::ValueRef s_tilde =
      ad::ola_synthesize(tape, ad::complex_mul_const(tape, gains, spec_tensor(S)), params);
  ad::ValueRef j_speech = ad::logmse(tape, s_tilde, target_tensor(seq.s, {}));
  ad::ValueRef d_tilde =
      ad::ola_synthesize(tape, ad::complex_mul_const(tape, gains, spec_tensor(D)), params);
  ad::ValueRef j_echo =
      ad::logmse(tape, d_tilde, ad::Tensor({static_cast<int>(out_len)}));
  return ad::weighted_sum(tape, {j_mix, j_speech, j_echo}, {1.0 - a - b, a, b});
}

}  // namespace

double Trainer::step(const std::vector<TrainingSequence>& batch) {
  if (batch.empty()) throw DataError("train step: empty batch");
  ad::Tape tape;
  const auto bind = model_.bind(tape);
  std::vector<ad::ValueRef> losses;
  for (const auto& seq : batch) {
    losses.push_back(entry_loss(tape, model_, bind, seq, weights_, params_));
  }
  const std::vector<double> coeffs(losses.size(), 1.0 / static_cast<double>(losses.size()));
  ad::ValueRef total = ad::weighted_sum(tape, losses, coeffs);
  const double loss_value = tape.value(total).v[0];
  if (!std::isfinite(loss_value)) {
    throw NumericError("train step: non-finite loss");
  }
  tape.backward(total);
  auto grads = tape.parameter_gradients();
  adam_step(model_.mutable_params(), grads, adam_);
  return loss_value;
}

double Trainer::validation_loss() {
  // Deterministic fixed excerpts (offset 0) through the inference path; no
  // gradients needed here.
  const size_t excerpt = params_.synthesis_length(sched_.bptt_frames);
  double total = 0.0;
  size_t count = 0;
  for (const auto& entry : data_.entries) {
    if (!entry.validation) continue;
    const synth::SignalBundle& bd = entry.bundle;
    if (bd.y.size() < excerpt) continue;
    auto cut = [&](const TimeSignal& v) {
      return TimeSignal(v.begin(), v.begin() + static_cast<ptrdiff_t>(excerpt));
    };
    const TimeSignal x = cut(bd.x), y = cut(bd.y), s = cut(bd.s), n = cut(bd.n),
                     d = cut(bd.d);
    const auto res = model::forward_masking(model_, params_, x, y);
    const dsp::SpectralSequence S = dsp::analyze(s, params_);
    const dsp::SpectralSequence D = dsp::analyze(d, params_);
    const auto wb = white_box_components(res.gains, S, D, params_, excerpt);
    LossEntry le;
    le.e = res.e;
    le.s = s;
    le.n = n;
    le.s_tilde = wb.s_tilde;
    le.d_tilde = wb.d_tilde;
    le.condition = excerpt_condition(bd, 0, excerpt);
    total += condition_loss(le, weights_);
    ++count;
  }
  if (count == 0) throw DataError("validation_loss: no validation files");
  return total / static_cast<double>(count);
}

double Trainer::epoch_pass(int epoch) {
  size_t train_count = 0;
  for (const auto& e : data_.entries) train_count += e.validation ? 0 : 1;
  const int steps = sched_.steps_per_epoch > 0
                        ? sched_.steps_per_epoch
                        : std::max<int>(1, static_cast<int>(train_count) / sched_.batch_size);
  double acc = 0.0;
  for (int s = 0; s < steps; ++s) {
    const uint64_t step_seed =
        hash_combine(hash_combine(seed_, static_cast<uint64_t>(epoch)), static_cast<uint64_t>(s));
    auto batch = sample_minibatch(data_, mcs_, step_seed, sched_.bptt_frames, params_);
    acc += step(batch);
  }
  return acc / steps;
}

TrainResult Trainer::run(const std::string& out_dir, bool resume) {
  TrainResult result;
  int start_epoch = 0;
  LrController lrc(sched_);

  const std::string last_path = out_dir.empty() ? "" : (fs::path(out_dir) / "last.ckpt").string();
  if (resume && !last_path.empty() && fs::exists(last_path)) {
    const ad::Checkpoint ck = ad::load_checkpoint(last_path);
    model_.set_params(ck.params);
    if (ck.optimizer) adam_ = *ck.optimizer;
    if (!ck.meta_json.empty()) {
      const json meta = json::parse(ck.meta_json);
      start_epoch = meta.value("next_epoch", 0);
      lrc.restore(meta.value("lr", sched_.initial_lr),
                  meta.value("best_val", std::numeric_limits<double>::infinity()),
                  meta.value("stagnant", 0));
      adam_.lr = lrc.lr();
      for (const auto& rec : meta.value("history", json::array())) {
        result.history.push_back({rec.at("epoch").get<int>(),
                                  rec.at("train_loss").get<double>(),
                                  rec.at("val_loss").get<double>(),
                                  rec.at("lr").get<double>()});
      }
    }
    // Dataset remixes are cumulative; replay them to restore the epoch state.
    for (int e = 1; e < start_epoch; ++e) {
      synth::remix_epoch(data_, hash_combine(seed_, static_cast<uint64_t>(e)), profile_);
    }
  }

  if (!out_dir.empty()) fs::create_directories(out_dir);

  auto save_state = [&](const std::string& name, int next_epoch) {
    if (out_dir.empty()) return;
    ad::Checkpoint ck;
    ck.params = model_.params();
    ck.optimizer = adam_;
    json meta;
    meta["next_epoch"] = next_epoch;
    meta["best_val"] = lrc.best();
    meta["stagnant"] = lrc.stagnant();
    meta["lr"] = lrc.lr();
    json hist = json::array();
    for (const auto& r : result.history) {
      hist.push_back({{"epoch", r.epoch},
                      {"train_loss", r.train_loss},
                      {"val_loss", r.val_loss},
                      {"lr", r.lr}});
    }
    meta["history"] = hist;
    ck.meta_json = meta.dump();
    save_checkpoint(ck, (fs::path(out_dir) / name).string());
  };

  std::string stop_reason = "max_epochs";
  for (int epoch = start_epoch; epoch < sched_.max_epochs; ++epoch) {
    if (epoch > 0) {
      synth::remix_epoch(data_, hash_combine(seed_, static_cast<uint64_t>(epoch)), profile_);
    }
    const double train_loss = epoch_pass(epoch);
    const double val_loss = validation_loss();
    result.history.push_back({epoch, train_loss, val_loss, adam_.lr});

    const std::string stop = lrc.observe(val_loss);
    adam_.lr = lrc.lr();
    if (lrc.improved()) save_state("best.ckpt", epoch + 1);
    save_state("last.ckpt", epoch + 1);
    if (!stop.empty()) {
      stop_reason = stop;
      break;
    }
  }

  if (!out_dir.empty()) {
    std::ofstream csv(fs::path(out_dir) / "history.csv");
    csv << "epoch,train_loss,val_loss,lr\n";
    char line[160];
    for (const auto& r : result.history) {
      std::snprintf(line, sizeof(line), "%d,%.10g,%.10g,%.10g\n", r.epoch, r.train_loss,
                    r.val_loss, r.lr);
      csv << line;
    }
  }
  result.stop_reason = stop_reason;
  result.best_val = lrc.best();
  return result;
}

TrainResult train(model::CrnModel& model, synth::Dataset& dataset,
                  const synth::DatasetProfile& profile, const TrainSchedule& schedule,
                  const MinibatchConditionSplit& mcs, const LossWeights& weights,
                  uint64_t seed, const std::string& out_dir, bool resume) {
  Trainer t(model, dataset, profile, schedule, mcs, weights, seed);
  return t.run(out_dir, resume);
}

TrainResult finetune(model::CrnModel& model, synth::Dataset& dataset,
                     const synth::DatasetProfile& profile, const FinetunePreset& preset,
                     uint64_t seed, const std::string& out_dir) {
  Trainer t(model, dataset, profile, TrainSchedule::finetune(), preset.mcs,
            preset.weights, seed);
  return t.run(out_dir, false);
}

}  // namespace aeslab::train
