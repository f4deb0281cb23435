// Command-line front end: dataset synthesis, training, fine-tuning,
// evaluation, and complexity reporting, all driven by a JSON config with flag
// overrides. Every run writes a resolved-config snapshot next to its outputs
// so it can be reproduced exactly.
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "aeslab/autodiff/checkpoint.hpp"
#include "aeslab/io/wav.hpp"
#include "aeslab/metrics/evaluate.hpp"
#include "aeslab/model/complexity.hpp"
#include "aeslab/model/crn.hpp"
#include "aeslab/synth/dataset.hpp"
#include "aeslab/train/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aeslab;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
}

void write_snapshot(const json& resolved, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream f(fs::path(out_dir) / "resolved_config.json");
  f << resolved.dump(2) << "\n";
}

synth::DatasetProfile profile_from(const json& cfg) {
  const std::string name = cfg.value("profile", "train");
  synth::DatasetProfile p;
  if (name == "train") {
    p = synth::train_profile();
  } else if (name == "dev") {
    p = synth::dev_profile();
  } else if (name == "test") {
    p = synth::test_profile();
  } else {
    throw ConfigError("unknown dataset profile: " + name);
  }
  if (cfg.contains("file_seconds")) p.file_seconds = cfg.at("file_seconds").get<double>();
  if (cfg.contains("section_min_s")) p.section_min_s = cfg.at("section_min_s").get<double>();
  if (cfg.contains("section_max_s")) p.section_max_s = cfg.at("section_max_s").get<double>();
  if (cfg.contains("rir_length")) p.rir_length = cfg.at("rir_length").get<int>();
  return p;
}

synth::Catalog catalog_from(const json& cfg, const char* key, synth::Catalog::Kind kind) {
  const std::string dir = cfg.value(key, std::string());
  if (dir.empty()) return synth::Catalog::procedural(kind);
  return synth::Catalog::from_directory(dir, kind);
}

synth::Dataset build_or_load_dataset(const json& cfg, uint64_t seed) {
  if (cfg.contains("dataset") && !cfg.at("dataset").get<std::string>().empty()) {
    return synth::load_dataset(cfg.at("dataset").get<std::string>());
  }
  const json syn = cfg.value("synth", json::object());
  const auto profile = profile_from(syn);
  const auto speech = catalog_from(syn, "speech_dir", synth::Catalog::Kind::kSpeech);
  const auto noise = catalog_from(syn, "noise_dir", synth::Catalog::Kind::kNoise);
  const size_t count = syn.value("count", 16);
  const size_t validation = syn.value("validation", 2);
  const int workers = syn.value("workers", 1);
  return synth::make_dataset(seed, count, validation, speech, noise, profile, workers);
}

model::CrnConfig model_config_from(const json& cfg) {
  const std::string stage = cfg.value("stage", "m5");
  model::CrnConfig c = model::stage_config(model::stage_from_name(stage));
  if (cfg.contains("micro")) {
    const json& m = cfg.at("micro");
    c = model::micro_config(m.value("kernel_count", 8), m.value("groups", 8));
  }
  return c;
}

train::TrainSchedule schedule_from(const json& cfg, bool finetune) {
  train::TrainSchedule s =
      finetune ? train::TrainSchedule::finetune() : train::TrainSchedule::standard();
  if (cfg.contains("lr")) s.initial_lr = cfg.at("lr").get<double>();
  if (cfg.contains("lr_floor")) s.lr_floor = cfg.at("lr_floor").get<double>();
  if (cfg.contains("epochs")) s.max_epochs = cfg.at("epochs").get<int>();
  if (cfg.contains("batch")) s.batch_size = cfg.at("batch").get<int>();
  if (cfg.contains("bptt")) s.bptt_frames = cfg.at("bptt").get<int>();
  if (cfg.contains("steps_per_epoch")) s.steps_per_epoch = cfg.at("steps_per_epoch").get<int>();
  return s;
}

train::LossWeights weights_from(const json& cfg) {
  train::LossWeights w;
  if (!cfg.contains("weights")) return w;
  const json& j = cfg.at("weights");
  w.alpha_dt = j.value("alpha_dt", 0.0);
  w.beta_dt = j.value("beta_dt", 0.0);
  w.alpha_stfe = j.value("alpha_stfe", 0.0);
  w.beta_stfe = j.value("beta_stfe", 0.0);
  w.alpha_stne = j.value("alpha_stne", 0.0);
  w.beta_stne = j.value("beta_stne", 0.0);
  return w;
}

int cmd_synth(const json& cfg, const std::string& out_dir) {
  const uint64_t seed = cfg.value("seed", 1u);
  const json syn = cfg.value("synth", json::object());
  const auto profile = profile_from(syn);
  const auto speech = catalog_from(syn, "speech_dir", synth::Catalog::Kind::kSpeech);
  const auto noise = catalog_from(syn, "noise_dir", synth::Catalog::Kind::kNoise);
  const size_t count = syn.value("count", 16);
  const size_t validation = syn.value("validation", 0);
  const int workers = syn.value("workers", 1);

  const auto ds =
      synth::make_dataset(seed, count, validation, speech, noise, profile, workers);
  synth::save_dataset(ds, out_dir);
  write_snapshot(cfg, out_dir);
  std::cout << "wrote " << ds.entries.size() << " files to " << out_dir << "\n";
  return 0;
}

int cmd_train(const json& cfg, const std::string& out_dir, bool finetune_mode,
              bool resume) {
  const uint64_t seed = cfg.value("seed", 1u);
  const json section = cfg.value(finetune_mode ? "finetune" : "train", json::object());

  auto dataset = build_or_load_dataset(section, hash_combine(seed, "dataset"));
  auto profile = profile_from(section.value("synth", json::object()));

  auto model_cfg = model_config_from(section);
  auto model = model::CrnModel::build(model_cfg, hash_combine(seed, "init"));

  const std::string init_ckpt = section.value("checkpoint", std::string());
  if (!init_ckpt.empty()) {
    model.set_params(ad::load_checkpoint(init_ckpt).params);
  } else if (finetune_mode) {
    throw ConfigError("finetune requires a checkpoint");
  }

  auto sched = schedule_from(section, finetune_mode);
  train::MinibatchConditionSplit mcs;
  train::LossWeights weights = weights_from(section);
  if (finetune_mode) {
    const auto preset = train::finetune_preset(section.value("preset", "plain"));
    mcs = preset.mcs;
    weights = preset.weights;
  }
  if (section.contains("mcs")) {
    mcs = train::MinibatchConditionSplit::parse(section.at("mcs").get<std::string>());
  }
  if (!mcs.random_mode) sched.batch_size = mcs.batch_size;

  write_snapshot(cfg, out_dir);
  train::Trainer trainer(model, dataset, profile, sched, mcs, weights, seed);
  const auto result = trainer.run(out_dir, resume);
  for (const auto& r : result.history) {
    std::cout << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss
              << " lr " << r.lr << "\n";
  }
  std::cout << "stopped: " << result.stop_reason << " best_val " << result.best_val << "\n";
  return 0;
}

int cmd_evaluate(const json& cfg, const std::string& out_dir) {
  const json section = cfg.value("evaluate", json::object());
  const std::string dataset_dir = section.value("dataset", std::string());
  if (dataset_dir.empty()) throw ConfigError("evaluate requires a dataset directory");
  const auto dataset = synth::load_dataset(dataset_dir);

  metrics::EvalOptions opt;
  const std::string system = section.value("system", "model");
  if (system == "model") {
    opt.system = metrics::EvalSystem::kModel;
  } else if (system == "identity") {
    opt.system = metrics::EvalSystem::kIdentityMask;
  } else if (system == "mute") {
    opt.system = metrics::EvalSystem::kMute;
  } else {
    throw ConfigError("unknown evaluate system: " + system);
  }
  opt.eval_float32 = section.value("f32", false);
  opt.workers = section.value("workers", 1);

  std::optional<model::CrnModel> model;
  if (opt.system == metrics::EvalSystem::kModel) {
    const std::string ckpt = section.value("checkpoint", std::string());
    if (ckpt.empty()) throw ConfigError("evaluate with system=model requires a checkpoint");
    auto m = model::CrnModel::build(model_config_from(section), 0);
    m.set_params(ad::load_checkpoint(ckpt).params);
    model = std::move(m);
  }

  const bool emit_audio = section.value("emit_audio", false);
  std::vector<TimeSignal> enhanced;
  const auto report = metrics::evaluate(model ? &*model : nullptr, dataset, opt,
                                        emit_audio ? &enhanced : nullptr);

  write_snapshot(cfg, out_dir);
  {
    std::ofstream f(fs::path(out_dir) / "report.csv");
    f << metrics::report_csv(report);
  }
  std::cout << metrics::report_text(report);
  if (emit_audio) {
    for (size_t i = 0; i < enhanced.size(); ++i) {
      if (enhanced[i].empty()) continue;
      char name[64];
      std::snprintf(name, sizeof(name), "enhanced_%05zu.wav", i);
      io::write_wav((fs::path(out_dir) / name).string(), enhanced[i]);
    }
  }
  if (!report.errors.empty()) {
    std::cerr << report.errors.size() << " files failed\n";
    return 3;
  }
  return 0;
}

int cmd_complexity(const json& cfg, const std::string& out_dir) {
  const json section = cfg.value("complexity", json::object());
  std::vector<model::AblationStage> stages;
  if (section.contains("stages")) {
    for (const auto& s : section.at("stages")) {
      stages.push_back(model::stage_from_name(s.get<std::string>()));
    }
  } else {
    stages = model::all_stages();
  }

  std::vector<model::ComplexityReport> reports;
  for (const auto stage : stages) {
    const auto m = model::CrnModel::build(model::stage_config(stage), 0);
    auto rep = model::count_flops(m);
    rep.model_name = model::stage_name(stage);
    reports.push_back(std::move(rep));
  }
  std::cout << model::complexity_table(reports);
  if (!out_dir.empty()) {
    write_snapshot(cfg, out_dir);
    std::ofstream f(fs::path(out_dir) / "complexity.csv");
    f << model::complexity_csv(reports);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale deep acoustic echo suppression laboratory"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  uint64_t seed_override = 0;
  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed_override, "master seed override");

  auto* synth_cmd = app.add_subcommand("synth", "generate a dataset");
  auto* train_cmd = app.add_subcommand("train", "train a model");
  auto* finetune_cmd = app.add_subcommand("finetune", "fine-tune from a checkpoint");
  auto* eval_cmd = app.add_subcommand("evaluate", "evaluate on a condition dataset");
  auto* complexity_cmd = app.add_subcommand("complexity", "parameter/FLOPS ladder");
  for (auto* sub : {synth_cmd, train_cmd, finetune_cmd, eval_cmd, complexity_cmd}) {
    sub->fallthrough();  // global --config/--out/--seed may follow the subcommand
  }

  std::string mcs, stage, preset, checkpoint, dataset, system;
  bool resume = false, emit_audio = false, f32 = false;
  bool identity_flag = false, mute_flag = false;
  train_cmd->add_option("--mcs", mcs, "minibatch condition split d/f/n or 'random'");
  train_cmd->add_option("--stage", stage, "ablation stage fcrn15|m1..m5");
  train_cmd->add_option("--dataset", dataset, "dataset directory (else synthesized)");
  train_cmd->add_flag("--resume", resume, "resume from last.ckpt in --out");
  finetune_cmd->add_option("--preset", preset, "plain|ca-15-1-0|ca-16-0-0");
  finetune_cmd->add_option("--checkpoint", checkpoint, "starting checkpoint");
  finetune_cmd->add_option("--mcs", mcs, "override the preset MCS");
  finetune_cmd->add_option("--stage", stage, "ablation stage");
  finetune_cmd->add_option("--dataset", dataset, "dataset directory");
  eval_cmd->add_option("--checkpoint", checkpoint, "model checkpoint");
  eval_cmd->add_option("--dataset", dataset, "condition dataset directory");
  eval_cmd->add_option("--system", system, "model|identity|mute");
  eval_cmd->add_flag("--identity-mask", identity_flag, "score the unprocessed signal");
  eval_cmd->add_flag("--mute", mute_flag, "score silence");
  eval_cmd->add_flag("--emit-audio", emit_audio, "write enhanced WAVs");
  eval_cmd->add_flag("--f32", f32, "32-bit evaluation mode");
  eval_cmd->add_option("--stage", stage, "ablation stage of the checkpoint");

  try {
    app.parse(argc, argv);

    json cfg = load_config(config_path);
    if (seed_opt->count() > 0) cfg["seed"] = seed_override;
    if (identity_flag) system = "identity";
    if (mute_flag) system = "mute";
    auto apply = [&](const char* sec, const char* key, const std::string& v, bool cond) {
      if (cond && !v.empty()) cfg[sec][key] = v;
    };
    apply("train", "mcs", mcs, train_cmd->parsed());
    apply("train", "stage", stage, train_cmd->parsed());
    apply("train", "dataset", dataset, train_cmd->parsed());
    apply("finetune", "preset", preset, finetune_cmd->parsed());
    apply("finetune", "checkpoint", checkpoint, finetune_cmd->parsed());
    apply("finetune", "mcs", mcs, finetune_cmd->parsed());
    apply("finetune", "stage", stage, finetune_cmd->parsed());
    apply("finetune", "dataset", dataset, finetune_cmd->parsed());
    apply("evaluate", "checkpoint", checkpoint, eval_cmd->parsed());
    apply("evaluate", "dataset", dataset, eval_cmd->parsed());
    apply("evaluate", "system", system, eval_cmd->parsed());
    apply("evaluate", "stage", stage, eval_cmd->parsed());
    if (eval_cmd->parsed() && emit_audio) cfg["evaluate"]["emit_audio"] = true;
    if (eval_cmd->parsed() && f32) cfg["evaluate"]["f32"] = true;

    if (!complexity_cmd->parsed() && out_dir.empty()) {
      throw ConfigError("--out is required for this command");
    }

    if (synth_cmd->parsed()) return cmd_synth(cfg, out_dir);
    if (train_cmd->parsed()) return cmd_train(cfg, out_dir, false, resume);
    if (finetune_cmd->parsed()) return cmd_train(cfg, out_dir, true, false);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg, out_dir);
    if (complexity_cmd->parsed()) return cmd_complexity(cfg, out_dir);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
