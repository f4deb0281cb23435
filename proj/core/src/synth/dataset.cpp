#include "aeslab/synth/dataset.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "aeslab/io/wav.hpp"

namespace aeslab::synth {

namespace fs = std::filesystem;
using nlohmann::json;

DatasetProfile train_profile() {
  DatasetProfile p;
  p.kind = DatasetProfile::Kind::kTrain;
  p.ser_range = {{-12.4, 22.4}};
  p.snr_range = {{-2.4, 32.4}};
  p.noiseless_prob = 0.1;
  p.nl_kind = NonlinearityKind::kSef;
  p.nl_params = {0.5, 1.0, 10.0, 999.0};
  return p;
}

DatasetProfile dev_profile() {
  DatasetProfile p;
  p.kind = DatasetProfile::Kind::kCondition;
  p.ser_choices = {-10, -5, 0, 5, 10, 15, 20};
  p.snr_choices = {0, 5, 10, 15, 20, 25, 30};
  p.nl_kind = NonlinearityKind::kSef;
  p.nl_params = {0.2, 0.4, 1.5, 12.0, 999.0};
  return p;
}

DatasetProfile test_profile() {
  DatasetProfile p;
  p.kind = DatasetProfile::Kind::kCondition;
  p.ser_choices = {-9, -6, -3, 0, 3, 6, 9};
  p.snr_choices = {5, 8, 11, 14, 17, 20};
  // Near-linear by construction; kept as published.
  p.nl_kind = NonlinearityKind::kArctan;
  p.nl_params = {1e-4};
  p.room_x = {4.0, 8.0};
  p.room_y = {3.5, 7.0};
  p.room_z = {2.4, 4.0};
  p.reflection_range = {0.2, 0.9};
  return p;
}

namespace {

double draw_menu(Rng& rng, const std::optional<std::array<double, 2>>& range,
                 const std::vector<double>& choices) {
  if (range.has_value()) return rng.uniform((*range)[0], (*range)[1]);
  if (choices.empty()) throw ConfigError("DatasetProfile: empty parameter menu");
  return choices[rng.below(choices.size())];
}

NonlinearityModel draw_nonlinearity(Rng& rng, const DatasetProfile& p) {
  NonlinearityModel nl;
  nl.kind = p.nl_kind;
  const double v = p.nl_params.empty() ? 1.0 : p.nl_params[rng.below(p.nl_params.size())];
  if (nl.kind == NonlinearityKind::kSef) nl.mu = v;
  if (nl.kind == NonlinearityKind::kArctan) nl.alpha = v;
  return nl;
}

RoomSpec draw_room(Rng& rng, const DatasetProfile& p) {
  RoomSpec room;
  room.dimensions = {rng.uniform(p.room_x[0], p.room_x[1]),
                     rng.uniform(p.room_y[0], p.room_y[1]),
                     rng.uniform(p.room_z[0], p.room_z[1])};
  auto inside = [&](double dim) { return rng.uniform(0.3, dim - 0.3); };
  room.source_pos = {inside(room.dimensions[0]), inside(room.dimensions[1]),
                     inside(room.dimensions[2])};
  room.mic_pos = {inside(room.dimensions[0]), inside(room.dimensions[1]),
                  inside(room.dimensions[2])};
  const double beta = rng.uniform(p.reflection_range[0], p.reflection_range[1]);
  room.reflection = {beta, beta, beta, beta, beta, beta};
  room.rir_length = p.rir_length;
  return room;
}

void gate_outside(TimeSignal& v, size_t start, size_t end) {
  for (size_t i = 0; i < v.size(); ++i) {
    if (i < start || i >= end) v[i] = 0.0;
  }
}

void draw_scales(Rng& rng, const DatasetProfile& p, SceneRecipe& r) {
  r.ser_db = draw_menu(rng, p.ser_range, p.ser_choices);
  r.noiseless = rng.uniform() < p.noiseless_prob;
  r.snr_db = draw_menu(rng, p.snr_range, p.snr_choices);
}

// Catalog cuts can land in pauses; redraw until the gated signal carries
// energy so SER/SNR scaling stays well defined.
template <typename GateFn>
TimeSignal draw_non_silent(const Catalog& catalog, size_t len, Rng& rng, GateFn gate) {
  for (int attempt = 0; attempt < 32; ++attempt) {
    TimeSignal v = catalog.draw(len, rng);
    gate(v);
    if (mean_power(v) > 1e-10) return v;
  }
  throw DataError("dataset: catalog audio is silent over the requested activity span");
}

}  // namespace

SignalBundle realize(const SceneRecipe& recipe) {
  TimeSignal d = convolve_truncated(apply_nonlinearity(recipe.x, recipe.nl), recipe.rir);
  // Sections are defined sample-exact: no echo may leak into STNE, including
  // the RIR tail from an earlier section.
  for (const auto& sec : recipe.sections) {
    if (sec.condition == Condition::kSTNE) {
      for (size_t i = sec.start; i < std::min(sec.end, d.size()); ++i) d[i] = 0.0;
    }
  }

  const size_t len = recipe.s.size();
  if (recipe.n.size() != len || recipe.x.size() != len || d.size() != len) {
    throw DataError("realize: component length mismatch");
  }
  const double p_s = mean_power(recipe.s);
  if (p_s <= 0.0) throw DataError("realize: silent nearend source");
  const double p_d = mean_power(d);
  if (p_d <= 0.0) throw DataError("realize: silent echo path");

  SignalBundle b;
  b.s = recipe.s;
  b.x = recipe.x;
  b.nonlinearity = recipe.nl;
  b.sections = recipe.sections;
  b.seed = recipe.seed;
  b.ser_db = recipe.ser_db;

  const double d_gain = std::sqrt(p_s / (p_d * std::pow(10.0, recipe.ser_db / 10.0)));
  b.d = d;
  for (double& v : b.d) v *= d_gain;

  if (recipe.noiseless) {
    b.n.assign(len, 0.0);
    b.snr_db.reset();
  } else {
    const double p_n = mean_power(recipe.n);
    if (p_n <= 0.0) throw DataError("realize: silent noise with finite SNR");
    const double n_gain =
        std::sqrt(p_s / (p_n * std::pow(10.0, recipe.snr_db / 10.0)));
    b.n = recipe.n;
    for (double& v : b.n) v *= n_gain;
    b.snr_db = recipe.snr_db;
  }

  b.y.resize(len);
  for (size_t i = 0; i < len; ++i) b.y[i] = b.s[i] + b.n[i] + b.d[i];
  return b;
}

DatasetEntry make_training_file(uint64_t master_seed, size_t index,
                                const Catalog& speech, const Catalog& noise,
                                const DatasetProfile& profile) {
  if (speech.empty() || noise.empty()) throw DataError("make_training_file: empty catalog");
  const uint64_t seed = hash_combine(master_seed, static_cast<uint64_t>(index));
  Rng rng(seed);
  const size_t len = static_cast<size_t>(profile.file_seconds * kSampleRate);

  SceneRecipe r;
  r.seed = seed;

  // Activity layout: most files are full-duplex, the rest restrict nearend or
  // farend to a 3-7 s span so minibatch sampling can find single-talk
  // excerpts.
  const double layout = rng.uniform();
  size_t gate_start = 0, gate_end = len;
  bool gate_s = false, gate_x = false;
  if (layout > 0.60) {
    const double span_s = rng.uniform(3.0, 7.0);
    const size_t span =
        std::min(static_cast<size_t>(span_s * kSampleRate), len * 7 / 10);
    gate_start = static_cast<size_t>(rng.below(len - span));
    gate_end = gate_start + span;
    gate_s = layout < 0.85;   // farend single-talk stretches
    gate_x = !gate_s;         // nearend single-talk stretches
  }

  r.s = draw_non_silent(speech, len, rng, [&](TimeSignal& v) {
    if (gate_s) gate_outside(v, gate_start, gate_end);
  });
  r.x = draw_non_silent(speech, len, rng, [&](TimeSignal& v) {
    if (gate_x) gate_outside(v, gate_start, gate_end);
  });
  r.n = draw_non_silent(noise, len, rng, [](TimeSignal&) {});
  r.nl = draw_nonlinearity(rng, profile);
  r.rir = simulate_rir(draw_room(rng, profile));
  draw_scales(rng, profile, r);

  DatasetEntry e;
  e.recipe = std::move(r);
  e.bundle = realize(e.recipe);
  return e;
}

DatasetEntry make_condition_file(uint64_t master_seed, size_t index,
                                 const Catalog& speech, const Catalog& noise,
                                 const DatasetProfile& profile) {
  if (speech.empty() || noise.empty()) throw DataError("make_condition_file: empty catalog");
  const uint64_t seed = hash_combine(master_seed, static_cast<uint64_t>(index));
  Rng rng(seed);

  const Condition order[3] = {Condition::kSTFE, Condition::kSTNE, Condition::kDT};
  size_t bounds[4] = {0, 0, 0, 0};
  for (int i = 0; i < 3; ++i) {
    const double dur = rng.uniform(profile.section_min_s, profile.section_max_s);
    bounds[i + 1] = bounds[i] + static_cast<size_t>(dur * kSampleRate);
  }
  const size_t len = bounds[3];

  SceneRecipe r;
  r.seed = seed;
  // STFE: no nearend speech. STNE: no farend, hence no echo.
  r.s = draw_non_silent(speech, len, rng, [&](TimeSignal& v) {
    for (size_t i = bounds[0]; i < bounds[1]; ++i) v[i] = 0.0;
  });
  r.x = draw_non_silent(speech, len, rng, [&](TimeSignal& v) {
    for (size_t i = bounds[1]; i < bounds[2]; ++i) v[i] = 0.0;
  });
  r.n = draw_non_silent(noise, len, rng, [](TimeSignal&) {});
  r.nl = draw_nonlinearity(rng, profile);
  r.rir = simulate_rir(draw_room(rng, profile));
  for (int i = 0; i < 3; ++i) {
    r.sections.push_back({order[i], bounds[i], bounds[i + 1]});
  }
  draw_scales(rng, profile, r);
  r.noiseless = false;  // condition files always carry noise

  DatasetEntry e;
  e.recipe = std::move(r);
  e.bundle = realize(e.recipe);
  return e;
}

Dataset make_dataset(uint64_t master_seed, size_t count, size_t validation_count,
                     const Catalog& speech, const Catalog& noise,
                     const DatasetProfile& profile, int workers) {
  if (validation_count > count)
    throw ConfigError("make_dataset: validation_count exceeds count");
  Dataset ds;
  ds.entries.resize(count);

  std::atomic<size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error;
  std::mutex error_mutex;
  auto work = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= count || failed.load()) return;
      try {
        DatasetEntry e = profile.kind == DatasetProfile::Kind::kTrain
                             ? make_training_file(master_seed, i, speech, noise, profile)
                             : make_condition_file(master_seed, i, speech, noise, profile);
        e.validation = i + validation_count >= count;  // last entries validate
        ds.entries[i] = std::move(e);
      } catch (const std::exception& ex) {
        std::lock_guard<std::mutex> lock(error_mutex);
        error = ex.what();
        failed.store(true);
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) throw DataError("make_dataset: " + error);
  return ds;
}

void remix_epoch(Dataset& dataset, uint64_t epoch_seed, const DatasetProfile& profile) {
  std::vector<size_t> idx;
  for (size_t i = 0; i < dataset.entries.size(); ++i) {
    if (!dataset.entries[i].validation) idx.push_back(i);
  }
  if (idx.size() < 2) return;

  Rng rng(hash_combine(epoch_seed, "remix"));
  // Fisher-Yates permutations for the farend chain and the noise source.
  std::vector<size_t> x_perm = idx, n_perm = idx;
  for (size_t i = x_perm.size() - 1; i > 0; --i)
    std::swap(x_perm[i], x_perm[rng.below(i + 1)]);
  for (size_t i = n_perm.size() - 1; i > 0; --i)
    std::swap(n_perm[i], n_perm[rng.below(i + 1)]);

  std::vector<SceneRecipe> old;
  old.reserve(dataset.entries.size());
  for (const auto& e : dataset.entries) old.push_back(e.recipe);

  for (size_t k = 0; k < idx.size(); ++k) {
    auto& e = dataset.entries[idx[k]];
    const SceneRecipe& xs = old[x_perm[k]];
    const SceneRecipe& ns = old[n_perm[k]];
    const size_t len = e.recipe.s.size();
    // Pairings move between files of equal length only; length mismatches
    // keep the original component.
    if (xs.x.size() == len) {
      e.recipe.x = xs.x;
      e.recipe.nl = xs.nl;
      e.recipe.rir = xs.rir;
    }
    if (ns.n.size() == len && mean_power(ns.n) > 0.0) e.recipe.n = ns.n;
    draw_scales(rng, profile, e.recipe);
    if (mean_power(e.recipe.n) <= 0.0) e.recipe.noiseless = true;
    e.bundle = realize(e.recipe);
  }
}

namespace {

std::string file_stem(size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "file_%05zu", index);
  return buf;
}

json sections_to_json(const std::vector<ConditionSection>& sections) {
  json arr = json::array();
  for (const auto& s : sections) {
    arr.push_back({{"condition", condition_name(s.condition)},
                   {"start", s.start},
                   {"end", s.end}});
  }
  return arr;
}

std::vector<ConditionSection> sections_from_json(const json& arr) {
  std::vector<ConditionSection> out;
  for (const auto& s : arr) {
    out.push_back({condition_from_name(s.at("condition").get<std::string>()),
                   s.at("start").get<size_t>(), s.at("end").get<size_t>()});
  }
  return out;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::string& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.jsonl");
  if (!manifest) throw DataError("save_dataset: cannot write manifest in " + dir);

  for (size_t i = 0; i < dataset.entries.size(); ++i) {
    const auto& e = dataset.entries[i];
    const std::string stem = file_stem(i);

    double peak = 0.0;
    for (const TimeSignal* sig : {&e.bundle.x, &e.bundle.s, &e.bundle.n, &e.bundle.d, &e.bundle.y}) {
      for (double v : *sig) peak = std::max(peak, std::abs(v));
    }
    const double g = peak > 0.98 ? 0.98 / peak : 1.0;
    auto scaled = [&](const TimeSignal& sig) {
      TimeSignal out = sig;
      for (double& v : out) v *= g;
      return out;
    };

    const char* comps[5] = {"x", "s", "n", "d", "y"};
    const TimeSignal* sigs[5] = {&e.bundle.x, &e.bundle.s, &e.bundle.n, &e.bundle.d,
                                 &e.bundle.y};
    json rec;
    rec["index"] = i;
    for (int c = 0; c < 5; ++c) {
      const std::string name = stem + "_" + comps[c] + ".wav";
      io::write_wav((fs::path(dir) / name).string(), scaled(*sigs[c]));
      rec[comps[c]] = name;
    }
    const std::string rir_name = stem + "_rir.wav";
    io::write_wav((fs::path(dir) / rir_name).string(), e.recipe.rir);
    rec["rir"] = rir_name;
    rec["ser_db"] = e.bundle.ser_db;
    if (e.bundle.snr_db.has_value()) {
      rec["snr_db"] = *e.bundle.snr_db;
    } else {
      rec["snr_db"] = nullptr;
    }
    rec["nonlinearity"] = e.recipe.nl.kind == NonlinearityKind::kSef      ? "sef"
                          : e.recipe.nl.kind == NonlinearityKind::kArctan ? "arctan"
                                                                          : "identity";
    rec["nl_param"] = e.recipe.nl.kind == NonlinearityKind::kArctan ? e.recipe.nl.alpha
                                                                    : e.recipe.nl.mu;
    rec["sections"] = sections_to_json(e.bundle.sections);
    rec["seed"] = e.recipe.seed;
    rec["validation"] = e.validation;
    manifest << rec.dump() << "\n";
  }
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream manifest(fs::path(dir) / "manifest.jsonl");
  if (!manifest) throw DataError("load_dataset: missing manifest.jsonl in " + dir);

  Dataset ds;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    DatasetEntry e;
    auto read_comp = [&](const char* key) {
      const std::string name = rec.at(key).get<std::string>();
      return io::read_wav((fs::path(dir) / name).string());
    };
    e.bundle.x = read_comp("x");
    e.bundle.s = read_comp("s");
    e.bundle.n = read_comp("n");
    e.bundle.d = read_comp("d");
    // The 16-bit files quantize; the mix invariant is reconstructed from the
    // stored components, which are the ground truth for losses and metrics.
    const size_t len = e.bundle.s.size();
    e.bundle.y.resize(len);
    for (size_t i = 0; i < len; ++i) {
      e.bundle.y[i] = e.bundle.s[i] + e.bundle.n[i] + e.bundle.d[i];
    }
    e.bundle.ser_db = rec.at("ser_db").get<double>();
    if (!rec.at("snr_db").is_null()) e.bundle.snr_db = rec.at("snr_db").get<double>();
    e.bundle.sections = sections_from_json(rec.at("sections"));
    e.bundle.seed = rec.at("seed").get<uint64_t>();

    e.recipe.s = e.bundle.s;
    e.recipe.n = e.bundle.n;
    e.recipe.x = e.bundle.x;
    e.recipe.rir = read_comp("rir");
    const std::string nlk = rec.at("nonlinearity").get<std::string>();
    e.recipe.nl.kind = nlk == "sef"      ? NonlinearityKind::kSef
                       : nlk == "arctan" ? NonlinearityKind::kArctan
                                         : NonlinearityKind::kIdentity;
    if (e.recipe.nl.kind == NonlinearityKind::kArctan) {
      e.recipe.nl.alpha = rec.at("nl_param").get<double>();
    } else {
      e.recipe.nl.mu = rec.at("nl_param").get<double>();
    }
    e.recipe.ser_db = e.bundle.ser_db;
    e.recipe.noiseless = !e.bundle.snr_db.has_value();
    e.recipe.snr_db = e.bundle.snr_db.value_or(0.0);
    e.recipe.sections = e.bundle.sections;
    e.recipe.seed = e.bundle.seed;
    e.validation = rec.value("validation", false);
    ds.entries.push_back(std::move(e));
  }
  if (ds.entries.empty()) throw DataError("load_dataset: empty manifest in " + dir);
  return ds;
}

}  // namespace aeslab::synth
