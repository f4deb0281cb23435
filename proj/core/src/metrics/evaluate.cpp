#include "aeslab/metrics/evaluate.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace aeslab::metrics {

namespace {

TimeSignal section_cut(const TimeSignal& v, const synth::ConditionSection& sec) {
  return TimeSignal(v.begin() + static_cast<ptrdiff_t>(sec.start),
                    v.begin() + static_cast<ptrdiff_t>(std::min(sec.end, v.size())));
}

// First and last half-frames lack full overlap-add coverage; metrics score
// the reconstructable interior of each section only.
synth::ConditionSection trim_to_reconstructable(const synth::ConditionSection& sec,
                                                int frames,
                                                const dsp::FrameParams& fp) {
  synth::ConditionSection t = sec;
  const size_t usable_start = static_cast<size_t>(fp.frame_shift);
  const size_t usable_end = static_cast<size_t>(frames) * fp.frame_shift;
  t.start = std::max(t.start, usable_start);
  t.end = std::min(t.end, usable_end);
  if (t.end <= t.start) {
    throw DataError("evaluate: section entirely outside the reconstructable range");
  }
  return t;
}

double deviation_db(const TimeSignal& e, const TimeSignal& y) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < y.size(); ++i) {
    const double diff = e[i] - y[i];
    num += diff * diff;
    den += y[i] * y[i];
  }
  if (den <= 0.0) throw DataError("deviation: silent reference section");
  return 10.0 * std::log10(num / den + 1e-12);
}

std::vector<EvalRow> evaluate_file(const model::CrnModel* model,
                                   const synth::DatasetEntry& entry, int file_index,
                                   const EvalOptions& opt, TimeSignal* enhanced_out) {
  const synth::SignalBundle& b = entry.bundle;
  if (b.x.empty() || b.s.empty() || b.n.empty() || b.d.empty() || b.y.empty()) {
    throw DataError("evaluate: missing component signals for file " +
                    std::to_string(file_index));
  }

  dsp::SpectralSequence gains;
  TimeSignal e;
  const dsp::SpectralSequence Y = dsp::analyze(b.y, opt.frame);
  if (opt.system == EvalSystem::kModel) {
    if (!model) throw ConfigError("evaluate: model required for system=model");
    auto res = model::forward_masking(*model, opt.frame, b.x, b.y, opt.eval_float32);
    gains = std::move(res.gains);
    e = std::move(res.e);
  } else {
    const double g = opt.system == EvalSystem::kIdentityMask ? 1.0 : 0.0;
    gains = model::flat_gains(Y.frames, Y.bins, g);
    e = model::apply_gains(gains, Y, opt.frame, b.y.size());
  }
  if (enhanced_out) *enhanced_out = e;

  // White-box components from the stored ground-truth components. The echo
  // estimate for ERLE subtracts the noise as processed by the system
  // (e - G*n), so perfect suppression reads the cap even though the system
  // also removes the noise.
  const dsp::SpectralSequence S = dsp::analyze(b.s, opt.frame);
  const dsp::SpectralSequence D = dsp::analyze(b.d, opt.frame);
  const dsp::SpectralSequence N = dsp::analyze(b.n, opt.frame);
  const TimeSignal s_tilde = model::apply_gains(gains, S, opt.frame, b.y.size());
  const TimeSignal d_tilde = model::apply_gains(gains, D, opt.frame, b.y.size());
  const TimeSignal n_tilde = model::apply_gains(gains, N, opt.frame, b.y.size());

  // Files without section annotations score as one DT section.
  std::vector<synth::ConditionSection> sections = b.sections;
  if (sections.empty()) {
    sections.push_back({synth::Condition::kDT, 0, b.y.size()});
  }

  std::vector<EvalRow> rows;
  for (const auto& raw_sec : sections) {
    const auto sec = trim_to_reconstructable(raw_sec, Y.frames, opt.frame);
    EvalRow row;
    row.file_index = file_index;
    row.condition = sec.condition;
    switch (sec.condition) {
      case synth::Condition::kDT:
        row.component_erle_db =
            component_erle(section_cut(d_tilde, sec), section_cut(b.d, sec), opt.erle);
        row.speech_distortion_db =
            speech_preservation(section_cut(s_tilde, sec), section_cut(b.s, sec));
        break;
      case synth::Condition::kSTFE:
        row.erle_db = erle(section_cut(b.d, sec), section_cut(e, sec),
                           section_cut(n_tilde, sec), opt.erle)
                          .mean_db;
        break;
      case synth::Condition::kSTNE:
        row.deviation_db = deviation_db(section_cut(e, sec), section_cut(b.y, sec));
        break;
    }
    rows.push_back(row);
  }
  return rows;
}

void accumulate_mean(std::vector<EvalRow>& means, const std::vector<EvalRow>& rows) {
  auto fields = {&EvalRow::component_erle_db, &EvalRow::speech_distortion_db,
                 &EvalRow::erle_db, &EvalRow::deviation_db};
  for (synth::Condition c :
       {synth::Condition::kDT, synth::Condition::kSTFE, synth::Condition::kSTNE}) {
    EvalRow mean;
    mean.file_index = -1;
    mean.condition = c;
    bool any = false;
    for (auto field : fields) {
      double acc = 0.0;
      int count = 0;
      for (const auto& r : rows) {
        if (r.condition != c || !(r.*field).has_value()) continue;
        acc += *(r.*field);
        ++count;
      }
      if (count > 0) {
        mean.*field = acc / count;
        any = true;
      }
    }
    if (any) means.push_back(mean);
  }
}

}  // namespace

EvalReport evaluate(const model::CrnModel* model, const synth::Dataset& dataset,
                    const EvalOptions& options, std::vector<TimeSignal>* enhanced) {
  EvalReport report;
  const size_t n = dataset.entries.size();
  std::vector<std::vector<EvalRow>> per_file(n);
  std::vector<std::string> errors(n);
  if (enhanced) enhanced->assign(n, {});

  // Per-file evaluation is independent; rows are assembled in file order so
  // the report is identical regardless of worker count.
  const int workers = std::max(1, options.workers);
  std::atomic<size_t> next{0};
  auto work = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        per_file[i] = evaluate_file(model, dataset.entries[i], static_cast<int>(i),
                                    options, enhanced ? &(*enhanced)[i] : nullptr);
      } catch (const std::exception& ex) {
        errors[i] = ex.what();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  for (size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      report.errors.push_back("file " + std::to_string(i) + ": " + errors[i]);
      continue;
    }
    report.rows.insert(report.rows.end(), per_file[i].begin(), per_file[i].end());
  }
  accumulate_mean(report.means, report.rows);
  return report;
}

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v.has_value()) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", *v);
  return buf;
}

void csv_row(std::ostringstream& os, const EvalRow& r, const char* tag) {
  os << tag << "," << (r.file_index < 0 ? std::string("") : std::to_string(r.file_index))
     << "," << synth::condition_name(r.condition) << "," << cell(r.component_erle_db)
     << "," << cell(r.speech_distortion_db) << "," << cell(r.erle_db) << ","
     << cell(r.deviation_db) << "," << cell(r.pesq) << "," << cell(r.aecmos) << "\n";
}

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "row_type,file,condition,dt_component_erle_db,dt_speech_distortion_db,"
        "stfe_erle_db,stne_deviation_db,pesq,aecmos\n";
  for (const auto& r : report.rows) csv_row(os, r, "file");
  for (const auto& r : report.means) csv_row(os, r, "mean");
  return os.str();
}

std::string report_text(const EvalReport& report) {
  std::ostringstream os;
  os << "condition means:\n";
  for (const auto& r : report.means) {
    os << "  " << synth::condition_name(r.condition) << ":";
    if (r.component_erle_db) os << " component_erle(white-box)=" << cell(r.component_erle_db) << " dB";
    if (r.speech_distortion_db) os << " speech_distortion=" << cell(r.speech_distortion_db) << " dB";
    if (r.erle_db) os << " erle=" << cell(r.erle_db) << " dB";
    if (r.deviation_db) os << " deviation=" << cell(r.deviation_db) << " dB";
    os << "\n";
  }
  if (!report.errors.empty()) {
    os << "errors:\n";
    for (const auto& e : report.errors) os << "  " << e << "\n";
  }
  return os.str();
}

}  // namespace aeslab::metrics
