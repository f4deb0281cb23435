#include "aeslab/model/complexity.hpp"

#include <cmath>
#include <sstream>

namespace aeslab::model {

int64_t count_params(const CrnModel& model) {
  int64_t n = 0;
  for (const auto& [name, t] : model.params()) n += static_cast<int64_t>(t.numel());
  return n;
}

namespace {

ComplexityRow conv_row(const ConvPlan& c) {
  ComplexityRow r;
  r.name = c.name;
  r.kind = c.transposed ? "deconv" : "conv";
  r.params = static_cast<int64_t>(c.taps) * c.cin * c.cout + c.cout;
  // Transposed convs touch each input position once per tap; plain convs each
  // output position. Both reduce to len * taps * cin * cout with len being the
  // denser side.
  const int64_t len = c.transposed ? c.in_len : c.out_len;
  r.macs_per_frame = len * static_cast<int64_t>(c.taps) * c.cin * c.cout;
  return r;
}

ComplexityRow act_row(const std::string& name, int64_t elems) {
  ComplexityRow r;
  r.name = name + ".act";
  r.kind = "act";
  r.act_per_frame = elems;
  return r;
}

}  // namespace

ComplexityReport count_flops(const CrnModel& model, double frame_rate) {
  const NetPlan& p = model.plan();
  ComplexityReport rep;
  rep.model_name = "crn";

  auto add_conv = [&](const ConvPlan& c, bool activated) {
    rep.rows.push_back(conv_row(c));
    if (activated) {
      rep.rows.push_back(act_row(c.name, static_cast<int64_t>(c.out_len) * c.cout));
    }
  };

  for (const auto& c : p.encoder) add_conv(c, c.activated);
  if (p.bn_in) add_conv(*p.bn_in, true);
  for (const auto& g : p.gru_layers) {
    ComplexityRow r;
    r.name = g.prefix;
    r.kind = "rnn";
    // Per group: three gates of (chunk x hidden) input and (hidden x hidden)
    // recurrent weights plus per-gate bias.
    r.params = static_cast<int64_t>(g.groups) *
               (3LL * (static_cast<int64_t>(g.chunk) * g.hidden +
                       static_cast<int64_t>(g.hidden) * g.hidden + g.hidden));
    r.macs_per_frame = static_cast<int64_t>(g.groups) *
                       (3LL * (static_cast<int64_t>(g.chunk) * g.hidden +
                               static_cast<int64_t>(g.hidden) * g.hidden));
    // Gate nonlinearities (3H) and elementwise recurrence updates (4H).
    r.act_per_frame = static_cast<int64_t>(g.groups) * 7LL * g.hidden;
    rep.rows.push_back(r);
  }
  for (const auto& l : p.lstm_layers) {
    ComplexityRow r;
    r.name = l.name;
    r.kind = "rnn";
    r.params = static_cast<int64_t>(l.taps) * l.cin * 4 * l.hidden +
               static_cast<int64_t>(l.taps) * l.hidden * 4 * l.hidden + 4LL * l.hidden;
    r.macs_per_frame =
        static_cast<int64_t>(l.len) * l.taps * 4 * l.hidden * (l.cin + l.hidden);
    // Four gate nonlinearities, tanh(c), and four elementwise update ops.
    r.act_per_frame = static_cast<int64_t>(l.len) * 9LL * l.hidden;
    rep.rows.push_back(r);
  }
  if (p.bn_out) add_conv(*p.bn_out, true);
  for (const auto& dw : p.skips) {
    ComplexityRow r;
    r.name = dw.name;
    r.kind = "depthwise";
    r.params = static_cast<int64_t>(dw.taps) * dw.channels + dw.channels;
    r.macs_per_frame = static_cast<int64_t>(dw.len) * dw.taps * dw.channels;
    rep.rows.push_back(r);
  }
  for (const auto& c : p.decoder) add_conv(c, c.activated);

  rep.parameter_count = count_params(model);
  int64_t macs = 0, acts = 0, row_params = 0;
  for (const auto& r : rep.rows) {
    macs += r.macs_per_frame;
    acts += r.act_per_frame;
    row_params += r.params;
  }
  if (row_params != rep.parameter_count) {
    throw NumericError("count_flops: per-layer params (" + std::to_string(row_params) +
                       ") disagree with registry (" +
                       std::to_string(rep.parameter_count) + ")");
  }
  rep.flops_per_frame = macs + acts;
  rep.flops_per_second =
      static_cast<int64_t>(std::llround(static_cast<double>(rep.flops_per_frame) * frame_rate));
  return rep;
}

std::vector<ReferenceEntry> reference_models() {
  return {{"FCRN (reference)", 3.7, 12840.0}, {"CRUSE (reference)", 1.9, 685.0}};
}

namespace {

std::string millions(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f M", v / 1e6);
  return buf;
}

}  // namespace

std::string complexity_table(const std::vector<ComplexityReport>& reports) {
  std::ostringstream os;
  os << "Model              | # Parameters | #FLOPS      | FLOPS ratio vs first\n";
  os << "-------------------+--------------+-------------+---------------------\n";
  const double base =
      reports.empty() ? 1.0 : static_cast<double>(reports.front().flops_per_second);
  for (const auto& r : reports) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s | %12s | %11s | %.3f\n",
                  r.model_name.c_str(),
                  millions(static_cast<double>(r.parameter_count)).c_str(),
                  millions(static_cast<double>(r.flops_per_second)).c_str(),
                  static_cast<double>(r.flops_per_second) / base);
    os << line;
  }
  for (const auto& ref : reference_models()) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-18s | %9.2f M  | %9.0f M | -\n",
                  ref.name.c_str(), ref.params_millions, ref.flops_millions);
    os << line;
  }
  return os.str();
}

std::string complexity_csv(const std::vector<ComplexityReport>& reports) {
  std::ostringstream os;
  os << "model,parameters,flops_per_frame,flops_per_second\n";
  for (const auto& r : reports) {
    os << r.model_name << "," << r.parameter_count << "," << r.flops_per_frame << ","
       << r.flops_per_second << "\n";
  }
  for (const auto& ref : reference_models()) {
    os << ref.name << "," << static_cast<int64_t>(ref.params_millions * 1e6) << ",,"
       << static_cast<int64_t>(ref.flops_millions * 1e6) << "\n";
  }
  return os.str();
}

}  // namespace aeslab::model
