#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aeslab/autodiff/ops.hpp"
#include "aeslab/autodiff/tape.hpp"
#include "aeslab/autodiff/tensor.hpp"
#include "aeslab/model/config.hpp"

namespace aeslab::model {

// Static layer plan derived from a CrnConfig; drives parameter creation, both
// forward paths, and the complexity accounting so they cannot diverge.
struct ConvPlan {
  std::string name;
  int in_len = 0;
  int out_len = 0;
  int taps = 0;
  int cin = 0;
  int cout = 0;
  int stride = 1;
  bool transposed = false;
  bool activated = true;  // ELU after the layer
};

struct DepthwisePlan {
  std::string name;
  int len = 0;
  int taps = 0;
  int channels = 0;
};

struct GruLayerPlan {
  std::string prefix;  // parameters are <prefix>.g<k>.{w,u,b}
  int groups = 0;
  int chunk = 0;   // input width per group
  int hidden = 0;  // = chunk (width-preserving)
};

struct ConvLstmPlan {
  std::string name;
  int len = 0;
  int cin = 0;
  int hidden = 0;
  int taps = 0;
};

struct NetPlan {
  CrnConfig config;
  std::vector<ConvPlan> encoder;      // enc1..enc6
  std::vector<DepthwisePlan> skips;   // skip264, skip132, skip66
  // indices into encoder of each skip source (output of that layer)
  std::vector<int> skip_sources;
  std::optional<ConvPlan> bn_in;      // grouped-GRU bottleneck entry conv
  std::vector<GruLayerPlan> gru_layers;
  std::optional<ConvPlan> bn_out;     // restore conv (3F kernels)
  std::vector<ConvLstmPlan> lstm_layers;
  std::vector<ConvPlan> decoder;      // dec1..dec5 + out
};

NetPlan build_plan(const CrnConfig& config);

// Recurrent state owned by the caller, one per audio stream.
struct StreamState {
  std::vector<std::vector<double>> gru;     // flattened [layer*groups][hidden]
  std::vector<std::vector<double>> lstm_h;  // per ConvLSTM layer [len*hidden]
  std::vector<std::vector<double>> lstm_c;
};

// A built CRN. Immutable once constructed except for explicit parameter
// replacement (checkpoint load); shareable across threads for inference.
class CrnModel {
 public:
  static CrnModel build(const CrnConfig& config, uint64_t seed);

  const CrnConfig& config() const { return plan_.config; }
  const NetPlan& plan() const { return plan_; }

  const std::map<std::string, ad::Tensor>& params() const { return params_; }
  std::map<std::string, ad::Tensor>& mutable_params() { return params_; }
  void set_params(const std::map<std::string, ad::Tensor>& p);

  // --- training path (tape) ---
  struct TapeBindings {
    std::map<std::string, ad::ValueRef> p;
  };
  TapeBindings bind(ad::Tape& tape) const;
  // features: [T x L x 4] -> mask tensor [T x L x 2]; fresh zero state.
  ad::ValueRef forward_tape(ad::Tape& tape, const TapeBindings& b,
                            const ad::Tensor& features) const;

  // --- inference path (no tape, streaming, chunk-exact) ---
  StreamState make_state() const;
  // features: [T x L x 4] -> [T x L x 2]. Computes in Real (double or float).
  template <typename Real>
  ad::Tensor forward_inference(const ad::Tensor& features, StreamState& state) const;

 private:
  NetPlan plan_;
  std::map<std::string, ad::Tensor> params_;
};

}  // namespace aeslab::model
