#pragma once

#include <string>
#include <vector>

#include "aeslab/common.hpp"

namespace aeslab::model {

enum class Bottleneck { kConvLstm2, kGroupedGru2, kGroupedGru1 };

// The ablation ladder. Each stage is the previous configuration with exactly
// one documented change.
enum class AblationStage {
  kFcrn15,              // ConvLSTM2 bottleneck, F=32, N=12
  kM1GroupedGru,        // gGRU bottleneck (8 then 6 groups) for ConvLSTM
  kM2KernelCount,       // F=40 (first gGRU layer becomes 10 groups)
  kM3KernelSize,        // N=3
  kM4InputCompression,  // magnitude-compressed encoder inputs
  kM5SingleGruLayer,    // second gGRU layer removed (= gGCRN16)
};

std::string stage_name(AblationStage s);
AblationStage stage_from_name(const std::string& name);
std::vector<AblationStage> all_stages();

struct CrnConfig {
  int kernel_count = 40;  // F
  int kernel_size = 3;    // N (frequency taps; the time extent is 1)
  Bottleneck bottleneck = Bottleneck::kGroupedGru1;
  int groups_layer1 = 10;
  int groups_layer2 = 6;
  bool input_compression = true;
  int feature_len = 264;  // L
  std::vector<int> encoder_strides = {1, 2, 1, 2, 1, 2};

  // Calibration: the last encoder layer widens to bottleneck_in_channels so
  // the recurrent bottleneck carries most of the network. Expressed as
  // F * 33/4 and stored explicitly; stage_config() fills it in.
  int bottleneck_in_channels = 330;

  int stride_product() const {
    int p = 1;
    for (int s : encoder_strides) p *= s;
    return p;
  }
  int bottleneck_len() const { return feature_len / stride_product(); }
  int bottleneck_width() const { return bottleneck_len() * kernel_count; }
  int restore_channels() const { return 3 * kernel_count; }  // C_rb of the gGRU variants

  void validate() const;
};

// Reference channel calibration used by every stage: c_bn = 33*F/4.
int calibrated_bottleneck_in(int kernel_count);

// Config for a ladder stage.
CrnConfig stage_config(AblationStage stage);
CrnConfig apply_ablation(AblationStage stage);  // alias of stage_config

// A reduced-width variant for fast experiments: same topology, smaller F.
// groups must divide bottleneck_len()*F.
CrnConfig micro_config(int kernel_count, int groups);

}  // namespace aeslab::model
