#include "aeslab/model/config.hpp"

namespace aeslab::model {

std::string stage_name(AblationStage s) {
  switch (s) {
    case AblationStage::kFcrn15:
      return "fcrn15";
    case AblationStage::kM1GroupedGru:
      return "m1";
    case AblationStage::kM2KernelCount:
      return "m2";
    case AblationStage::kM3KernelSize:
      return "m3";
    case AblationStage::kM4InputCompression:
      return "m4";
    case AblationStage::kM5SingleGruLayer:
      return "m5";
  }
  return "?";
}

AblationStage stage_from_name(const std::string& name) {
  if (name == "fcrn15") return AblationStage::kFcrn15;
  if (name == "m1") return AblationStage::kM1GroupedGru;
  if (name == "m2") return AblationStage::kM2KernelCount;
  if (name == "m3") return AblationStage::kM3KernelSize;
  if (name == "m4") return AblationStage::kM4InputCompression;
  if (name == "m5" || name == "ggcrn16") return AblationStage::kM5SingleGruLayer;
  throw ConfigError("unknown ablation stage: " + name);
}

std::vector<AblationStage> all_stages() {
  return {AblationStage::kFcrn15,           AblationStage::kM1GroupedGru,
          AblationStage::kM2KernelCount,    AblationStage::kM3KernelSize,
          AblationStage::kM4InputCompression, AblationStage::kM5SingleGruLayer};
}

void CrnConfig::validate() const {
  if (kernel_count <= 0 || kernel_size <= 0) {
    throw ConfigError("CrnConfig: kernel count/size must be positive");
  }
  if (encoder_strides.size() != 6) {
    throw ConfigError("CrnConfig: expected 6 encoder layers");
  }
  for (int s : encoder_strides) {
    if (s != 1 && s != 2) throw ConfigError("CrnConfig: strides must be 1 or 2");
  }
  if (feature_len % stride_product() != 0) {
    throw ConfigError("CrnConfig: feature_len " + std::to_string(feature_len) +
                      " not divisible by stride product " +
                      std::to_string(stride_product()));
  }
  if (bottleneck_in_channels <= 0) {
    throw ConfigError("CrnConfig: bottleneck_in_channels must be positive");
  }
  if (bottleneck != Bottleneck::kConvLstm2) {
    const int width = bottleneck_width();
    if (groups_layer1 <= 0 || width % groups_layer1 != 0) {
      throw ConfigError("CrnConfig: bottleneck width " + std::to_string(width) +
                        " not divisible by groups_layer1 " +
                        std::to_string(groups_layer1));
    }
    if (bottleneck == Bottleneck::kGroupedGru2 &&
        (groups_layer2 <= 0 || width % groups_layer2 != 0)) {
      throw ConfigError("CrnConfig: bottleneck width " + std::to_string(width) +
                        " not divisible by groups_layer2 " +
                        std::to_string(groups_layer2));
    }
  }
}

int calibrated_bottleneck_in(int kernel_count) {
  if ((kernel_count * 33) % 4 != 0) {
    throw ConfigError("calibrated_bottleneck_in: 33*F/4 not integral for F=" +
                      std::to_string(kernel_count));
  }
  return kernel_count * 33 / 4;
}

CrnConfig stage_config(AblationStage stage) {
  CrnConfig c;
  c.kernel_count = 32;
  c.kernel_size = 12;
  c.bottleneck = Bottleneck::kConvLstm2;
  c.groups_layer1 = 8;
  c.groups_layer2 = 6;
  c.input_compression = false;

  // Cumulative ladder: fall through from the latest stage down to FCRN15.
  switch (stage) {
    case AblationStage::kM5SingleGruLayer:
      c.bottleneck = Bottleneck::kGroupedGru1;
      [[fallthrough]];
    case AblationStage::kM4InputCompression:
      c.input_compression = true;
      [[fallthrough]];
    case AblationStage::kM3KernelSize:
      c.kernel_size = 3;
      [[fallthrough]];
    case AblationStage::kM2KernelCount:
      c.kernel_count = 40;
      c.groups_layer1 = 10;
      [[fallthrough]];
    case AblationStage::kM1GroupedGru:
      if (c.bottleneck == Bottleneck::kConvLstm2) c.bottleneck = Bottleneck::kGroupedGru2;
      break;
    case AblationStage::kFcrn15:
      break;
  }
  c.bottleneck_in_channels = calibrated_bottleneck_in(c.kernel_count);
  c.validate();
  return c;
}

CrnConfig apply_ablation(AblationStage stage) { return stage_config(stage); }

CrnConfig micro_config(int kernel_count, int groups) {
  CrnConfig c = stage_config(AblationStage::kM5SingleGruLayer);
  c.kernel_count = kernel_count;
  c.groups_layer1 = groups;
  c.bottleneck_in_channels = calibrated_bottleneck_in(kernel_count);
  c.validate();
  return c;
}

}  // namespace aeslab::model
