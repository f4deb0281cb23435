#pragma once

#include <map>
#include <optional>
#include <string>

#include "aeslab/autodiff/adam.hpp"
#include "aeslab/autodiff/tensor.hpp"

namespace aeslab::ad {

// Checkpoint container, little-endian throughout:
//   magic "AESCKPT1"
//   u32 version (1)
//   u32 parameter count, then per parameter:
//     u16 name length, name bytes, u32 rank, i64 dims..., f64 values...
//   u8 has_optimizer; if set: f64 lr/beta1/beta2/eps, u64 step, then first and
//     second moments in parameter order (f64 arrays, same shapes)
//   u8 has_meta; if set: u32 length + UTF-8 JSON blob for trainer bookkeeping
struct Checkpoint {
  std::map<std::string, Tensor> params;
  std::optional<AdamState> optimizer;
  std::string meta_json;  // empty when absent
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace aeslab::ad
