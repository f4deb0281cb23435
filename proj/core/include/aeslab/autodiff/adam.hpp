#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "aeslab/autodiff/tensor.hpp"

namespace aeslab::ad {

// Standard Adam with bias correction.
struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  uint64_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state);

}  // namespace aeslab::ad
