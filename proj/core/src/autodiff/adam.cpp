#include "aeslab/autodiff/adam.hpp"

#include <cmath>

namespace aeslab::ad {

void adam_step(std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads, AdamState& state) {
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& [name, w] : params) {
    const auto git = grads.find(name);
    if (git == grads.end()) continue;
    const Tensor& g = git->second;
    if (!g.same_shape(w)) {
      throw NumericError("adam_step: gradient shape mismatch for " + name);
    }
    Tensor& m = state.m.try_emplace(name, Tensor(w.shape)).first->second;
    Tensor& v = state.v.try_emplace(name, Tensor(w.shape)).first->second;
    for (size_t i = 0; i < w.numel(); ++i) {
      m.v[i] = state.beta1 * m.v[i] + (1.0 - state.beta1) * g.v[i];
      v.v[i] = state.beta2 * v.v[i] + (1.0 - state.beta2) * g.v[i] * g.v[i];
      const double mhat = m.v[i] / bc1;
      const double vhat = v.v[i] / bc2;
      w.v[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace aeslab::ad
