#include "aeslab/autodiff/tape.hpp"

namespace aeslab::ad {

ValueRef Tape::push(Tensor value, std::vector<int> parents, BackwardFn fn,
                    bool force_requires_grad) {
  if (!value.finite()) {
    throw NumericError("tape: non-finite value produced at node " +
                       std::to_string(nodes_.size()));
  }
  Node n;
  n.requires_grad = force_requires_grad;
  for (int p : parents) {
    if (nodes_[static_cast<size_t>(p)].requires_grad) n.requires_grad = true;
  }
  n.value = std::move(value);
  n.parents = std::move(parents);
  n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return ValueRef{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad(int id) {
  Node& n = nodes_[static_cast<size_t>(id)];
  if (!n.grad_alloc) {
    n.grad = Tensor(n.value.shape);
    n.grad_alloc = true;
  }
  return n.grad;
}

void Tape::backward(ValueRef loss) {
  if (!loss.valid()) throw NumericError("backward: invalid loss node");
  const Node& loss_node = nodes_[static_cast<size_t>(loss.id)];
  if (loss_node.value.numel() != 1) {
    throw NumericError("backward: loss must be scalar, got " +
                       loss_node.value.shape_str());
  }
  grad(loss.id).v[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<size_t>(id)];
    if (!n.requires_grad || !n.grad_alloc || !n.backward) continue;
    n.backward(*this, id);
  }
}

std::map<std::string, Tensor> Tape::parameter_gradients() {
  std::map<std::string, Tensor> out;
  for (const auto& [name, id] : params_) {
    Node& n = nodes_[static_cast<size_t>(id)];
    out[name] = n.grad_alloc ? n.grad : Tensor(n.value.shape);
  }
  return out;
}

}  // namespace aeslab::ad
