#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "aeslab/autodiff/tensor.hpp"

namespace aeslab::ad {

class Tape;

struct ValueRef {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are appended in evaluation order, which is already
// a topological order, so backward() is a single reverse sweep.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, int node_id)>;

  ValueRef constant(Tensor value) { return push(std::move(value), {}, nullptr, false); }

  // Leaf with gradient tracking; `name` registers it as a parameter.
  ValueRef param(Tensor value, const std::string& name) {
    ValueRef r = push(std::move(value), {}, nullptr, true);
    params_[name] = r.id;
    return r;
  }

  ValueRef push(Tensor value, std::vector<int> parents, BackwardFn fn,
                bool force_requires_grad = false);

  const Tensor& value(ValueRef r) const { return nodes_[static_cast<size_t>(r.id)].value; }
  const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  bool requires_grad(int id) const { return nodes_[static_cast<size_t>(id)].requires_grad; }

  // Valid after backward(); zero tensor for untouched nodes.
  Tensor& grad(ValueRef r) { return grad(r.id); }
  Tensor& grad(int id);

  // Scalar loss only. Seeds d(loss)/d(loss) = 1 and sweeps the tape.
  void backward(ValueRef loss);

  // Gradients for every registered parameter; parameters without a path to
  // the loss report zeros.
  std::map<std::string, Tensor> parameter_gradients();

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool grad_alloc = false;
    std::vector<int> parents;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  std::map<std::string, int> params_;
};

}  // namespace aeslab::ad
