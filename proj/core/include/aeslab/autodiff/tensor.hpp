#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "aeslab/common.hpp"

namespace aeslab::ad {

// Dense row-major tensor of 64-bit floats. Training numerics are double
// throughout; a float32 evaluation path exists in the inference kernels.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    v.assign(numel_of(shape), 0.0);
  }
  Tensor(std::vector<int> s, std::vector<double> data)
      : shape(std::move(s)), v(std::move(data)) {
    if (v.size() != numel_of(shape)) throw NumericError("Tensor: shape/data mismatch");
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) n *= static_cast<size_t>(d);
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor scalar(double x) { return Tensor({1}, {x}); }

  size_t numel() const { return v.size(); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  int rank() const { return static_cast<int>(shape.size()); }

  double& at2(int i, int j) { return v[static_cast<size_t>(i) * dim(1) + j]; }
  double at2(int i, int j) const { return v[static_cast<size_t>(i) * dim(1) + j]; }
  double& at3(int i, int j, int k) {
    return v[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
  }
  double at3(int i, int j, int k) const {
    return v[(static_cast<size_t>(i) * dim(1) + j) * dim(2) + k];
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  std::string shape_str() const;
  bool finite() const;
};

}  // namespace aeslab::ad
