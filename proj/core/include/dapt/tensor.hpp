// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "dapt/rng.hpp"

namespace dapt {

struct TensorImpl {
  std::vector<int> dims;
  std::vector<double> value;
  std::vector<double> grad;  // allocated iff requires_grad
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

std::string shape_str(const std::vector<int>& dims);

// Dense row-major tensor of 64-bit floats. Copies share storage; use clone()
// for an independent buffer. Scalars are rank 0 with one element.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> dims, double fill = 0.0, bool requires_grad = false);

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor from(std::vector<int> dims, std::vector<double> values, bool requires_grad = false);
  static Tensor randn(std::vector<int> dims, Rng& rng, double stddev, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }
  const std::vector<int>& dims() const { return impl_->dims; }
  int rank() const { return static_cast<int>(impl_->dims.size()); }
  std::size_t numel() const { return impl_->value.size(); }
  bool is_scalar() const { return defined() && numel() == 1 && impl_->dims.empty(); }

  // rank-2 accessors
  int rows() const { return impl_->dims[0]; }
  int cols() const { return impl_->dims[1]; }

  double* data() { return impl_->value.data(); }
  const double* data() const { return impl_->value.data(); }
  double* grad() { return impl_->grad.data(); }
  const double* grad() const { return impl_->grad.data(); }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) {
    impl_->requires_grad = rg;
    if (rg) impl_->ensure_grad();
  }

  double value() const;  // scalar only

  double at(int i) const { return impl_->value[static_cast<std::size_t>(i)]; }
  double& at(int i) { return impl_->value[static_cast<std::size_t>(i)]; }
  double at(int i, int j) const { return impl_->value[static_cast<std::size_t>(i) * cols() + j]; }
  double& at(int i, int j) { return impl_->value[static_cast<std::size_t>(i) * cols() + j]; }

  Tensor clone() const;

  std::shared_ptr<TensorImpl> impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

}  // namespace dapt
