// SPDX-License-Identifier: Apache-2.0
#include "dapt/tensor.hpp"

#include <numeric>
#include <stdexcept>

namespace dapt {

std::string shape_str(const std::vector<int>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(dims[i]);
  }
  return s + "]";
}

static std::size_t numel_of(const std::vector<int>& dims) {
  std::size_t n = 1;
  for (int d : dims) {
    if (d < 0) throw std::invalid_argument("tensor: negative dim in " + shape_str(dims));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor::Tensor(std::vector<int> dims, double fill, bool requires_grad) {
  impl_ = std::make_shared<TensorImpl>();
  impl_->value.assign(numel_of(dims), fill);
  impl_->dims = std::move(dims);
  impl_->requires_grad = requires_grad;
  if (requires_grad) impl_->ensure_grad();
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  Tensor t(std::vector<int>{}, v, requires_grad);
  return t;
}

Tensor Tensor::from(std::vector<int> dims, std::vector<double> values, bool requires_grad) {
  if (values.size() != numel_of(dims))
    throw std::invalid_argument("tensor: " + std::to_string(values.size()) +
                                " values for shape " + shape_str(dims));
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>();
  t.impl_->dims = std::move(dims);
  t.impl_->value = std::move(values);
  t.impl_->requires_grad = requires_grad;
  if (requires_grad) t.impl_->ensure_grad();
  return t;
}

Tensor Tensor::randn(std::vector<int> dims, Rng& rng, double stddev, bool requires_grad) {
  Tensor t(std::move(dims), 0.0, requires_grad);
  for (auto& v : t.impl_->value) v = rng.normal(0.0, stddev);
  return t;
}

double Tensor::value() const {
  if (numel() != 1) throw std::invalid_argument("tensor: value() on non-scalar " + shape_str(dims()));
  return impl_->value[0];
}

Tensor Tensor::clone() const {
  Tensor t;
  t.impl_ = std::make_shared<TensorImpl>(*impl_);
  return t;
}

}  // namespace dapt
