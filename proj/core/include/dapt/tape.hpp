// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "dapt/tensor.hpp"

namespace dapt {

// Append-only record of differentiable operations. Nodes are topologically
// ordered by construction; backward() visits them exactly once in reverse.
// A tape is single-use: a second backward() without new recordings throws.
class Tape {
 public:
  // fn reads the output's grad and accumulates into input grads.
  void record(std::function<void()> fn, std::vector<std::shared_ptr<TensorImpl>> tracked);

  // Zeroes every tracked grad accumulator, seeds d(loss)/d(loss)=1 and runs
  // the recorded nodes in reverse. loss must be scalar.
  void backward(const Tensor& loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  std::vector<std::function<void()>> nodes_;
  std::vector<std::shared_ptr<TensorImpl>> tracked_;
  bool consumed_ = false;
  std::size_t nodes_at_consume_ = 0;
};

}  // namespace dapt
