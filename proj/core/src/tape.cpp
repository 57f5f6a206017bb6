// SPDX-License-Identifier: Apache-2.0
#include "dapt/tape.hpp"

#include <algorithm>
#include <stdexcept>

namespace dapt {

void Tape::record(std::function<void()> fn, std::vector<std::shared_ptr<TensorImpl>> tracked) {
  nodes_.push_back(std::move(fn));
  for (auto& t : tracked) {
    if (t && t->requires_grad) tracked_.push_back(std::move(t));
  }
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be scalar");
  if (consumed_ && nodes_.size() == nodes_at_consume_)
    throw std::runtime_error("backward: tape already consumed");

  for (auto& t : tracked_) std::fill(t->grad.begin(), t->grad.end(), 0.0);

  auto li = loss.impl();
  li->ensure_grad();
  std::fill(li->grad.begin(), li->grad.end(), 0.0);
  li->grad[0] = 1.0;

  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();

  consumed_ = true;
  nodes_at_consume_ = nodes_.size();
}

}  // namespace dapt
