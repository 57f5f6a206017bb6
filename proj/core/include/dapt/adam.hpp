// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

#include "dapt/tensor.hpp"

namespace dapt {

struct AdamConfig {
  double lr = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators, aligned index-for-index with the
// parameter list handed to adam_step.
struct AdamState {
  uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  bool initialized() const { return !m.empty(); }
  void init(const std::vector<NamedTensor>& params);
};

// Standard bias-corrected Adam update, reading gradients from each tensor's
// accumulator. Throws "gradient overflow" on non-finite gradients.
void adam_step(std::vector<NamedTensor>& params, AdamState& state, const AdamConfig& cfg);

void zero_grads(std::vector<NamedTensor>& params);

}  // namespace dapt
