// SPDX-License-Identifier: Apache-2.0
#include "dapt/adam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dapt {

void AdamState::init(const std::vector<NamedTensor>& params) {
  m.clear();
  v.clear();
  for (const auto& p : params) {
    m.emplace_back(p.tensor.numel(), 0.0);
    v.emplace_back(p.tensor.numel(), 0.0);
  }
}

void adam_step(std::vector<NamedTensor>& params, AdamState& state, const AdamConfig& cfg) {
  if (!state.initialized()) state.init(params);
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam_step: state holds " + std::to_string(state.m.size()) +
                                " tensors, got " + std::to_string(params.size()));

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& t = params[k].tensor;
    if (!t.requires_grad()) continue;
    if (state.m[k].size() != t.numel())
      throw std::invalid_argument("adam_step: shape drift for " + params[k].name);
    double* val = t.data();
    const double* g = t.grad();
    double* mk = state.m[k].data();
    double* vk = state.v[k].data();
    for (std::size_t i = 0; i < t.numel(); ++i) {
      if (!std::isfinite(g[i])) throw std::runtime_error("gradient overflow");
      mk[i] = cfg.beta1 * mk[i] + (1.0 - cfg.beta1) * g[i];
      vk[i] = cfg.beta2 * vk[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = mk[i] / bc1;
      const double vhat = vk[i] / bc2;
      val[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

void zero_grads(std::vector<NamedTensor>& params) {
  for (auto& p : params) {
    if (!p.tensor.requires_grad()) continue;
    double* g = p.tensor.grad();
    std::fill(g, g + p.tensor.numel(), 0.0);
  }
}

}  // namespace dapt
