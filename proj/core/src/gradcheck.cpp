// SPDX-License-Identifier: Apache-2.0
#include "dapt/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace dapt {

double finite_difference_check(const std::function<Tensor(Tape&)>& f,
                               std::vector<Tensor> params, double eps) {
  // analytic pass
  std::vector<std::vector<double>> analytic;
  {
    Tape tape;
    Tensor loss = f(tape);
    tape.backward(loss);
    for (const auto& p : params)
      analytic.emplace_back(p.grad(), p.grad() + p.numel());
  }

  // numeric passes run with recording off
  std::vector<bool> saved_rg;
  for (auto& p : params) {
    saved_rg.push_back(p.requires_grad());
    p.set_requires_grad(false);
  }

  auto eval = [&]() {
    Tape tape;
    return f(tape).value();
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* data = params[k].data();
    for (std::size_t i = 0; i < params[k].numel(); ++i) {
      const double saved = data[i];
      data[i] = saved + eps;
      const double up = eval();
      data[i] = saved - eps;
      const double down = eval();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[k][i];
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
      worst = std::max(worst, std::fabs(a - numeric) / denom);
    }
  }

  for (std::size_t k = 0; k < params.size(); ++k) params[k].set_requires_grad(saved_rg[k]);
  return worst;
}

}  // namespace dapt
