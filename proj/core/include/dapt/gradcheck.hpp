// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "dapt/tape.hpp"
#include "dapt/tensor.hpp"

namespace dapt {

// Compares analytic gradients of f against central finite differences over
// every element of every parameter and returns the worst relative error,
// with denominators floored at 1e-8. f must rebuild the loss from the
// current parameter values on the tape it is handed, deterministically.
double finite_difference_check(const std::function<Tensor(Tape&)>& f,
                               std::vector<Tensor> params, double eps = 1e-5);

}  // namespace dapt
