// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "dapt/tape.hpp"
#include "dapt/tensor.hpp"

namespace dapt {

// Differentiable operations. Inputs are rank-1 or rank-2 unless noted; every
// op validates shapes and records its backward rule on the tape when any
// input requires a gradient. Forward values are plain 64-bit arithmetic.

// a [n x k] or [k], b [k x m] -> [n x m] / [m]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// a [n x k] or [k], b [m x k] -> a * b^T, [n x m] / [m]
Tensor matmul_transposed(Tape& tape, const Tensor& a, const Tensor& b);
// same shape, or b rank-1 broadcast over the rows of a
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double c);
// last-dim softmax
Tensor softmax(Tape& tape, const Tensor& a);
// last-dim normalization followed by gain/bias, eps > 0
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain, const Tensor& bias, double eps);
// tanh approximation, constant 0.044715
Tensor gelu(Tape& tape, const Tensor& x);
// table [v x d], ids in [0, v) -> [n x d]
Tensor embedding_lookup(Tape& tape, const Tensor& table, const std::vector<int>& ids);
// last-dim concatenation of rank-1 vectors or rank-2 blocks with equal rows
Tensor concat(Tape& tape, const std::vector<Tensor>& parts);
// rank-1 u, v of equal length -> scalar; zero-distance subgradient is 0
Tensor euclidean_distance(Tape& tape, const Tensor& u, const Tensor& v);
// rank-1 logits -> scalar -log softmax(logits)[target]
Tensor cross_entropy(Tape& tape, const Tensor& logits, int target);
// row extraction [n x d] -> [d]
Tensor select_row(Tape& tape, const Tensor& a, int row);
// column slice [n x d] -> [n x len]
Tensor slice_cols(Tape& tape, const Tensor& a, int start, int len);
// adds rank-1 v onto one row of a
Tensor add_to_row(Tape& tape, const Tensor& a, int row, const Tensor& v);
Tensor sum(Tape& tape, const Tensor& a);  // -> scalar
// elementwise min(a, cap); derivative 0 where a >= cap
Tensor clip_max(Tape& tape, const Tensor& a, double cap);
// mean binary cross-entropy over independent sigmoid scores, targets in {0,1}
Tensor sigmoid_bce(Tape& tape, const Tensor& logits, const std::vector<double>& targets);

}  // namespace dapt
