// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "dapt/ops.hpp"
#include "dapt/rng.hpp"
#include "dapt/tape.hpp"
#include "dapt/tensor.hpp"

namespace dapt {

struct EncoderConfig {
  int vocab_size = 0;
  int d_model = 64;
  int n_heads = 4;
  int n_layers = 2;
  int d_ff = 128;
  int max_positions = 128;
  double layer_norm_eps = 1e-5;
  int sbo_max_span = 10;
  // With diagonal attention each position attends only to itself, making the
  // whole encoder position-wise. Test hook for analytic-zero properties.
  bool diag_attention = false;

  void validate() const;
};

struct AttentionParams {
  Tensor wq, wk, wv, wo;  // each [d_model x d_model]
};

struct LayerParams {
  AttentionParams attn;
  Tensor ln1_gain, ln1_bias;
  Tensor ff_w1, ff_b1, ff_w2, ff_b2;
  Tensor ln2_gain, ln2_bias;
};

// Boundary-pair MLP: concat(h_left, h_right, rel_pos) -> two GeLU+layer_norm
// stages back to d_model.
struct SboParams {
  Tensor rel_pos;  // [sbo_max_span + 1 x d_model], row index i-s+1
  Tensor w1, b1, ln1_gain, ln1_bias;
  Tensor w2, b2, ln2_gain, ln2_bias;
};

struct EncoderParams {
  EncoderConfig config;
  Tensor token_emb;  // [vocab_size x d_model]
  Tensor pos_emb;    // [max_positions x d_model]
  std::vector<LayerParams> layers;
  SboParams sbo;
  Tensor out_proj;   // [d_model x vocab_size], untied

  static EncoderParams init(const EncoderConfig& cfg, Rng& rng);

  // Every learnable tensor in a fixed order; the order defines the optimizer
  // and checkpoint layout.
  std::vector<NamedTensor> named() const;
};

struct ForwardOptions {
  int valid_len = -1;  // positions >= valid_len are excluded from attention
  std::vector<std::pair<int, Tensor>> inject;  // additive per-position embeddings
};

// Token+position embeddings through n_layers of post-norm self-attention and
// feed-forward blocks. Deterministic; no dropout.
Tensor encoder_forward(Tape& tape, const EncoderParams& params, const std::vector<int>& token_ids,
                       const ForwardOptions& opt = {});

// y for position i of masked span (s,e): depends only on rows s-1 and e+1 of
// hidden plus the relative-position embedding.
Tensor span_boundary_repr(Tape& tape, const EncoderParams& params, const Tensor& hidden, int s,
                          int e, int i);

// [CLS] row
Tensor pooled_repr(Tape& tape, const Tensor& hidden);

}  // namespace dapt
