// SPDX-License-Identifier: Apache-2.0
#include "dapt/encoder.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dapt {

namespace {
constexpr double kInitStd = 0.02;
constexpr double kMaskedScore = -1e30;  // exp() underflows to exactly 0
}  // namespace

void EncoderConfig::validate() const {
  if (vocab_size < 1) throw std::invalid_argument("encoder config: vocab_size must be >= 1");
  if (d_model < 1 || n_heads < 1 || n_layers < 1 || d_ff < 1 || max_positions < 1)
    throw std::invalid_argument("encoder config: all dims must be >= 1");
  if (d_model % n_heads != 0)
    throw std::invalid_argument("encoder config: d_model must be divisible by n_heads");
  if (layer_norm_eps <= 0.0) throw std::invalid_argument("encoder config: layer_norm_eps must be > 0");
  if (sbo_max_span < 1) throw std::invalid_argument("encoder config: sbo_max_span must be >= 1");
}

EncoderParams EncoderParams::init(const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  const int d = cfg.d_model;
  EncoderParams p;
  p.config = cfg;
  p.token_emb = Tensor::randn({cfg.vocab_size, d}, rng, kInitStd, true);
  p.pos_emb = Tensor::randn({cfg.max_positions, d}, rng, kInitStd, true);
  for (int l = 0; l < cfg.n_layers; ++l) {
    LayerParams lp;
    lp.attn.wq = Tensor::randn({d, d}, rng, kInitStd, true);
    lp.attn.wk = Tensor::randn({d, d}, rng, kInitStd, true);
    lp.attn.wv = Tensor::randn({d, d}, rng, kInitStd, true);
    lp.attn.wo = Tensor::randn({d, d}, rng, kInitStd, true);
    lp.ln1_gain = Tensor({d}, 1.0, true);
    lp.ln1_bias = Tensor({d}, 0.0, true);
    lp.ff_w1 = Tensor::randn({d, cfg.d_ff}, rng, kInitStd, true);
    lp.ff_b1 = Tensor({cfg.d_ff}, 0.0, true);
    lp.ff_w2 = Tensor::randn({cfg.d_ff, d}, rng, kInitStd, true);
    lp.ff_b2 = Tensor({d}, 0.0, true);
    lp.ln2_gain = Tensor({d}, 1.0, true);
    lp.ln2_bias = Tensor({d}, 0.0, true);
    p.layers.push_back(std::move(lp));
  }
  p.sbo.rel_pos = Tensor::randn({cfg.sbo_max_span + 1, d}, rng, kInitStd, true);
  p.sbo.w1 = Tensor::randn({3 * d, d}, rng, kInitStd, true);
  p.sbo.b1 = Tensor({d}, 0.0, true);
  p.sbo.ln1_gain = Tensor({d}, 1.0, true);
  p.sbo.ln1_bias = Tensor({d}, 0.0, true);
  p.sbo.w2 = Tensor::randn({d, d}, rng, kInitStd, true);
  p.sbo.b2 = Tensor({d}, 0.0, true);
  p.sbo.ln2_gain = Tensor({d}, 1.0, true);
  p.sbo.ln2_bias = Tensor({d}, 0.0, true);
  p.out_proj = Tensor::randn({d, cfg.vocab_size}, rng, kInitStd, true);
  return p;
}

std::vector<NamedTensor> EncoderParams::named() const {
  std::vector<NamedTensor> out;
  out.push_back({"token_emb", token_emb});
  out.push_back({"pos_emb", pos_emb});
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    const LayerParams& lp = layers[l];
    out.push_back({pre + "attn.wq", lp.attn.wq});
    out.push_back({pre + "attn.wk", lp.attn.wk});
    out.push_back({pre + "attn.wv", lp.attn.wv});
    out.push_back({pre + "attn.wo", lp.attn.wo});
    out.push_back({pre + "ln1.gain", lp.ln1_gain});
    out.push_back({pre + "ln1.bias", lp.ln1_bias});
    out.push_back({pre + "ff.w1", lp.ff_w1});
    out.push_back({pre + "ff.b1", lp.ff_b1});
    out.push_back({pre + "ff.w2", lp.ff_w2});
    out.push_back({pre + "ff.b2", lp.ff_b2});
    out.push_back({pre + "ln2.gain", lp.ln2_gain});
    out.push_back({pre + "ln2.bias", lp.ln2_bias});
  }
  out.push_back({"sbo.rel_pos", sbo.rel_pos});
  out.push_back({"sbo.w1", sbo.w1});
  out.push_back({"sbo.b1", sbo.b1});
  out.push_back({"sbo.ln1.gain", sbo.ln1_gain});
  out.push_back({"sbo.ln1.bias", sbo.ln1_bias});
  out.push_back({"sbo.w2", sbo.w2});
  out.push_back({"sbo.b2", sbo.b2});
  out.push_back({"sbo.ln2.gain", sbo.ln2_gain});
  out.push_back({"sbo.ln2.bias", sbo.ln2_bias});
  out.push_back({"out_proj", out_proj});
  return out;
}

Tensor encoder_forward(Tape& tape, const EncoderParams& params, const std::vector<int>& token_ids,
                       const ForwardOptions& opt) {
  const EncoderConfig& cfg = params.config;
  const int n = static_cast<int>(token_ids.size());
  if (n < 1) throw std::invalid_argument("encoder_forward: empty sequence");
  if (n > cfg.max_positions)
    throw std::invalid_argument("encoder_forward: sequence length " + std::to_string(n) +
                                " exceeds max_positions " + std::to_string(cfg.max_positions));
  const int valid = opt.valid_len < 0 ? n : opt.valid_len;
  if (valid < 1 || valid > n) throw std::invalid_argument("encoder_forward: bad valid_len");

  std::vector<int> positions(static_cast<std::size_t>(n));
  std::iota(positions.begin(), positions.end(), 0);
  Tensor h = add(tape, embedding_lookup(tape, params.token_emb, token_ids),
                 embedding_lookup(tape, params.pos_emb, positions));
  for (const auto& [pos, emb] : opt.inject) h = add_to_row(tape, h, pos, emb);

  // additive attention mask, shared by all layers and heads
  Tensor mask({n, n}, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const bool ok = cfg.diag_attention ? i == j : j < valid;
      if (!ok) mask.at(i, j) = kMaskedScore;
    }

  const int dh = cfg.d_model / cfg.n_heads;
  const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
  for (const LayerParams& lp : params.layers) {
    Tensor q = matmul(tape, h, lp.attn.wq);
    Tensor k = matmul(tape, h, lp.attn.wk);
    Tensor v = matmul(tape, h, lp.attn.wv);
    std::vector<Tensor> heads;
    for (int hd = 0; hd < cfg.n_heads; ++hd) {
      Tensor qh = slice_cols(tape, q, hd * dh, dh);
      Tensor kh = slice_cols(tape, k, hd * dh, dh);
      Tensor vh = slice_cols(tape, v, hd * dh, dh);
      Tensor scores = add(tape, scale(tape, matmul_transposed(tape, qh, kh), inv_sqrt_dh), mask);
      heads.push_back(matmul(tape, softmax(tape, scores), vh));
    }
    Tensor attn_out = matmul(tape, concat(tape, heads), lp.attn.wo);
    h = layer_norm(tape, add(tape, h, attn_out), lp.ln1_gain, lp.ln1_bias, cfg.layer_norm_eps);

    Tensor ff = gelu(tape, add(tape, matmul(tape, h, lp.ff_w1), lp.ff_b1));
    ff = add(tape, matmul(tape, ff, lp.ff_w2), lp.ff_b2);
    h = layer_norm(tape, add(tape, h, ff), lp.ln2_gain, lp.ln2_bias, cfg.layer_norm_eps);
  }
  return h;
}

Tensor span_boundary_repr(Tape& tape, const EncoderParams& params, const Tensor& hidden, int s,
                          int e, int i) {
  const int n = hidden.rows();
  if (s < 1 || e > n - 2 || s > e)
    throw std::invalid_argument("span_boundary_repr: boundary unavailable for span (" +
                                std::to_string(s) + "," + std::to_string(e) + ") in length " +
                                std::to_string(n));
  if (i < s || i > e)
    throw std::invalid_argument("span_boundary_repr: position " + std::to_string(i) +
                                " outside span");
  const int rel = i - s + 1;
  if (rel > params.config.sbo_max_span)
    throw std::invalid_argument("span_boundary_repr: relative position " + std::to_string(rel) +
                                " exceeds sbo_max_span");

  const SboParams& sp = params.sbo;
  Tensor z = concat(tape, {select_row(tape, hidden, s - 1), select_row(tape, hidden, e + 1),
                           select_row(tape, sp.rel_pos, rel)});
  const double eps = params.config.layer_norm_eps;
  z = layer_norm(tape, gelu(tape, add(tape, matmul(tape, z, sp.w1), sp.b1)), sp.ln1_gain,
                 sp.ln1_bias, eps);
  z = layer_norm(tape, gelu(tape, add(tape, matmul(tape, z, sp.w2), sp.b2)), sp.ln2_gain,
                 sp.ln2_bias, eps);
  return z;
}

Tensor pooled_repr(Tape& tape, const Tensor& hidden) { return select_row(tape, hidden, 0); }

}  // namespace dapt
