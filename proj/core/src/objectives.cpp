// SPDX-License-Identifier: Apache-2.0
#include "dapt/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dapt {

void ObjectiveConfig::validate() const {
  if (!use_mlm && !use_sbo && !use_pmo)
    throw std::invalid_argument("objective config: all objectives disabled");
  if (pmo_sign != 1 && pmo_sign != -1)
    throw std::invalid_argument("objective config: pmo_sign must be +1 or -1");
  if (!(pmo_clip > 0.0)) throw std::invalid_argument("objective config: pmo_clip must be > 0");
}

Tensor mlm_loss(Tape& tape, const Tensor& hidden, const MaskPlan& plan,
                const std::vector<int>& original_ids, const Tensor& out_proj) {
  if (plan.positions.empty()) throw std::invalid_argument("mlm_loss: no masked positions");
  Tensor acc;
  for (int t : plan.positions) {
    Tensor logits = matmul(tape, select_row(tape, hidden, t), out_proj);
    Tensor ce = cross_entropy(tape, logits, original_ids[static_cast<std::size_t>(t)]);
    acc = acc.defined() ? add(tape, acc, ce) : ce;
  }
  return scale(tape, acc, 1.0 / static_cast<double>(plan.positions.size()));
}

Tensor sbo_loss(Tape& tape, const EncoderParams& params, const Tensor& hidden,
                const MaskPlan& plan, const std::vector<int>& original_ids) {
  if (plan.positions.empty()) throw std::invalid_argument("sbo_loss: no masked positions");
  Tensor acc;
  for (const auto& span : plan.spans) {
    for (int i = span.start; i <= span.end; ++i) {
      Tensor y = span_boundary_repr(tape, params, hidden, span.start, span.end, i);
      Tensor logits = matmul(tape, y, params.out_proj);
      Tensor ce = cross_entropy(tape, logits, original_ids[static_cast<std::size_t>(i)]);
      acc = acc.defined() ? add(tape, acc, ce) : ce;
    }
  }
  return scale(tape, acc, 1.0 / static_cast<double>(plan.positions.size()));
}

namespace {

void check_plain_position(const std::vector<int>& base_ids, int pos, const Vocab& vocab,
                          const char* what) {
  if (pos < 0 || pos >= static_cast<int>(base_ids.size()))
    throw std::invalid_argument(std::string("impact: ") + what + " position " +
                                std::to_string(pos) + " out of range");
  if (vocab.is_special(base_ids[static_cast<std::size_t>(pos)]))
    throw std::invalid_argument(std::string("impact: ") + what + " position " +
                                std::to_string(pos) + " is a special token");
}

}  // namespace

Tensor impact(Tape& tape, const EncoderParams& params, const std::vector<int>& base_ids,
              int target, const std::vector<int>& perturbed, const Vocab& vocab) {
  check_plain_position(base_ids, target, vocab, "target");
  for (int p : perturbed) {
    if (p == target) throw std::invalid_argument("impact: target is in the perturbed set");
    check_plain_position(base_ids, p, vocab, "perturbed");
  }
  if (perturbed.empty()) return Tensor::scalar(0.0);

  std::vector<int> corrupted1 = base_ids;
  corrupted1[static_cast<std::size_t>(target)] = Vocab::kMask;
  std::vector<int> corrupted2 = corrupted1;
  for (int p : perturbed) corrupted2[static_cast<std::size_t>(p)] = Vocab::kMask;

  Tensor h1 = encoder_forward(tape, params, corrupted1);
  Tensor h2 = encoder_forward(tape, params, corrupted2);
  return euclidean_distance(tape, select_row(tape, h1, target), select_row(tape, h2, target));
}

ImpactMatrix impact_matrix(const EncoderParams& params, const std::vector<int>& base_ids,
                           const Vocab& vocab) {
  const int n = static_cast<int>(base_ids.size());
  if (n < 2) throw std::invalid_argument("impact_matrix: need at least 2 positions");
  ImpactMatrix m(n);
  const int d = params.config.d_model;

  for (int i = 0; i < n; ++i) {
    if (vocab.is_special(base_ids[static_cast<std::size_t>(i)])) continue;
    std::vector<int> corrupted1 = base_ids;
    corrupted1[static_cast<std::size_t>(i)] = Vocab::kMask;
    Tape tape1;
    Tensor h1 = encoder_forward(tape1, params, corrupted1);

    for (int j = 0; j < n; ++j) {
      if (j == i || vocab.is_special(base_ids[static_cast<std::size_t>(j)])) continue;
      std::vector<int> corrupted2 = corrupted1;
      corrupted2[static_cast<std::size_t>(j)] = Vocab::kMask;
      Tape tape2;
      Tensor h2 = encoder_forward(tape2, params, corrupted2);
      double s = 0.0;
      for (int c = 0; c < d; ++c) {
        const double diff = h1.at(i, c) - h2.at(i, c);
        s += diff * diff;
      }
      m.at(i, j) = std::sqrt(s);
    }
  }
  return m;
}

Tensor pmo_loss(Tape& tape, const EncoderParams& params, const std::vector<int>& base_ids,
                const MaskPlan& plan, const std::vector<int>& predicates,
                const ObjectiveConfig& cfg, const Vocab& vocab) {
  if (plan.positions.empty()) throw std::invalid_argument("pmo_loss: no masked positions");
  if (predicates.empty()) return Tensor::scalar(0.0);

  std::vector<int> eligible;
  for (int t : plan.positions)
    if (std::find(predicates.begin(), predicates.end(), t) == predicates.end())
      eligible.push_back(t);
  if (eligible.empty()) return Tensor::scalar(0.0);

  Tensor acc;
  if (cfg.pmo_mode == PmoMode::Exact) {
    for (int t : eligible) {
      Tensor f = impact(tape, params, base_ids, t, predicates, vocab);
      Tensor clipped = clip_max(tape, f, cfg.pmo_clip);
      acc = acc.defined() ? add(tape, acc, clipped) : clipped;
    }
  } else {
    std::vector<int> corrupted1 = base_ids;
    for (int p : plan.positions) corrupted1[static_cast<std::size_t>(p)] = Vocab::kMask;
    std::vector<int> corrupted2 = corrupted1;
    for (int p : predicates) corrupted2[static_cast<std::size_t>(p)] = Vocab::kMask;
    Tensor h1 = encoder_forward(tape, params, corrupted1);
    Tensor h2 = encoder_forward(tape, params, corrupted2);
    for (int t : eligible) {
      Tensor f = euclidean_distance(tape, select_row(tape, h1, t), select_row(tape, h2, t));
      Tensor clipped = clip_max(tape, f, cfg.pmo_clip);
      acc = acc.defined() ? add(tape, acc, clipped) : clipped;
    }
  }
  return scale(tape, acc, static_cast<double>(cfg.pmo_sign) /
                              static_cast<double>(plan.positions.size()));
}

CombinedLoss combined_loss(Tape& tape, const EncoderParams& params, const FlatSequence& seq,
                           const MaskPlan& plan, const std::vector<int>& predicates,
                           const ObjectiveConfig& cfg, const Vocab& vocab, Rng& rng) {
  cfg.validate();
  CombinedLoss out;

  Tensor hidden;
  if (cfg.use_mlm || cfg.use_sbo) {
    const std::vector<int> corrupted = apply_mask(seq, plan, vocab, rng);
    hidden = encoder_forward(tape, params, corrupted);
  }

  Tensor total;
  const auto accumulate = [&](const Tensor& term, double weight) {
    Tensor scaled = scale(tape, term, weight);
    total = total.defined() ? add(tape, total, scaled) : scaled;
  };

  if (cfg.use_mlm) {
    Tensor l = mlm_loss(tape, hidden, plan, seq.token_ids, params.out_proj);
    out.mlm = l.value();
    accumulate(l, cfg.w_mlm);
  }
  if (cfg.use_sbo) {
    Tensor l = sbo_loss(tape, params, hidden, plan, seq.token_ids);
    out.sbo = l.value();
    accumulate(l, cfg.w_sbo);
  }
  if (cfg.use_pmo) {
    Tensor l = pmo_loss(tape, params, seq.token_ids, plan, predicates, cfg, vocab);
    out.pmo = l.value();
    accumulate(l, cfg.w_pmo);
  }
  out.total = total;
  return out;
}

}  // namespace dapt
