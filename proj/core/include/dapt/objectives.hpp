// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "dapt/encoder.hpp"
#include "dapt/masking.hpp"
#include "dapt/tape.hpp"
#include "dapt/vocab.hpp"

namespace dapt {

enum class PmoMode { Exact, Batched };

struct ObjectiveConfig {
  bool use_mlm = true;
  bool use_sbo = false;
  bool use_pmo = false;
  double w_mlm = 1.0;
  double w_sbo = 1.0;
  double w_pmo = 1.0;
  // -1 drives training to maximize the impact, +1 to minimize it.
  int pmo_sign = -1;
  double pmo_clip = 5.0;
  PmoMode pmo_mode = PmoMode::Exact;

  void validate() const;
};

// n x n perturbation impacts; diagonal and special positions are 0.
struct ImpactMatrix {
  int n = 0;
  std::vector<double> values;

  explicit ImpactMatrix(int size = 0) : n(size), values(static_cast<std::size_t>(size) * size, 0.0) {}
  double at(int i, int j) const { return values[static_cast<std::size_t>(i) * n + j]; }
  double& at(int i, int j) { return values[static_cast<std::size_t>(i) * n + j]; }
};

// Mean cross-entropy of the original token at every masked position, scored
// through the vocabulary projection of the corrupted-input hidden states.
Tensor mlm_loss(Tape& tape, const Tensor& hidden, const MaskPlan& plan,
                const std::vector<int>& original_ids, const Tensor& out_proj);

// Same normalization, scoring each masked token through its span boundary
// representation instead of its own hidden state.
Tensor sbo_loss(Tape& tape, const EncoderParams& params, const Tensor& hidden,
                const MaskPlan& plan, const std::vector<int>& original_ids);

// Euclidean distance between the target row under corruption 1 (target
// masked) and corruption 2 (target plus every perturbed position masked).
// Empty perturbation returns exactly 0 with no forward passes. Gradients
// flow through both passes.
Tensor impact(Tape& tape, const EncoderParams& params, const std::vector<int>& base_ids,
              int target, const std::vector<int>& perturbed, const Vocab& vocab);

// Entry (i,j) = impact(target=i, perturbed={j}); the corruption-1 forward of
// row i is computed once and reused across j.
ImpactMatrix impact_matrix(const EncoderParams& params, const std::vector<int>& base_ids,
                           const Vocab& vocab);

// sign * mean over masked positions of the clipped impact of the predicate
// set on each masked token. Masked tokens that are themselves predicates are
// skipped; |Y| stays the full masked count.
Tensor pmo_loss(Tape& tape, const EncoderParams& params, const std::vector<int>& base_ids,
                const MaskPlan& plan, const std::vector<int>& predicates,
                const ObjectiveConfig& cfg, const Vocab& vocab);

struct CombinedLoss {
  Tensor total;
  double mlm = 0.0;
  double sbo = 0.0;
  double pmo = 0.0;
};

// Weighted sum of the enabled objectives, all on the same mask plan; MLM and
// SBO share one forward pass over the corrupted sequence.
CombinedLoss combined_loss(Tape& tape, const EncoderParams& params, const FlatSequence& seq,
                           const MaskPlan& plan, const std::vector<int>& predicates,
                           const ObjectiveConfig& cfg, const Vocab& vocab, Rng& rng);

}  // namespace dapt
