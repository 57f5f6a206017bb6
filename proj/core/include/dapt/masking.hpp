// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "dapt/corpus.hpp"
#include "dapt/rng.hpp"
#include "dapt/vocab.hpp"

namespace dapt {

enum class MaskAction { MaskToken, RandomToken, Keep };
enum class SpanSource { Token, Geometric, NounPhrase };

struct MaskSpan {
  int start = 0;
  int end = 0;  // inclusive
  MaskAction action = MaskAction::MaskToken;
  SpanSource source = SpanSource::Token;
};

// Disjoint spans over non-special positions. budget_used counts every masked
// position and never exceeds the budget rule.
struct MaskPlan {
  std::vector<MaskSpan> spans;     // sorted by start
  std::vector<int> positions;      // sorted union of span positions
  int budget_used = 0;
};

struct MaskConfig {
  double rate = 0.15;
  double p_mask = 0.8;
  double p_random = 0.1;
  double p_keep = 0.1;
  double geo_p = 0.2;
  int max_span_len = 10;
  double alpha = 0.8;  // noun-phrase sampling ratio, np scheme only

  void validate() const;
};

// max(1, round(rate * maskable_length))
int mask_budget(int maskable_length, double rate);

// Geometric on support {1..max_span_len}: P(l) = p(1-p)^(l-1) / Z.
int sample_span_length(const MaskConfig& cfg, Rng& rng);

// Budget-many positions uniform without replacement, one action each.
MaskPlan sample_token_mask(const FlatSequence& seq, const MaskConfig& cfg, Rng& rng);

// Contiguous spans of clipped-geometric length, uniform starts; spans that
// would cover specials or overlap are rejected, a span longer than the
// remaining budget is truncated to it; stops at the budget or after 100
// consecutive rejections. One action per span.
MaskPlan sample_span_mask(const FlatSequence& seq, const MaskConfig& cfg, Rng& rng);

// Per span draw: with probability alpha a weight-proportional noun-phrase
// span (rejected on any conflict), otherwise the geometric scheme. Empty
// distributions and alpha = 0 reduce to sample_span_mask exactly.
MaskPlan sample_np_mask(const FlatSequence& seq, const NounPhraseDistribution& npdist,
                        const MaskConfig& cfg, Rng& rng);

// 80/10/10 corruption; random tokens follow the training-corpus unigram
// distribution. The input sequence is not modified.
std::vector<int> apply_mask(const FlatSequence& seq, const MaskPlan& plan, const Vocab& vocab,
                            Rng& rng);

// Normalized clipped-geometric mass function, index l-1 -> P(l).
std::vector<double> clipped_geometric_pmf(double p, int max_len);

}  // namespace dapt
