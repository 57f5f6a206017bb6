// SPDX-License-Identifier: Apache-2.0
#include "dapt/masking.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dapt {

void MaskConfig::validate() const {
  if (!(rate > 0.0 && rate < 1.0)) throw std::invalid_argument("mask config: rate must be in (0,1)");
  if (std::fabs(p_mask + p_random + p_keep - 1.0) > 1e-9)
    throw std::invalid_argument("mask config: action probabilities must sum to 1");
  if (!(geo_p > 0.0 && geo_p < 1.0)) throw std::invalid_argument("mask config: geo_p must be in (0,1)");
  if (max_span_len < 1) throw std::invalid_argument("mask config: max_span_len must be >= 1");
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("mask config: alpha must be in [0,1]");
}

int mask_budget(int maskable_length, double rate) {
  return std::max<int>(1, static_cast<int>(std::llround(rate * maskable_length)));
}

std::vector<double> clipped_geometric_pmf(double p, int max_len) {
  std::vector<double> pmf(static_cast<std::size_t>(max_len));
  double z = 1.0 - std::pow(1.0 - p, max_len);
  for (int l = 1; l <= max_len; ++l)
    pmf[static_cast<std::size_t>(l - 1)] = p * std::pow(1.0 - p, l - 1) / z;
  return pmf;
}

int sample_span_length(const MaskConfig& cfg, Rng& rng) {
  if (cfg.max_span_len == 1) return 1;
  // inversion of the truncated geometric CDF
  const double z = 1.0 - std::pow(1.0 - cfg.geo_p, cfg.max_span_len);
  const double u = rng.uniform();
  const int l = 1 + static_cast<int>(std::floor(std::log1p(-u * z) / std::log1p(-cfg.geo_p)));
  return std::clamp(l, 1, cfg.max_span_len);
}

namespace {

MaskAction draw_action(const MaskConfig& cfg, Rng& rng) {
  const double u = rng.uniform();
  if (u < cfg.p_mask) return MaskAction::MaskToken;
  if (u < cfg.p_mask + cfg.p_random) return MaskAction::RandomToken;
  return MaskAction::Keep;
}

std::vector<int> maskable_positions(const FlatSequence& seq) {
  std::vector<int> pos;
  for (int i = 0; i < seq.length(); ++i)
    if (!seq.is_special(i)) pos.push_back(i);
  return pos;
}

void finalize_plan(MaskPlan& plan) {
  std::sort(plan.spans.begin(), plan.spans.end(),
            [](const MaskSpan& a, const MaskSpan& b) { return a.start < b.start; });
  plan.positions.clear();
  plan.budget_used = 0;
  for (const auto& s : plan.spans)
    for (int p = s.start; p <= s.end; ++p) {
      plan.positions.push_back(p);
      ++plan.budget_used;
    }
}

constexpr int kMaxConsecutiveRejections = 100;

}  // namespace

MaskPlan sample_token_mask(const FlatSequence& seq, const MaskConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<int> pool = maskable_positions(seq);
  if (pool.empty()) throw std::invalid_argument("sample_token_mask: no maskable positions");
  const int budget = std::min<int>(mask_budget(static_cast<int>(pool.size()), cfg.rate),
                                   static_cast<int>(pool.size()));

  // partial Fisher-Yates, first `budget` entries are the selection
  for (int i = 0; i < budget; ++i) {
    const int j = i + static_cast<int>(rng.uniform_int(pool.size() - static_cast<std::size_t>(i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  std::vector<int> chosen(pool.begin(), pool.begin() + budget);
  std::sort(chosen.begin(), chosen.end());

  MaskPlan plan;
  for (int p : chosen) plan.spans.push_back({p, p, draw_action(cfg, rng), SpanSource::Token});
  finalize_plan(plan);
  return plan;
}

namespace {

MaskPlan sample_span_like(const FlatSequence& seq, const NounPhraseDistribution* npdist,
                          const MaskConfig& cfg, Rng& rng) {
  cfg.validate();
  const std::vector<int> pool = maskable_positions(seq);
  if (pool.empty()) throw std::invalid_argument("sample_span_mask: no maskable positions");
  const int n = seq.length();
  const int budget = std::min<int>(mask_budget(static_cast<int>(pool.size()), cfg.rate),
                                   static_cast<int>(pool.size()));

  std::vector<uint8_t> occupied(static_cast<std::size_t>(n), 0);
  const auto blocked = [&](int s, int e) {
    for (int p = s; p <= e; ++p)
      if (seq.is_special(p) || occupied[static_cast<std::size_t>(p)]) return true;
    return false;
  };

  MaskPlan plan;
  int used = 0;
  int rejections = 0;
  const bool np_possible = npdist != nullptr && !npdist->empty() && cfg.alpha > 0.0;
  while (used < budget && rejections < kMaxConsecutiveRejections) {
    bool use_np = false;
    if (np_possible) use_np = cfg.alpha >= 1.0 || rng.uniform() < cfg.alpha;

    int start, end;
    SpanSource source;
    if (use_np) {
      const auto [s, e] = npdist->sample(rng);
      start = s;
      end = e;
      source = SpanSource::NounPhrase;
      const int len = end - start + 1;
      if (end >= n || len > budget - used || len > cfg.max_span_len || blocked(start, end)) {
        ++rejections;
        continue;
      }
    } else {
      int len = sample_span_length(cfg, rng);
      len = std::min(len, budget - used);  // only budget overflow truncates
      start = pool[static_cast<std::size_t>(rng.uniform_int(pool.size()))];
      end = start + len - 1;
      source = SpanSource::Geometric;
      if (end >= n || blocked(start, end)) {
        ++rejections;
        continue;
      }
    }

    rejections = 0;
    plan.spans.push_back({start, end, draw_action(cfg, rng), source});
    for (int p = start; p <= end; ++p) occupied[static_cast<std::size_t>(p)] = 1;
    used += end - start + 1;
  }

  finalize_plan(plan);
  return plan;
}

}  // namespace

MaskPlan sample_span_mask(const FlatSequence& seq, const MaskConfig& cfg, Rng& rng) {
  return sample_span_like(seq, nullptr, cfg, rng);
}

MaskPlan sample_np_mask(const FlatSequence& seq, const NounPhraseDistribution& npdist,
                        const MaskConfig& cfg, Rng& rng) {
  return sample_span_like(seq, &npdist, cfg, rng);
}

std::vector<int> apply_mask(const FlatSequence& seq, const MaskPlan& plan, const Vocab& vocab,
                            Rng& rng) {
  for (int p : plan.positions)
    if (p < 0 || p >= seq.length())
      throw std::invalid_argument("apply_mask: plan position " + std::to_string(p) +
                                  " outside sequence of length " + std::to_string(seq.length()));

  std::vector<int> out = seq.token_ids;
  const bool can_random = vocab.size() > Vocab::kNumSpecials;
  for (const auto& span : plan.spans) {
    for (int p = span.start; p <= span.end; ++p) {
      switch (span.action) {
        case MaskAction::MaskToken:
          out[static_cast<std::size_t>(p)] = Vocab::kMask;
          break;
        case MaskAction::RandomToken:
          if (can_random) out[static_cast<std::size_t>(p)] = vocab.sample_unigram(rng);
          break;
        case MaskAction::Keep:
          break;
      }
    }
  }
  return out;
}

}  // namespace dapt
