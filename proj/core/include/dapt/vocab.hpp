// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dapt/rng.hpp"

namespace dapt {

// Token/id bijection with the five specials pinned to ids 0..4. Carries the
// training-corpus unigram counts used for random-token replacement.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kMask = 2;
  static constexpr int kCls = 3;
  static constexpr int kSep = 4;
  static constexpr int kNumSpecials = 5;

  // Counts tokens over the corpus and keeps those with count >= min_count,
  // ordered by descending count then lexicographic. Throws "empty corpus".
  static Vocab build(const std::vector<std::vector<std::string>>& corpus, int min_count);

  // Non-special tokens in id order, with optional unigram counts.
  static Vocab from_tokens(const std::vector<std::string>& tokens,
                           const std::vector<int64_t>& counts = {});

  int size() const { return static_cast<int>(token_of_.size()); }
  int id_of(const std::string& token) const;            // -1 if absent
  const std::string& token_of(int id) const;
  int encode(const std::string& token) const;           // UNK fallback
  bool is_special(int id) const { return id >= 0 && id < kNumSpecials; }
  int64_t count_of(int id) const { return counts_[static_cast<std::size_t>(id)]; }

  // Draw from the unigram distribution over non-special ids; falls back to
  // uniform when no counts are available. Throws if only specials exist.
  int sample_unigram(Rng& rng) const;

  const std::vector<std::string>& tokens() const { return token_of_; }
  const std::vector<int64_t>& counts() const { return counts_; }

 private:
  void finalize();

  std::vector<std::string> token_of_;
  std::vector<int64_t> counts_;
  std::unordered_map<std::string, int> id_of_;
  std::vector<int64_t> cum_;  // cumulative counts over non-special ids
  int64_t total_ = 0;
};

}  // namespace dapt
