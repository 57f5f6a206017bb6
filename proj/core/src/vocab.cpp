// SPDX-License-Identifier: Apache-2.0
#include "dapt/vocab.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace dapt {

static const char* kSpecialNames[] = {"[PAD]", "[UNK]", "[MASK]", "[CLS]", "[SEP]"};

Vocab Vocab::build(const std::vector<std::vector<std::string>>& corpus, int min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  if (corpus.empty()) throw std::invalid_argument("empty corpus");

  std::map<std::string, int64_t> counts;
  for (const auto& seq : corpus)
    for (const auto& tok : seq) counts[tok] += 1;

  std::vector<std::pair<std::string, int64_t>> kept;
  for (const auto& [tok, c] : counts)
    if (c >= min_count) kept.emplace_back(tok, c);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  Vocab v;
  for (int i = 0; i < kNumSpecials; ++i) {
    v.token_of_.emplace_back(kSpecialNames[i]);
    v.counts_.push_back(0);
  }
  for (auto& [tok, c] : kept) {
    v.token_of_.push_back(tok);
    v.counts_.push_back(c);
  }
  v.finalize();
  return v;
}

Vocab Vocab::from_tokens(const std::vector<std::string>& tokens,
                         const std::vector<int64_t>& counts) {
  if (!counts.empty() && counts.size() != tokens.size())
    throw std::invalid_argument("vocab: counts/tokens length mismatch");
  Vocab v;
  for (int i = 0; i < kNumSpecials; ++i) {
    v.token_of_.emplace_back(kSpecialNames[i]);
    v.counts_.push_back(0);
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    v.token_of_.push_back(tokens[i]);
    v.counts_.push_back(counts.empty() ? 0 : counts[i]);
  }
  v.finalize();
  return v;
}

void Vocab::finalize() {
  id_of_.clear();
  for (int i = 0; i < size(); ++i) {
    if (!id_of_.emplace(token_of_[i], i).second)
      throw std::invalid_argument("vocab: duplicate token '" + token_of_[i] + "'");
  }
  cum_.clear();
  total_ = 0;
  for (int i = kNumSpecials; i < size(); ++i) {
    total_ += counts_[static_cast<std::size_t>(i)];
    cum_.push_back(total_);
  }
}

int Vocab::id_of(const std::string& token) const {
  auto it = id_of_.find(token);
  return it == id_of_.end() ? -1 : it->second;
}

const std::string& Vocab::token_of(int id) const {
  if (id < 0 || id >= size())
    throw std::out_of_range("vocab: id " + std::to_string(id) + " out of range");
  return token_of_[static_cast<std::size_t>(id)];
}

int Vocab::encode(const std::string& token) const {
  const int id = id_of(token);
  return id < 0 ? kUnk : id;
}

int Vocab::sample_unigram(Rng& rng) const {
  const int content = size() - kNumSpecials;
  if (content <= 0) throw std::runtime_error("vocab: no non-special tokens to sample");
  if (total_ == 0) return kNumSpecials + static_cast<int>(rng.uniform_int(content));
  const int64_t r = static_cast<int64_t>(rng.uniform_int(static_cast<uint64_t>(total_)));
  const auto it = std::upper_bound(cum_.begin(), cum_.end(), r);
  return kNumSpecials + static_cast<int>(it - cum_.begin());
}

}  // namespace dapt
