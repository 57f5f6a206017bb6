// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dapt/corpus.hpp"
#include "dapt/encoder.hpp"

namespace dapt {

struct LabeledSpan {
  int start = 0;
  int end = 0;
  std::string label;

  auto operator<=>(const LabeledSpan&) const = default;
};

// Base labels expanded to {O} + {B-l, I-l}; tag ids are contiguous with O=0.
class LabelScheme {
 public:
  LabelScheme() = default;
  static LabelScheme from_labels(std::vector<std::string> labels);

  int num_tags() const { return static_cast<int>(tags_.size()); }
  int o_id() const { return 0; }
  int b_id(const std::string& label) const;
  int i_id(const std::string& label) const;
  const std::string& tag_name(int id) const;
  int tag_id(const std::string& tag) const;  // -1 if absent
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;  // sorted
  std::vector<std::string> tags_;
};

// Ordered label inventory for multi-label intent classification.
class LabelSet {
 public:
  LabelSet() = default;
  static LabelSet from_labels(std::vector<std::string> labels);
  int size() const { return static_cast<int>(labels_.size()); }
  int id_of(const std::string& label) const;  // -1 if absent
  const std::string& label(int id) const { return labels_[static_cast<std::size_t>(id)]; }
  const std::vector<std::string>& labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;  // sorted
};

struct SrlTuple {
  int predicate = 0;
  int start = 0;
  int end = 0;
  std::string label;
  bool cross = false;  // argument turn != predicate turn

  auto operator<=>(const SrlTuple&) const = default;
};

struct PrfCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;

  double precision() const;
  double recall() const;
  // 2PR/(P+R); 1 when both sides are empty, 0 when P+R = 0 otherwise.
  double f1() const;
};

struct EvalReport {
  TaskKind task = TaskKind::Csrl;
  PrfCounts all, cross, intra;   // CSRL slices
  PrfCounts intent, slot;        // SLU slices ("all" pools intent + slot items)

  std::string to_text() const;
};

// Maximal B-l (I-l)* runs; an orphan I-l starts a new span (lenient
// decoding); O breaks spans; special positions are forced to O.
std::vector<LabeledSpan> decode_bio(const std::vector<int>& tags, const LabelScheme& scheme,
                                    const std::vector<uint8_t>& special = {});

// Inverse of decode_bio for disjoint spans.
std::vector<int> encode_bio(const std::vector<LabeledSpan>& spans, int length,
                            const LabelScheme& scheme);

// Micro P/R/F1 over exact (predicate, start, end, label) matches, plus the
// cross/intra slices.
EvalReport csrl_f1(const std::vector<SrlTuple>& predicted, const std::vector<SrlTuple>& gold);

struct SluUtterance {
  std::vector<std::string> intents;
  std::vector<LabeledSpan> slots;
};

// Intent counts use per-utterance label-set matches; slot counts use exact
// span tuples; "all" pools both item kinds.
EvalReport slu_f1(std::span<const SluUtterance> predicted, std::span<const SluUtterance> gold);

// Task heads over the shared encoder.
struct CsrlHead {
  Tensor indicator;  // added to the predicate position's input embedding
  Tensor tag_w, tag_b;

  static CsrlHead init(int d_model, int num_tags, Rng& rng);
  std::vector<NamedTensor> named() const;
};

struct SluHead {
  Tensor intent_w, intent_b;
  Tensor slot_w, slot_b;

  static SluHead init(int d_model, int num_intents, int num_slot_tags, Rng& rng);
  std::vector<NamedTensor> named() const;
};

// Per-token tag logits [n x num_tags] with the predicate indicator injected.
Tensor tag_forward(Tape& tape, const EncoderParams& params, const CsrlHead& head,
                   const std::vector<int>& token_ids, int predicate_pos);

// Independent per-label intent scores [num_intents] from the pooled row.
Tensor intent_forward(Tape& tape, const EncoderParams& params, const SluHead& head,
                      const std::vector<int>& token_ids);

// Per-token slot tag logits [n x num_slot_tags].
Tensor slot_forward(Tape& tape, const EncoderParams& params, const SluHead& head,
                    const std::vector<int>& token_ids);

}  // namespace dapt
