// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "dapt/rng.hpp"
#include "dapt/vocab.hpp"

namespace dapt {

enum class TaskKind { Csrl, Slu };

std::string task_name(TaskKind t);
TaskKind task_from_name(const std::string& s);

// All annotation indices are session-global raw token positions: indices into
// the concatenation of every turn's tokens, before specials are inserted.
// A span never straddles a turn boundary.
struct RoleAnnotation {
  int predicate = 0;  // raw position of the predicate (inside the owning turn)
  int arg_start = 0;
  int arg_end = 0;
  std::string label;
};

struct SlotAnnotation {
  int start = 0;
  int end = 0;
  std::string label;
};

struct Turn {
  std::string speaker;
  std::vector<std::string> tokens;
  int turn_index = 0;
  std::vector<int> predicates;
  std::vector<RoleAnnotation> roles;
  std::vector<std::string> intents;
  std::vector<SlotAnnotation> slots;
};

struct DialogueSession {
  std::string session_id;
  TaskKind task = TaskKind::Csrl;
  std::vector<Turn> turns;
};

struct RoleSpan {
  int predicate = 0;  // flat position
  int start = 0;
  int end = 0;
  std::string label;
};

struct SlotSpan {
  int start = 0;
  int end = 0;
  std::string label;
};

// [CLS] turn_k .. [SEP] turn_{k+1} [SEP] ... packing of one session, with all
// surviving annotations re-based to flat positions.
struct FlatSequence {
  std::string session_id;
  TaskKind task = TaskKind::Csrl;
  std::vector<int> token_ids;
  std::vector<int> turn_of;       // per position; specials map to the adjoining turn
  std::vector<uint8_t> special;   // 1 at [CLS]/[SEP]
  std::vector<int> predicates;
  std::vector<RoleSpan> roles;
  std::vector<std::pair<int, std::string>> intents;  // (turn_index, label)
  std::vector<SlotSpan> slots;

  int length() const { return static_cast<int>(token_ids.size()); }
  bool is_special(int pos) const { return special[static_cast<std::size_t>(pos)] != 0; }
  int maskable_length() const;
};

// Weight-proportional span distribution in flat coordinates.
class NounPhraseDistribution {
 public:
  NounPhraseDistribution() = default;
  explicit NounPhraseDistribution(std::vector<std::tuple<int, int, double>> spans);

  bool empty() const { return spans_.empty(); }
  std::size_t size() const { return spans_.size(); }
  std::pair<int, int> sample(Rng& rng) const;
  const std::vector<std::tuple<int, int, double>>& spans() const { return spans_; }

 private:
  std::vector<std::tuple<int, int, double>> spans_;  // sorted, positive weights
  std::vector<double> cum_;
  double total_ = 0.0;
};

// Line-delimited JSON, one session per line. Validation failures carry the
// line number and offending field.
std::vector<DialogueSession> load_sessions(const std::string& path);
void save_sessions(const std::string& path, const std::vector<DialogueSession>& sessions);
void validate_session(const DialogueSession& session);  // throws on broken invariants

std::map<std::string, NounPhraseDistribution> load_np_distribution(const std::string& path);

std::set<int> load_verb_lexicon(const std::string& path, const Vocab& vocab);

// Packs a session into one id sequence, truncating whole turns oldest-first
// (then leading tokens of the oldest surviving turn, if a single turn still
// overflows). Annotations in truncated regions are dropped.
FlatSequence flatten_session(const DialogueSession& session, const Vocab& vocab, int max_len);

// Annotated positions win when present; otherwise every lexicon verb in the
// sequence. Never returns special positions.
std::vector<int> select_predicates(const FlatSequence& seq, const std::set<int>& verb_lexicon,
                                   const std::vector<int>& annotated = {});

bool is_cross_turn(const FlatSequence& seq, const RoleSpan& role);

}  // namespace dapt
