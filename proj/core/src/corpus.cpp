// SPDX-License-Identifier: Apache-2.0
#include "dapt/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace dapt {

using nlohmann::json;

std::string task_name(TaskKind t) { return t == TaskKind::Csrl ? "csrl" : "slu"; }

TaskKind task_from_name(const std::string& s) {
  if (s == "csrl") return TaskKind::Csrl;
  if (s == "slu") return TaskKind::Slu;
  throw std::invalid_argument("unknown task '" + s + "'");
}

int FlatSequence::maskable_length() const {
  int n = 0;
  for (uint8_t s : special) n += s == 0 ? 1 : 0;
  return n;
}

NounPhraseDistribution::NounPhraseDistribution(std::vector<std::tuple<int, int, double>> spans) {
  std::map<std::pair<int, int>, double> merged;
  for (const auto& [s, e, w] : spans) {
    if (w < 0.0 || !std::isfinite(w))
      throw std::invalid_argument("np distribution: negative or non-finite weight for span (" +
                                  std::to_string(s) + "," + std::to_string(e) + ")");
    if (w > 0.0) merged[{s, e}] += w;
  }
  for (const auto& [span, w] : merged) {
    spans_.emplace_back(span.first, span.second, w);
    total_ += w;
    cum_.push_back(total_);
  }
}

std::pair<int, int> NounPhraseDistribution::sample(Rng& rng) const {
  if (spans_.empty()) throw std::runtime_error("np distribution: sample from empty distribution");
  const double r = rng.uniform() * total_;
  auto it = std::upper_bound(cum_.begin(), cum_.end(), r);
  if (it == cum_.end()) --it;
  const auto& s = spans_[static_cast<std::size_t>(it - cum_.begin())];
  return {std::get<0>(s), std::get<1>(s)};
}

namespace {

int raw_length(const DialogueSession& s) {
  int n = 0;
  for (const auto& t : s.turns) n += static_cast<int>(t.tokens.size());
  return n;
}

[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
  throw std::runtime_error("line " + std::to_string(line) + ": " + msg);
}

DialogueSession session_from_json(const json& j) {
  DialogueSession s;
  s.session_id = j.at("session_id").get<std::string>();
  s.task = task_from_name(j.at("task").get<std::string>());
  int idx = 0;
  for (const auto& jt : j.at("turns")) {
    Turn t;
    t.speaker = jt.value("speaker", "");
    t.turn_index = idx++;
    for (const auto& tok : jt.at("tokens")) t.tokens.push_back(tok.get<std::string>());
    if (jt.contains("predicates"))
      for (const auto& p : jt["predicates"]) t.predicates.push_back(p.get<int>());
    if (jt.contains("roles"))
      for (const auto& r : jt["roles"]) {
        if (!r.is_array() || r.size() != 4) throw std::runtime_error("role must be [pred,start,end,label]");
        t.roles.push_back({r[0].get<int>(), r[1].get<int>(), r[2].get<int>(), r[3].get<std::string>()});
      }
    if (jt.contains("intents"))
      for (const auto& i : jt["intents"]) t.intents.push_back(i.get<std::string>());
    if (jt.contains("slots"))
      for (const auto& sl : jt["slots"]) {
        if (!sl.is_array() || sl.size() != 3) throw std::runtime_error("slot must be [start,end,label]");
        t.slots.push_back({sl[0].get<int>(), sl[1].get<int>(), sl[2].get<std::string>()});
      }
    s.turns.push_back(std::move(t));
  }
  return s;
}

json session_to_json(const DialogueSession& s) {
  json j;
  j["session_id"] = s.session_id;
  j["task"] = task_name(s.task);
  j["turns"] = json::array();
  for (const auto& t : s.turns) {
    json jt;
    jt["speaker"] = t.speaker;
    jt["tokens"] = t.tokens;
    jt["predicates"] = t.predicates;
    jt["roles"] = json::array();
    for (const auto& r : t.roles) jt["roles"].push_back({r.predicate, r.arg_start, r.arg_end, r.label});
    jt["intents"] = t.intents;
    jt["slots"] = json::array();
    for (const auto& sl : t.slots) jt["slots"].push_back({sl.start, sl.end, sl.label});
    j["turns"].push_back(std::move(jt));
  }
  return j;
}

// turn index owning a raw position, or -1
int turn_of_raw(const DialogueSession& s, int pos) {
  int base = 0;
  for (const auto& t : s.turns) {
    const int len = static_cast<int>(t.tokens.size());
    if (pos >= base && pos < base + len) return t.turn_index;
    base += len;
  }
  return -1;
}

}  // namespace

void validate_session(const DialogueSession& s) {
  if (s.turns.empty()) throw std::runtime_error("session '" + s.session_id + "': turns empty");
  const int total = raw_length(s);
  int base = 0;
  for (const auto& t : s.turns) {
    const int len = static_cast<int>(t.tokens.size());
    const auto in_this_turn = [&](int p) { return p >= base && p < base + len; };

    std::set<int> seen;
    for (int p : t.predicates) {
      if (!in_this_turn(p))
        throw std::runtime_error("turn " + std::to_string(t.turn_index) + ": predicate position " +
                                 std::to_string(p) + " outside turn range");
      if (!seen.insert(p).second)
        throw std::runtime_error("turn " + std::to_string(t.turn_index) + ": duplicate predicate " +
                                 std::to_string(p));
    }
    for (const auto& r : t.roles) {
      if (r.arg_start > r.arg_end || r.arg_start < 0 || r.arg_end >= total)
        throw std::runtime_error("invalid span (" + std::to_string(r.arg_start) + "," +
                                 std::to_string(r.arg_end) + ") in turn " +
                                 std::to_string(t.turn_index));
      if (!in_this_turn(r.predicate))
        throw std::runtime_error("turn " + std::to_string(t.turn_index) + ": role predicate " +
                                 std::to_string(r.predicate) + " outside turn range");
      if (turn_of_raw(s, r.arg_start) != turn_of_raw(s, r.arg_end))
        throw std::runtime_error("invalid span (" + std::to_string(r.arg_start) + "," +
                                 std::to_string(r.arg_end) + "): crosses a turn boundary");
      if (r.label.empty()) throw std::runtime_error("empty role label in turn " + std::to_string(t.turn_index));
    }
    for (const auto& sl : t.slots) {
      if (sl.start > sl.end || !in_this_turn(sl.start) || !in_this_turn(sl.end))
        throw std::runtime_error("invalid span (" + std::to_string(sl.start) + "," +
                                 std::to_string(sl.end) + "): slot outside turn " +
                                 std::to_string(t.turn_index));
      if (sl.label.empty()) throw std::runtime_error("empty slot label in turn " + std::to_string(t.turn_index));
    }
    base += len;
  }
}

std::vector<DialogueSession> load_sessions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file '" + path + "'");
  std::vector<DialogueSession> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& e) {
      fail_line(lineno, std::string("malformed record: ") + e.what());
    }
    try {
      DialogueSession s = session_from_json(j);
      validate_session(s);
      out.push_back(std::move(s));
    } catch (const std::exception& e) {
      fail_line(lineno, e.what());
    }
  }
  return out;
}

void save_sessions(const std::string& path, const std::vector<DialogueSession>& sessions) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file '" + path + "'");
  for (const auto& s : sessions) out << session_to_json(s).dump() << '\n';
}

std::map<std::string, NounPhraseDistribution> load_np_distribution(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open np file '" + path + "'");
  std::map<std::string, NounPhraseDistribution> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      std::vector<std::tuple<int, int, double>> spans;
      for (const auto& sp : j.at("spans")) {
        if (!sp.is_array() || sp.size() != 3) throw std::runtime_error("span must be [start,end,weight]");
        const int s = sp[0].get<int>(), e = sp[1].get<int>();
        if (s < 0 || s > e)
          throw std::runtime_error("invalid span (" + std::to_string(s) + "," + std::to_string(e) + ")");
        spans.emplace_back(s, e, sp[2].get<double>());
      }
      out[j.at("session_id").get<std::string>()] = NounPhraseDistribution(std::move(spans));
    } catch (const std::exception& e) {
      fail_line(lineno, e.what());
    }
  }
  return out;
}

std::set<int> load_verb_lexicon(const std::string& path, const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open verb lexicon '" + path + "'");
  std::set<int> ids;
  std::string tok;
  while (std::getline(in, tok)) {
    while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.pop_back();
    if (tok.empty()) continue;
    const int id = vocab.id_of(tok);
    if (id >= 0) ids.insert(id);  // out-of-vocab verbs can never match
  }
  return ids;
}

FlatSequence flatten_session(const DialogueSession& session, const Vocab& vocab, int max_len) {
  if (max_len < 3) throw std::invalid_argument("flatten_session: max_len must be >= 3");
  validate_session(session);

  const int num_turns = static_cast<int>(session.turns.size());
  auto packed_len = [&](int first_turn, int skip_front) {
    int n = 1;  // [CLS]
    for (int k = first_turn; k < num_turns; ++k) {
      int len = static_cast<int>(session.turns[k].tokens.size());
      if (k == first_turn) len -= skip_front;
      n += len + 1;  // turn + [SEP]
    }
    return n;
  };

  int first_turn = 0;
  while (first_turn + 1 < num_turns && packed_len(first_turn, 0) > max_len) ++first_turn;
  int skip_front = 0;
  if (packed_len(first_turn, 0) > max_len) skip_front = packed_len(first_turn, 0) - max_len;

  // raw -> flat map
  std::vector<int> turn_start(num_turns, 0);
  int total_raw = 0;
  for (int k = 0; k < num_turns; ++k) {
    turn_start[k] = total_raw;
    total_raw += static_cast<int>(session.turns[k].tokens.size());
  }
  std::vector<int> flat_of_raw(total_raw, -1);

  FlatSequence out;
  out.session_id = session.session_id;
  out.task = session.task;
  out.token_ids.push_back(Vocab::kCls);
  out.turn_of.push_back(session.turns[static_cast<std::size_t>(first_turn)].turn_index);
  out.special.push_back(1);
  int content = 0;
  for (int k = first_turn; k < num_turns; ++k) {
    const Turn& t = session.turns[static_cast<std::size_t>(k)];
    const int from = k == first_turn ? skip_front : 0;
    for (int i = from; i < static_cast<int>(t.tokens.size()); ++i) {
      flat_of_raw[turn_start[k] + i] = out.length();
      out.token_ids.push_back(vocab.encode(t.tokens[static_cast<std::size_t>(i)]));
      out.turn_of.push_back(t.turn_index);
      out.special.push_back(0);
      ++content;
    }
    out.token_ids.push_back(Vocab::kSep);
    out.turn_of.push_back(t.turn_index);
    out.special.push_back(1);
  }
  if (content == 0)
    throw std::runtime_error("flatten_session: session '" + session.session_id +
                             "' has no surviving content tokens");

  const auto mapped = [&](int raw) { return raw >= 0 && raw < total_raw ? flat_of_raw[raw] : -1; };
  for (int k = first_turn; k < num_turns; ++k) {
    const Turn& t = session.turns[static_cast<std::size_t>(k)];
    for (int p : t.predicates)
      if (mapped(p) >= 0) out.predicates.push_back(mapped(p));
    for (const auto& r : t.roles) {
      if (mapped(r.predicate) < 0 || mapped(r.arg_start) < 0 || mapped(r.arg_end) < 0) continue;
      out.roles.push_back({mapped(r.predicate), mapped(r.arg_start), mapped(r.arg_end), r.label});
    }
    for (const auto& label : t.intents) out.intents.emplace_back(t.turn_index, label);
    for (const auto& sl : t.slots) {
      if (mapped(sl.start) < 0 || mapped(sl.end) < 0) continue;
      out.slots.push_back({mapped(sl.start), mapped(sl.end), sl.label});
    }
  }
  std::sort(out.predicates.begin(), out.predicates.end());
  return out;
}

std::vector<int> select_predicates(const FlatSequence& seq, const std::set<int>& verb_lexicon,
                                   const std::vector<int>& annotated) {
  std::vector<int> out;
  if (!annotated.empty()) {
    for (int p : annotated)
      if (p >= 0 && p < seq.length() && !seq.is_special(p)) out.push_back(p);
    return out;
  }
  for (int i = 0; i < seq.length(); ++i)
    if (!seq.is_special(i) && verb_lexicon.count(seq.token_ids[static_cast<std::size_t>(i)]))
      out.push_back(i);
  return out;
}

bool is_cross_turn(const FlatSequence& seq, const RoleSpan& role) {
  return seq.turn_of[static_cast<std::size_t>(role.start)] !=
         seq.turn_of[static_cast<std::size_t>(role.predicate)];
}

}  // namespace dapt
