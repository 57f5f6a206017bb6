// SPDX-License-Identifier: Apache-2.0
#include "dapt/downstream.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dapt {

LabelScheme LabelScheme::from_labels(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  LabelScheme s;
  s.labels_ = std::move(labels);
  s.tags_.push_back("O");
  for (const auto& l : s.labels_) {
    s.tags_.push_back("B-" + l);
    s.tags_.push_back("I-" + l);
  }
  return s;
}

int LabelScheme::b_id(const std::string& label) const { return tag_id("B-" + label); }
int LabelScheme::i_id(const std::string& label) const { return tag_id("I-" + label); }

const std::string& LabelScheme::tag_name(int id) const {
  if (id < 0 || id >= num_tags()) throw std::out_of_range("label scheme: bad tag id");
  return tags_[static_cast<std::size_t>(id)];
}

int LabelScheme::tag_id(const std::string& tag) const {
  const auto it = std::find(tags_.begin(), tags_.end(), tag);
  return it == tags_.end() ? -1 : static_cast<int>(it - tags_.begin());
}

LabelSet LabelSet::from_labels(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  LabelSet s;
  s.labels_ = std::move(labels);
  return s;
}

int LabelSet::id_of(const std::string& label) const {
  const auto it = std::find(labels_.begin(), labels_.end(), label);
  return it == labels_.end() ? -1 : static_cast<int>(it - labels_.begin());
}

double PrfCounts::precision() const { return tp + fp == 0 ? (fn == 0 ? 1.0 : 0.0) : double(tp) / double(tp + fp); }
double PrfCounts::recall() const { return tp + fn == 0 ? (fp == 0 ? 1.0 : 0.0) : double(tp) / double(tp + fn); }

double PrfCounts::f1() const {
  if (tp == 0 && fp == 0 && fn == 0) return 1.0;  // empty-slice convention
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  const auto line = [&os](const char* name, const PrfCounts& c) {
    os << name << " P=" << c.precision() << " R=" << c.recall() << " F1=" << c.f1()
       << " TP=" << c.tp << " FP=" << c.fp << " FN=" << c.fn << '\n';
  };
  if (task == TaskKind::Csrl) {
    os << "task csrl\n";
    line("f1_all", all);
    line("f1_cross", cross);
    line("f1_intra", intra);
  } else {
    os << "task slu\n";
    line("f1_intent", intent);
    line("f1_slot", slot);
    line("f1_all", all);
  }
  return os.str();
}

std::vector<LabeledSpan> decode_bio(const std::vector<int>& tags, const LabelScheme& scheme,
                                    const std::vector<uint8_t>& special) {
  const int n = static_cast<int>(tags.size());
  std::vector<LabeledSpan> spans;
  std::string open_label;
  int open_start = -1;
  const auto close = [&](int end) {
    if (open_start >= 0) spans.push_back({open_start, end, open_label});
    open_start = -1;
    open_label.clear();
  };

  for (int i = 0; i < n; ++i) {
    const bool forced_o = !special.empty() && special[static_cast<std::size_t>(i)] != 0;
    const std::string& tag = forced_o ? "O" : scheme.tag_name(tags[static_cast<std::size_t>(i)]);
    if (tag == "O") {
      close(i - 1);
      continue;
    }
    const std::string label = tag.substr(2);
    if (tag[0] == 'B' || open_start < 0 || label != open_label) {
      close(i - 1);  // B always restarts; orphan or re-labeled I starts fresh
      open_start = i;
      open_label = label;
    }
  }
  close(n - 1);
  return spans;
}

std::vector<int> encode_bio(const std::vector<LabeledSpan>& spans, int length,
                            const LabelScheme& scheme) {
  std::vector<int> tags(static_cast<std::size_t>(length), scheme.o_id());
  for (const auto& s : spans) {
    if (s.start < 0 || s.end >= length || s.start > s.end)
      throw std::invalid_argument("encode_bio: span out of range");
    const int b = scheme.b_id(s.label), i = scheme.i_id(s.label);
    if (b < 0) throw std::invalid_argument("encode_bio: unknown label '" + s.label + "'");
    tags[static_cast<std::size_t>(s.start)] = b;
    for (int p = s.start + 1; p <= s.end; ++p) tags[static_cast<std::size_t>(p)] = i;
  }
  return tags;
}

namespace {

PrfCounts tuple_counts(const std::set<SrlTuple>& predicted, const std::set<SrlTuple>& gold) {
  PrfCounts c;
  for (const auto& t : predicted)
    gold.count(t) ? ++c.tp : ++c.fp;
  for (const auto& t : gold)
    if (!predicted.count(t)) ++c.fn;
  return c;
}

}  // namespace

EvalReport csrl_f1(const std::vector<SrlTuple>& predicted, const std::vector<SrlTuple>& gold) {
  std::set<SrlTuple> p(predicted.begin(), predicted.end());
  std::set<SrlTuple> g(gold.begin(), gold.end());

  const auto slice = [](const std::set<SrlTuple>& s, bool cross) {
    std::set<SrlTuple> out;
    for (const auto& t : s)
      if (t.cross == cross) out.insert(t);
    return out;
  };

  EvalReport r;
  r.task = TaskKind::Csrl;
  r.all = tuple_counts(p, g);
  r.cross = tuple_counts(slice(p, true), slice(g, true));
  r.intra = tuple_counts(slice(p, false), slice(g, false));
  return r;
}

EvalReport slu_f1(std::span<const SluUtterance> predicted, std::span<const SluUtterance> gold) {
  if (predicted.size() != gold.size())
    throw std::invalid_argument("slu_f1: utterance count mismatch");

  EvalReport r;
  r.task = TaskKind::Slu;
  for (std::size_t u = 0; u < gold.size(); ++u) {
    const std::set<std::string> pi(predicted[u].intents.begin(), predicted[u].intents.end());
    const std::set<std::string> gi(gold[u].intents.begin(), gold[u].intents.end());
    for (const auto& l : pi)
      gi.count(l) ? ++r.intent.tp : ++r.intent.fp;
    for (const auto& l : gi)
      if (!pi.count(l)) ++r.intent.fn;

    const std::set<LabeledSpan> ps(predicted[u].slots.begin(), predicted[u].slots.end());
    const std::set<LabeledSpan> gs(gold[u].slots.begin(), gold[u].slots.end());
    for (const auto& s : ps)
      gs.count(s) ? ++r.slot.tp : ++r.slot.fp;
    for (const auto& s : gs)
      if (!ps.count(s)) ++r.slot.fn;
  }
  r.all.tp = r.intent.tp + r.slot.tp;
  r.all.fp = r.intent.fp + r.slot.fp;
  r.all.fn = r.intent.fn + r.slot.fn;
  return r;
}

CsrlHead CsrlHead::init(int d_model, int num_tags, Rng& rng) {
  CsrlHead h;
  h.indicator = Tensor::randn({d_model}, rng, 0.02, true);
  h.tag_w = Tensor::randn({d_model, num_tags}, rng, 0.02, true);
  h.tag_b = Tensor({num_tags}, 0.0, true);
  return h;
}

std::vector<NamedTensor> CsrlHead::named() const {
  return {{"csrl.indicator", indicator}, {"csrl.tag_w", tag_w}, {"csrl.tag_b", tag_b}};
}

SluHead SluHead::init(int d_model, int num_intents, int num_slot_tags, Rng& rng) {
  SluHead h;
  h.intent_w = Tensor::randn({d_model, num_intents}, rng, 0.02, true);
  h.intent_b = Tensor({num_intents}, 0.0, true);
  h.slot_w = Tensor::randn({d_model, num_slot_tags}, rng, 0.02, true);
  h.slot_b = Tensor({num_slot_tags}, 0.0, true);
  return h;
}

std::vector<NamedTensor> SluHead::named() const {
  return {{"slu.intent_w", intent_w},
          {"slu.intent_b", intent_b},
          {"slu.slot_w", slot_w},
          {"slu.slot_b", slot_b}};
}

Tensor tag_forward(Tape& tape, const EncoderParams& params, const CsrlHead& head,
                   const std::vector<int>& token_ids, int predicate_pos) {
  if (predicate_pos < 0 || predicate_pos >= static_cast<int>(token_ids.size()))
    throw std::invalid_argument("tag_forward: predicate position " + std::to_string(predicate_pos) +
                                " out of range");
  ForwardOptions opt;
  opt.inject.emplace_back(predicate_pos, head.indicator);
  Tensor hidden = encoder_forward(tape, params, token_ids, opt);
  return add(tape, matmul(tape, hidden, head.tag_w), head.tag_b);
}

Tensor intent_forward(Tape& tape, const EncoderParams& params, const SluHead& head,
                      const std::vector<int>& token_ids) {
  Tensor pooled = pooled_repr(tape, encoder_forward(tape, params, token_ids));
  return add(tape, matmul(tape, pooled, head.intent_w), head.intent_b);
}

Tensor slot_forward(Tape& tape, const EncoderParams& params, const SluHead& head,
                    const std::vector<int>& token_ids) {
  Tensor hidden = encoder_forward(tape, params, token_ids);
  return add(tape, matmul(tape, hidden, head.slot_w), head.slot_b);
}

}  // namespace dapt
