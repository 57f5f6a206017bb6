// SPDX-License-Identifier: Apache-2.0
#include "dapt/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dapt/gradcheck.hpp"
#include "dapt/ops.hpp"

namespace dapt {

using nlohmann::json;

namespace {

// rng stream tags; every random draw in a run is derived from
// (seed, tag, counter) so any prefix of the run can be replayed
constexpr uint64_t kStreamInit = 0x11;
constexpr uint64_t kStreamBatch = 0x22;
constexpr uint64_t kStreamItem = 0x33;
constexpr uint64_t kStreamFtInit = 0x44;
constexpr uint64_t kStreamFtBatch = 0x55;
constexpr uint64_t kStreamStats = 0x66;

const NounPhraseDistribution kEmptyNp;

const NounPhraseDistribution& np_for(const TrainData& data, const FlatSequence& seq) {
  const auto it = data.np.find(seq.session_id);
  return it == data.np.end() ? kEmptyNp : it->second;
}

MaskPlan plan_for(const FlatSequence& seq, const TrainData& data, MaskScheme scheme,
                  const MaskConfig& mask, Rng& rng) {
  switch (scheme) {
    case MaskScheme::Token: return sample_token_mask(seq, mask, rng);
    case MaskScheme::Span: return sample_span_mask(seq, mask, rng);
    case MaskScheme::Np: return sample_np_mask(seq, np_for(data, seq), mask, rng);
  }
  throw std::logic_error("unreachable");
}

std::string checkpoint_path(const RunConfig& cfg, uint64_t step) {
  return cfg.paths.checkpoint_dir + "/ckpt-" + std::to_string(step) + ".dapt";
}

}  // namespace

Vocab vocab_from_sessions(const std::vector<DialogueSession>& sessions, int min_count) {
  std::vector<std::vector<std::string>> corpus;
  for (const auto& s : sessions)
    for (const auto& t : s.turns) corpus.push_back(t.tokens);
  return Vocab::build(corpus, min_count);
}

TrainData make_train_data(std::vector<DialogueSession> sessions, Vocab vocab, int max_len,
                          std::map<std::string, NounPhraseDistribution> np, std::set<int> verbs) {
  TrainData d;
  d.vocab = std::move(vocab);
  d.np = std::move(np);
  d.verbs = std::move(verbs);
  d.sessions = std::move(sessions);
  for (const auto& s : d.sessions) d.sequences.push_back(flatten_session(s, d.vocab, max_len));
  return d;
}

TrainData load_train_data(const RunConfig& cfg, const std::optional<Vocab>& preset_vocab) {
  auto sessions = load_sessions(cfg.paths.corpus);
  Vocab vocab = preset_vocab ? *preset_vocab : vocab_from_sessions(sessions, cfg.min_count);
  std::map<std::string, NounPhraseDistribution> np;
  if (!cfg.paths.np_spans.empty()) np = load_np_distribution(cfg.paths.np_spans);
  std::set<int> verbs;
  if (!cfg.paths.verb_lexicon.empty()) verbs = load_verb_lexicon(cfg.paths.verb_lexicon, vocab);
  return make_train_data(std::move(sessions), std::move(vocab), cfg.max_len, std::move(np),
                         std::move(verbs));
}

Checkpoint make_checkpoint(const RunConfig& cfg, const TrainData& data,
                           const EncoderParams& params, const AdamState& adam, uint64_t step,
                           const std::vector<NamedTensor>& head_tensors,
                           const std::string& aux_extra) {
  Checkpoint ckpt;
  ckpt.config_text = cfg.to_text();
  ckpt.step = step;
  ckpt.rng_state = std::to_string(cfg.seed);

  json aux;
  aux["task"] = task_name(cfg.task);
  aux["max_len"] = cfg.max_len;
  std::vector<std::string> toks(data.vocab.tokens().begin() + Vocab::kNumSpecials,
                                data.vocab.tokens().end());
  std::vector<int64_t> counts(data.vocab.counts().begin() + Vocab::kNumSpecials,
                              data.vocab.counts().end());
  aux["vocab_tokens"] = toks;
  aux["vocab_counts"] = counts;
  if (!aux_extra.empty()) {
    json extra = json::parse(aux_extra);
    for (auto& [k, v] : extra.items()) aux[k] = v;
  }
  ckpt.aux_json = aux.dump();

  for (const auto& nt : params.named()) ckpt.tensors.push_back(nt);
  for (const auto& nt : head_tensors) ckpt.tensors.push_back(nt);
  const auto named = params.named();
  if (adam.initialized()) {
    std::vector<NamedTensor> opt_named = named;
    for (const auto& nt : head_tensors) opt_named.push_back(nt);
    for (std::size_t k = 0; k < opt_named.size() && k < adam.m.size(); ++k) {
      ckpt.tensors.push_back(
          {"adam.m." + opt_named[k].name,
           Tensor::from(opt_named[k].tensor.dims(), adam.m[k])});
      ckpt.tensors.push_back(
          {"adam.v." + opt_named[k].name,
           Tensor::from(opt_named[k].tensor.dims(), adam.v[k])});
    }
  }
  return ckpt;
}

void load_named_tensors(const Checkpoint& ckpt, std::vector<NamedTensor>& dst) {
  std::vector<std::string> problems;
  for (auto& nt : dst) {
    const Tensor* src = ckpt.find(nt.name);
    if (!src) {
      problems.push_back(nt.name + " (missing)");
      continue;
    }
    if (src->dims() != nt.tensor.dims()) {
      problems.push_back(nt.name + " (" + shape_str(src->dims()) + " vs " +
                         shape_str(nt.tensor.dims()) + ")");
      continue;
    }
    std::copy_n(src->data(), src->numel(), nt.tensor.data());
  }
  if (!problems.empty()) {
    std::string msg = "checkpoint/config shape mismatch:";
    for (const auto& p : problems) msg += " " + p;
    throw std::runtime_error(msg);
  }
}

void load_adam_state(const Checkpoint& ckpt, const std::vector<NamedTensor>& params,
                     AdamState& state) {
  state.init(params);
  state.step = ckpt.step;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Tensor* m = ckpt.find("adam.m." + params[k].name);
    const Tensor* v = ckpt.find("adam.v." + params[k].name);
    if (!m || !v) throw std::runtime_error("checkpoint missing optimizer state for " + params[k].name);
    if (m->numel() != params[k].tensor.numel() || v->numel() != params[k].tensor.numel())
      throw std::runtime_error("checkpoint optimizer state shape mismatch for " + params[k].name);
    state.m[k].assign(m->data(), m->data() + m->numel());
    state.v[k].assign(v->data(), v->data() + v->numel());
  }
}

Vocab vocab_from_checkpoint(const Checkpoint& ckpt) {
  json aux = json::parse(ckpt.aux_json);
  return Vocab::from_tokens(aux.at("vocab_tokens").get<std::vector<std::string>>(),
                            aux.at("vocab_counts").get<std::vector<int64_t>>());
}

PretrainResult pretrain(const RunConfig& cfg_in, const TrainData& data, std::ostream& log,
                        const std::string& resume_from) {
  RunConfig cfg = cfg_in;
  if (cfg.encoder.vocab_size == 0) cfg.encoder.vocab_size = data.vocab.size();
  cfg.validate();
  if (data.sequences.empty()) throw std::runtime_error("pretrain: empty corpus");

  EncoderParams params;
  AdamState adam;
  uint64_t start_step = 0;
  if (resume_from.empty()) {
    Rng init_rng(mix_seed(cfg.seed, kStreamInit));
    params = EncoderParams::init(cfg.encoder, init_rng);
  } else {
    const Checkpoint ckpt = load_checkpoint(resume_from);
    if (ckpt.config_text != cfg.to_text())
      throw std::runtime_error("resume: checkpoint config does not match the current config");
    Rng init_rng(mix_seed(cfg.seed, kStreamInit));
    params = EncoderParams::init(cfg.encoder, init_rng);
    auto named = params.named();
    load_named_tensors(ckpt, named);
    load_adam_state(ckpt, named, adam);
    start_step = ckpt.step;
  }

  std::filesystem::create_directories(cfg.paths.checkpoint_dir);
  auto named = params.named();
  const AdamConfig adam_cfg{cfg.lr};

  PretrainResult result;
  log.precision(17);
  const uint64_t total_steps = static_cast<uint64_t>(cfg.steps);
  std::string last_path;
  for (uint64_t step = start_step; step < total_steps; ++step) {
    zero_grads(named);
    Rng batch_rng(mix_seed(cfg.seed, kStreamBatch, step));
    Tape tape;
    Tensor total;
    double mlm = 0.0, sbo = 0.0, pmo = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const std::size_t idx = batch_rng.uniform_int(data.sequences.size());
      const FlatSequence& seq = data.sequences[idx];
      Rng item_rng(mix_seed(cfg.seed, kStreamItem,
                            step * static_cast<uint64_t>(cfg.batch_size) + static_cast<uint64_t>(b)));
      const MaskPlan plan = plan_for(seq, data, cfg.scheme, cfg.mask, item_rng);
      const std::vector<int> predicates = select_predicates(seq, data.verbs, seq.predicates);
      CombinedLoss item = combined_loss(tape, params, seq, plan, predicates, cfg.objectives,
                                        data.vocab, item_rng);
      total = total.defined() ? add(tape, total, item.total) : item.total;
      mlm += item.mlm;
      sbo += item.sbo;
      pmo += item.pmo;
    }
    total = scale(tape, total, 1.0 / cfg.batch_size);
    const double loss = total.value();
    mlm /= cfg.batch_size;
    sbo /= cfg.batch_size;
    pmo /= cfg.batch_size;
    if (!std::isfinite(loss))
      throw std::runtime_error("pretrain: non-finite loss at step " + std::to_string(step + 1) +
                               " (mlm=" + std::to_string(mlm) + " sbo=" + std::to_string(sbo) +
                               " pmo=" + std::to_string(pmo) + ")");

    tape.backward(total);
    adam_step(named, adam, adam_cfg);

    if (step == start_step) result.first_loss = loss;
    result.last_loss = loss;
    log << "step " << (step + 1) << " loss " << loss << " mlm " << mlm << " sbo " << sbo << " pmo "
        << pmo << "\n";

    const uint64_t done = step + 1;
    if ((cfg.checkpoint_every > 0 && done % static_cast<uint64_t>(cfg.checkpoint_every) == 0) ||
        done == total_steps) {
      const Checkpoint ckpt = make_checkpoint(cfg, data, params, adam, done);
      last_path = checkpoint_path(cfg, done);
      save_checkpoint(last_path, ckpt);
    }
  }
  if (last_path.empty()) {  // resumed past the end; re-emit the final state
    const Checkpoint ckpt = make_checkpoint(cfg, data, params, adam, total_steps);
    last_path = checkpoint_path(cfg, total_steps);
    save_checkpoint(last_path, ckpt);
  }

  result.params = std::move(params);
  result.adam = std::move(adam);
  result.step = total_steps;
  result.final_checkpoint = last_path;
  return result;
}

namespace {

struct CsrlExample {
  int seq_idx = 0;
  int predicate = 0;
  std::vector<int> tags;
};

std::vector<std::string> collect_role_labels(const TrainData& data) {
  std::vector<std::string> labels;
  for (const auto& seq : data.sequences)
    for (const auto& r : seq.roles) labels.push_back(r.label);
  return labels;
}

std::vector<CsrlExample> build_csrl_examples(const TrainData& data, const LabelScheme& scheme) {
  std::vector<CsrlExample> out;
  for (std::size_t i = 0; i < data.sequences.size(); ++i) {
    const FlatSequence& seq = data.sequences[i];
    for (int pred : seq.predicates) {
      CsrlExample ex;
      ex.seq_idx = static_cast<int>(i);
      ex.predicate = pred;
      std::vector<LabeledSpan> spans;
      for (const auto& r : seq.roles)
        if (r.predicate == pred && scheme.b_id(r.label) >= 0)
          spans.push_back({r.start, r.end, r.label});
      ex.tags = encode_bio(spans, seq.length(), scheme);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

std::vector<SrlTuple> gold_csrl_tuples(const TrainData& data) {
  std::vector<SrlTuple> out;
  for (const auto& seq : data.sequences)
    for (const auto& r : seq.roles)
      out.push_back({r.predicate, r.start, r.end, r.label, is_cross_turn(seq, r)});
  return out;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (int i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

EvalReport eval_csrl(const EncoderParams& params, const CsrlHead& head, const LabelScheme& scheme,
                     const TrainData& eval_data) {
  std::vector<SrlTuple> predicted;
  for (const auto& seq : eval_data.sequences) {
    for (int pred : seq.predicates) {
      Tape tape;
      Tensor logits = tag_forward(tape, params, head, seq.token_ids, pred);
      const std::vector<int> tags = argmax_rows(logits);
      for (const auto& span : decode_bio(tags, scheme, seq.special)) {
        const RoleSpan rs{pred, span.start, span.end, span.label};
        predicted.push_back({pred, span.start, span.end, span.label, is_cross_turn(seq, rs)});
      }
    }
  }
  return csrl_f1(predicted, gold_csrl_tuples(eval_data));
}

struct SluExample {
  FlatSequence seq;
  std::vector<double> intent_targets;
  std::vector<int> slot_tags;
  SluUtterance gold;
};

void collect_slu_labels(const TrainData& data, std::vector<std::string>& intents,
                        std::vector<std::string>& slots) {
  for (const auto& seq : data.sequences) {
    for (const auto& [_, label] : seq.intents) intents.push_back(label);
    for (const auto& s : seq.slots) slots.push_back(s.label);
  }
}

// Each utterance becomes its own [CLS] turn [SEP] example.
std::vector<SluExample> build_slu_examples(const TrainData& data, int max_len,
                                           const LabelSet& intents, const LabelScheme& slots) {
  std::vector<SluExample> out;
  for (const auto& session : data.sessions) {
    int turn_start = 0;
    for (const auto& turn : session.turns) {
      const int len = static_cast<int>(turn.tokens.size());
      if (len == 0) {
        continue;
      }
      Turn t;
      t.speaker = turn.speaker;
      t.tokens = turn.tokens;
      t.turn_index = 0;
      t.intents = turn.intents;
      for (const auto& sl : turn.slots)
        t.slots.push_back({sl.start - turn_start, sl.end - turn_start, sl.label});
      DialogueSession sub;
      sub.session_id = session.session_id + "#" + std::to_string(turn.turn_index);
      sub.task = TaskKind::Slu;
      sub.turns.push_back(std::move(t));

      SluExample ex;
      ex.seq = flatten_session(sub, data.vocab, max_len);
      ex.intent_targets.assign(static_cast<std::size_t>(intents.size()), 0.0);
      for (const auto& label : turn.intents) {
        const int id = intents.id_of(label);
        if (id >= 0) ex.intent_targets[static_cast<std::size_t>(id)] = 1.0;
      }
      std::vector<LabeledSpan> spans;
      for (const auto& s : ex.seq.slots) {
        ex.gold.slots.push_back({s.start, s.end, s.label});
        if (slots.b_id(s.label) >= 0) spans.push_back({s.start, s.end, s.label});
      }
      ex.slot_tags = encode_bio(spans, ex.seq.length(), slots);
      ex.gold.intents = turn.intents;
      out.push_back(std::move(ex));
      turn_start += len;
    }
  }
  return out;
}

// shared forward for the joint intent+slot loss
std::pair<Tensor, Tensor> slu_logits(Tape& tape, const EncoderParams& params, const SluHead& head,
                                     const std::vector<int>& ids) {
  Tensor hidden = encoder_forward(tape, params, ids);
  Tensor intent = add(tape, matmul(tape, pooled_repr(tape, hidden), head.intent_w), head.intent_b);
  Tensor slot = add(tape, matmul(tape, hidden, head.slot_w), head.slot_b);
  return {intent, slot};
}

Tensor tag_nll(Tape& tape, const Tensor& logits, const std::vector<int>& tags,
               const FlatSequence& seq) {
  Tensor acc;
  int count = 0;
  for (int i = 0; i < seq.length(); ++i) {
    if (seq.is_special(i)) continue;
    Tensor ce = cross_entropy(tape, select_row(tape, logits, i), tags[static_cast<std::size_t>(i)]);
    acc = acc.defined() ? add(tape, acc, ce) : ce;
    ++count;
  }
  return scale(tape, acc, 1.0 / std::max(count, 1));
}

EvalReport eval_slu(const EncoderParams& params, const SluHead& head, const LabelSet& intents,
                    const LabelScheme& slots, const std::vector<SluExample>& examples) {
  std::vector<SluUtterance> predicted, gold;
  for (const auto& ex : examples) {
    Tape tape;
    auto [intent_logits, slot_logits] = slu_logits(tape, params, head, ex.seq.token_ids);
    SluUtterance p;
    for (int i = 0; i < intents.size(); ++i)
      if (intent_logits.at(i) > 0.0) p.intents.push_back(intents.label(i));
    const std::vector<int> tags = argmax_rows(slot_logits);
    for (const auto& span : decode_bio(tags, slots, ex.seq.special))
      p.slots.push_back(span);
    predicted.push_back(std::move(p));
    gold.push_back(ex.gold);
  }
  return slu_f1(predicted, gold);
}

}  // namespace

FinetuneResult finetune(const RunConfig& cfg_in, const TrainData& train,
                        const TrainData& eval_data, const std::string& init_checkpoint,
                        std::ostream& log) {
  RunConfig cfg = cfg_in;
  if (cfg.encoder.vocab_size == 0) cfg.encoder.vocab_size = train.vocab.size();
  cfg.validate();

  Rng init_rng(mix_seed(cfg.seed, kStreamFtInit));
  EncoderParams params = EncoderParams::init(cfg.encoder, init_rng);
  if (!init_checkpoint.empty()) {
    const Checkpoint ckpt = load_checkpoint(init_checkpoint);
    auto named = params.named();
    load_named_tensors(ckpt, named);
  }

  std::filesystem::create_directories(cfg.paths.checkpoint_dir);
  const AdamConfig adam_cfg{cfg.finetune_lr};
  log.precision(17);

  FinetuneResult result;
  if (cfg.task == TaskKind::Csrl) {
    const LabelScheme scheme = LabelScheme::from_labels(collect_role_labels(train));
    CsrlHead head = CsrlHead::init(cfg.encoder.d_model, scheme.num_tags(), init_rng);
    const auto examples = build_csrl_examples(train, scheme);
    if (examples.empty()) throw std::runtime_error("finetune: no csrl examples in corpus");

    auto named = params.named();
    for (const auto& nt : head.named()) named.push_back(nt);
    AdamState adam;
    for (int step = 0; step < cfg.finetune_steps; ++step) {
      zero_grads(named);
      Rng batch_rng(mix_seed(cfg.seed, kStreamFtBatch, static_cast<uint64_t>(step)));
      Tape tape;
      Tensor total;
      for (int b = 0; b < cfg.finetune_batch; ++b) {
        const auto& ex = examples[batch_rng.uniform_int(examples.size())];
        const FlatSequence& seq = train.sequences[static_cast<std::size_t>(ex.seq_idx)];
        Tensor logits = tag_forward(tape, params, head, seq.token_ids, ex.predicate);
        Tensor loss = tag_nll(tape, logits, ex.tags, seq);
        total = total.defined() ? add(tape, total, loss) : loss;
      }
      total = scale(tape, total, 1.0 / cfg.finetune_batch);
      if (!std::isfinite(total.value()))
        throw std::runtime_error("finetune: non-finite loss at step " + std::to_string(step + 1));
      tape.backward(total);
      adam_step(named, adam, adam_cfg);
      log << "finetune step " << (step + 1) << " loss " << total.value() << "\n";
    }

    result.report = eval_csrl(params, head, scheme, eval_data);

    json extra;
    extra["role_labels"] = scheme.labels();
    const Checkpoint ckpt = make_checkpoint(cfg, train, params, adam,
                                            static_cast<uint64_t>(cfg.finetune_steps),
                                            head.named(), extra.dump());
    result.checkpoint_path = cfg.paths.checkpoint_dir + "/finetuned.dapt";
    save_checkpoint(result.checkpoint_path, ckpt);
  } else {
    std::vector<std::string> intent_labels, slot_labels;
    collect_slu_labels(train, intent_labels, slot_labels);
    const LabelSet intents = LabelSet::from_labels(intent_labels);
    const LabelScheme slots = LabelScheme::from_labels(slot_labels);
    if (intents.size() == 0) throw std::runtime_error("finetune: no intent labels in corpus");
    SluHead head = SluHead::init(cfg.encoder.d_model, intents.size(), slots.num_tags(), init_rng);
    const auto examples = build_slu_examples(train, cfg.max_len, intents, slots);
    if (examples.empty()) throw std::runtime_error("finetune: no slu examples in corpus");

    auto named = params.named();
    for (const auto& nt : head.named()) named.push_back(nt);
    AdamState adam;
    for (int step = 0; step < cfg.finetune_steps; ++step) {
      zero_grads(named);
      Rng batch_rng(mix_seed(cfg.seed, kStreamFtBatch, static_cast<uint64_t>(step)));
      Tape tape;
      Tensor total;
      for (int b = 0; b < cfg.finetune_batch; ++b) {
        const auto& ex = examples[batch_rng.uniform_int(examples.size())];
        auto [intent_logits, slot_logits] = slu_logits(tape, params, head, ex.seq.token_ids);
        Tensor loss = add(tape, sigmoid_bce(tape, intent_logits, ex.intent_targets),
                          tag_nll(tape, slot_logits, ex.slot_tags, ex.seq));
        total = total.defined() ? add(tape, total, loss) : loss;
      }
      total = scale(tape, total, 1.0 / cfg.finetune_batch);
      if (!std::isfinite(total.value()))
        throw std::runtime_error("finetune: non-finite loss at step " + std::to_string(step + 1));
      tape.backward(total);
      adam_step(named, adam, adam_cfg);
      log << "finetune step " << (step + 1) << " loss " << total.value() << "\n";
    }

    const auto eval_examples = build_slu_examples(eval_data, cfg.max_len, intents, slots);
    result.report = eval_slu(params, head, intents, slots, eval_examples);

    json extra;
    extra["intent_labels"] = intents.labels();
    extra["slot_labels"] = slots.labels();
    const Checkpoint ckpt = make_checkpoint(cfg, train, params, adam,
                                            static_cast<uint64_t>(cfg.finetune_steps),
                                            head.named(), extra.dump());
    result.checkpoint_path = cfg.paths.checkpoint_dir + "/finetuned.dapt";
    save_checkpoint(result.checkpoint_path, ckpt);
  }
  return result;
}

EvalReport evaluate_checkpoint(const std::string& ckpt_path, const std::string& data_path) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const RunConfig cfg = RunConfig::from_map(parse_ini_text(ckpt.config_text));
  const json aux = json::parse(ckpt.aux_json);
  const TaskKind task = task_from_name(aux.at("task").get<std::string>());
  Vocab vocab = vocab_from_checkpoint(ckpt);

  RunConfig data_cfg = cfg;
  data_cfg.paths.corpus = data_path;
  const TrainData data = load_train_data(data_cfg, vocab);

  RunConfig enc_cfg = cfg;
  enc_cfg.encoder.vocab_size = vocab.size();
  Rng dummy(0);
  EncoderParams params = EncoderParams::init(enc_cfg.encoder, dummy);
  auto named = params.named();
  load_named_tensors(ckpt, named);

  if (task == TaskKind::Csrl) {
    if (!aux.contains("role_labels"))
      throw std::runtime_error("checkpoint has no task head (pretraining checkpoint?)");
    const LabelScheme scheme =
        LabelScheme::from_labels(aux.at("role_labels").get<std::vector<std::string>>());
    CsrlHead head = CsrlHead::init(enc_cfg.encoder.d_model, scheme.num_tags(), dummy);
    auto head_named = head.named();
    load_named_tensors(ckpt, head_named);
    return eval_csrl(params, head, scheme, data);
  }
  if (!aux.contains("intent_labels"))
    throw std::runtime_error("checkpoint has no task head (pretraining checkpoint?)");
  const LabelSet intents =
      LabelSet::from_labels(aux.at("intent_labels").get<std::vector<std::string>>());
  const LabelScheme slots =
      LabelScheme::from_labels(aux.at("slot_labels").get<std::vector<std::string>>());
  SluHead head = SluHead::init(enc_cfg.encoder.d_model, intents.size(), slots.num_tags(), dummy);
  auto head_named = head.named();
  load_named_tensors(ckpt, head_named);
  const auto examples = build_slu_examples(data, cfg.max_len, intents, slots);
  return eval_slu(params, head, intents, slots, examples);
}

MatrixRowSpec matrix_row(const std::string& key) {
  MatrixRowSpec row;
  row.key = key;
  row.objectives.use_mlm = true;
  row.objectives.use_sbo = false;
  row.objectives.use_pmo = false;
  if (key == "no_pretrain") {
    row.label = "No Pretraining";
    row.pretrain = false;
  } else if (key == "mlm") {
    row.label = "MLM";
    row.scheme = MaskScheme::Token;
  } else if (key == "mlm_sbo") {
    row.label = "MLM + SBO";
    row.objectives.use_sbo = true;
    row.scheme = MaskScheme::Span;
  } else if (key == "mlm_pmo") {
    row.label = "MLM + PMO";
    row.objectives.use_pmo = true;
    row.scheme = MaskScheme::Span;
  } else if (key == "mlm_sbo_pmo") {
    row.label = "MLM + SBO + PMO";
    row.objectives.use_sbo = true;
    row.objectives.use_pmo = true;
    row.scheme = MaskScheme::Span;
  } else if (key == "np50") {
    row.label = "MLM + SBO + PMO, NP sampling (alpha=50)";
    row.objectives.use_sbo = true;
    row.objectives.use_pmo = true;
    row.scheme = MaskScheme::Np;
    row.alpha = 0.5;
  } else if (key == "np80") {
    row.label = "MLM + SBO + PMO, NP sampling (alpha=80)";
    row.objectives.use_sbo = true;
    row.objectives.use_pmo = true;
    row.scheme = MaskScheme::Np;
    row.alpha = 0.8;
  } else {
    throw std::invalid_argument("unknown matrix row '" + key + "'");
  }
  return row;
}

std::vector<MatrixRowResult> run_matrix(const RunConfig& base, const std::vector<std::string>& rows,
                                        std::ostream& log) {
  const TrainData train = load_train_data(base);
  TrainData eval_data = base.paths.eval_corpus.empty()
                            ? TrainData{}
                            : [&] {
                                RunConfig c = base;
                                c.paths.corpus = base.paths.eval_corpus;
                                return load_train_data(c, train.vocab);
                              }();
  const TrainData& eval_ref = base.paths.eval_corpus.empty() ? train : eval_data;

  std::vector<MatrixRowResult> out;
  for (const auto& key : rows) {
    MatrixRowResult rr;
    try {
      const MatrixRowSpec spec = matrix_row(key);
      rr.label = spec.label;
      RunConfig cfg = base;
      cfg.objectives = spec.objectives;
      cfg.scheme = spec.scheme;
      cfg.mask.alpha = spec.alpha;
      cfg.paths.checkpoint_dir = base.paths.checkpoint_dir + "/" + key;

      std::string ckpt;
      if (spec.pretrain) {
        log << "[matrix] pretraining row '" << spec.label << "'\n";
        ckpt = pretrain(cfg, train, log).final_checkpoint;
      } else {
        log << "[matrix] row '" << spec.label << "' skips pretraining\n";
      }
      rr.report = finetune(cfg, train, eval_ref, ckpt, log).report;
      rr.ok = true;
    } catch (const std::exception& e) {
      rr.ok = false;
      rr.error = e.what();
      if (rr.label.empty()) rr.label = key;
      log << "[matrix] row '" << rr.label << "' failed: " << e.what() << "\n";
    }
    out.push_back(std::move(rr));
  }
  return out;
}

std::string format_matrix_table(const std::vector<MatrixRowResult>& rows, TaskKind task) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed;
  std::size_t width = 12;
  for (const auto& r : rows) width = std::max(width, r.label.size());
  const auto pad = [&](const std::string& s) {
    os << s;
    for (std::size_t i = s.size(); i < width + 2; ++i) os << ' ';
  };
  pad("row");
  if (task == TaskKind::Csrl)
    os << "f1_all  f1_cross  f1_intra\n";
  else
    os << "f1_intent  f1_slot  f1_all\n";
  for (const auto& r : rows) {
    pad(r.label);
    if (!r.ok) {
      os << "FAILED: " << r.error << "\n";
      continue;
    }
    if (task == TaskKind::Csrl)
      os << r.report.all.f1() << "  " << r.report.cross.f1() << "    " << r.report.intra.f1() << "\n";
    else
      os << r.report.intent.f1() << "     " << r.report.slot.f1() << "   " << r.report.all.f1() << "\n";
  }
  return os.str();
}

void write_impact_matrices(const EncoderParams& params, const std::vector<FlatSequence>& sequences,
                           const Vocab& vocab, std::ostream& out) {
  out.precision(6);
  for (const auto& seq : sequences) {
    const ImpactMatrix m = impact_matrix(params, seq.token_ids, vocab);
    out << "sequence " << seq.session_id << " n " << m.n << "\n";
    for (int i = 0; i < m.n; ++i) {
      for (int j = 0; j < m.n; ++j) {
        if (j) out << ' ';
        out << m.at(i, j);
      }
      out << "\n";
    }
    out << "\n";
  }
}

std::string mask_statistics(const RunConfig& cfg, const TrainData& data, int samples) {
  if (samples < 1) throw std::invalid_argument("maskstats: samples must be >= 1");
  if (data.sequences.empty()) throw std::runtime_error("maskstats: empty corpus");

  int64_t plans = 0, budget_exact = 0;
  int64_t actions[3] = {0, 0, 0};
  int64_t np_spans = 0, geo_spans = 0, token_spans = 0;
  std::vector<int64_t> length_hist(static_cast<std::size_t>(cfg.mask.max_span_len), 0);
  int64_t geo_lengths = 0;

  for (int s = 0; s < samples; ++s) {
    const FlatSequence& seq = data.sequences[static_cast<std::size_t>(s) % data.sequences.size()];
    Rng rng(mix_seed(cfg.seed, kStreamStats, static_cast<uint64_t>(s)));
    const MaskPlan plan = plan_for(seq, data, cfg.scheme, cfg.mask, rng);
    ++plans;
    const int budget = std::min(mask_budget(seq.maskable_length(), cfg.mask.rate),
                                seq.maskable_length());
    budget_exact += plan.budget_used == budget ? 1 : 0;
    for (const auto& span : plan.spans) {
      ++actions[static_cast<int>(span.action)];
      switch (span.source) {
        case SpanSource::Token: ++token_spans; break;
        case SpanSource::Geometric:
          ++geo_spans;
          ++geo_lengths;
          length_hist[static_cast<std::size_t>(
              std::min(span.end - span.start, cfg.mask.max_span_len - 1))] += 1;
          break;
        case SpanSource::NounPhrase: ++np_spans; break;
      }
    }
  }

  const int64_t total_spans = token_spans + geo_spans + np_spans;
  std::ostringstream os;
  os.precision(6);
  os << std::fixed;
  os << "scheme " << scheme_name(cfg.scheme) << "\n";
  os << "plans " << plans << "\n";
  os << "budget_exact " << double(budget_exact) / double(plans) << "\n";
  os << "action_mask " << double(actions[0]) / double(total_spans) << "\n";
  os << "action_random " << double(actions[1]) / double(total_spans) << "\n";
  os << "action_keep " << double(actions[2]) / double(total_spans) << "\n";
  if (geo_lengths > 0) {
    const auto pmf = clipped_geometric_pmf(cfg.mask.geo_p, cfg.mask.max_span_len);
    double tv = 0.0;
    for (int l = 1; l <= cfg.mask.max_span_len; ++l) {
      const double emp = double(length_hist[static_cast<std::size_t>(l - 1)]) / double(geo_lengths);
      tv += std::fabs(emp - pmf[static_cast<std::size_t>(l - 1)]);
      os << "len " << l << " observed " << emp << " expected " << pmf[static_cast<std::size_t>(l - 1)]
         << "\n";
    }
    os << "span_len_tv " << 0.5 * tv << "\n";
  }
  if (cfg.scheme == MaskScheme::Np && total_spans > 0)
    os << "np_fraction " << double(np_spans) / double(np_spans + geo_spans) << "\n";
  return os.str();
}

}  // namespace dapt
