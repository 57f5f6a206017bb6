// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dapt/adam.hpp"
#include "dapt/checkpoint.hpp"
#include "dapt/config.hpp"
#include "dapt/corpus.hpp"
#include "dapt/downstream.hpp"
#include "dapt/objectives.hpp"

namespace dapt {

struct TrainData {
  Vocab vocab;
  std::vector<DialogueSession> sessions;
  std::vector<FlatSequence> sequences;
  std::map<std::string, NounPhraseDistribution> np;
  std::set<int> verbs;
};

Vocab vocab_from_sessions(const std::vector<DialogueSession>& sessions, int min_count);

TrainData make_train_data(std::vector<DialogueSession> sessions, Vocab vocab, int max_len,
                          std::map<std::string, NounPhraseDistribution> np = {},
                          std::set<int> verbs = {});

// Loads corpus/np/lexicon per the config paths; the vocabulary comes from the
// corpus unless one is supplied (e.g. from a checkpoint).
TrainData load_train_data(const RunConfig& cfg, const std::optional<Vocab>& preset_vocab = {});

struct PretrainResult {
  EncoderParams params;
  AdamState adam;
  uint64_t step = 0;
  double first_loss = 0.0;
  double last_loss = 0.0;
  std::string final_checkpoint;
};

// Deterministic pretraining loop: batches and per-item mask/corruption
// streams are derived from (seed, step, index), so a resumed run replays the
// exact remainder of a straight run.
PretrainResult pretrain(const RunConfig& cfg, const TrainData& data, std::ostream& log,
                        const std::string& resume_from = "");

struct FinetuneResult {
  EvalReport report;
  std::string checkpoint_path;
};

// Encoder from the checkpoint (or fresh when init_checkpoint is empty),
// task heads always fresh; trains on `train` and reports on `eval_data`.
FinetuneResult finetune(const RunConfig& cfg, const TrainData& train, const TrainData& eval_data,
                        const std::string& init_checkpoint, std::ostream& log);

// Self-contained evaluation of a finetuned checkpoint on a corpus file.
EvalReport evaluate_checkpoint(const std::string& ckpt_path, const std::string& data_path);

// Canonical experiment rows; key -> objective/scheme combination.
struct MatrixRowSpec {
  std::string key;
  std::string label;
  bool pretrain = true;
  ObjectiveConfig objectives;
  MaskScheme scheme = MaskScheme::Span;
  double alpha = 0.8;
};

MatrixRowSpec matrix_row(const std::string& key);

struct MatrixRowResult {
  std::string label;
  bool ok = false;
  std::string error;
  EvalReport report;
};

std::vector<MatrixRowResult> run_matrix(const RunConfig& base, const std::vector<std::string>& rows,
                                        std::ostream& log);
std::string format_matrix_table(const std::vector<MatrixRowResult>& rows, TaskKind task);

// One impact matrix per sequence, row-major, 6 significant digits.
void write_impact_matrices(const EncoderParams& params, const std::vector<FlatSequence>& sequences,
                           const Vocab& vocab, std::ostream& out);

// Empirical masking statistics under the config's scheme.
std::string mask_statistics(const RunConfig& cfg, const TrainData& data, int samples);

// Checkpoint assembly/restore. Loading validates shapes against the params
// built from the current config and lists every mismatched tensor.
Checkpoint make_checkpoint(const RunConfig& cfg, const TrainData& data,
                           const EncoderParams& params, const AdamState& adam, uint64_t step,
                           const std::vector<NamedTensor>& head_tensors = {},
                           const std::string& aux_extra = "");
void load_named_tensors(const Checkpoint& ckpt, std::vector<NamedTensor>& dst);
void load_adam_state(const Checkpoint& ckpt, const std::vector<NamedTensor>& params,
                     AdamState& state);
Vocab vocab_from_checkpoint(const Checkpoint& ckpt);

}  // namespace dapt
