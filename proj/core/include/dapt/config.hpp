// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "dapt/corpus.hpp"
#include "dapt/encoder.hpp"
#include "dapt/masking.hpp"
#include "dapt/objectives.hpp"

namespace dapt {

enum class MaskScheme { Token, Span, Np };

std::string scheme_name(MaskScheme s);
MaskScheme scheme_from_name(const std::string& s);

struct Paths {
  std::string corpus;
  std::string eval_corpus;  // empty -> evaluate on the training corpus
  std::string np_spans;
  std::string verb_lexicon;
  std::string checkpoint_dir = "checkpoints";
};

struct RunConfig {
  Paths paths;
  EncoderConfig encoder;      // vocab_size filled in from data at run time
  MaskConfig mask;
  ObjectiveConfig objectives;
  MaskScheme scheme = MaskScheme::Span;
  TaskKind task = TaskKind::Csrl;

  int batch_size = 128;
  double lr = 5e-5;
  int steps = 1;
  int checkpoint_every = 0;  // 0 -> only the final checkpoint
  uint64_t seed = 0;

  int max_len = 128;
  int min_count = 1;

  int finetune_steps = 200;
  int finetune_batch = 8;
  double finetune_lr = 1e-3;

  void validate() const;

  // "key = value" sections; unknown keys are ignored, every value can be
  // overridden by a "section.key" entry in overrides.
  static RunConfig from_file(const std::string& path,
                             const std::map<std::string, std::string>& overrides = {});
  static RunConfig from_map(const std::map<std::string, std::string>& kv);

  // canonical snapshot, stable across identical configs
  std::string to_text() const;
};

std::map<std::string, std::string> parse_ini(const std::string& path);
std::map<std::string, std::string> parse_ini_text(const std::string& text);

}  // namespace dapt
