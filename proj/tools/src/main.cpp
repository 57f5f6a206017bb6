// SPDX-License-Identifier: Apache-2.0
//
// dapt — domain-adaptive pretraining toolkit CLI.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dapt/harness.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::map<std::string, std::string> overrides;
};

// every flag maps onto its config key; set flags win over the file
void add_override_flags(CLI::App* cmd, CommonFlags& flags) {
  static const std::vector<std::pair<std::string, std::string>> kFlagKeys = {
      {"--corpus", "paths.corpus"},
      {"--eval-corpus", "paths.eval_corpus"},
      {"--np-spans", "paths.np_spans"},
      {"--verb-lexicon", "paths.verb_lexicon"},
      {"--ckpt-dir", "paths.checkpoint_dir"},
      {"--seed", "pretrain.seed"},
      {"--steps", "pretrain.steps"},
      {"--batch-size", "pretrain.batch_size"},
      {"--lr", "pretrain.lr"},
      {"--scheme", "pretrain.scheme"},
      {"--checkpoint-every", "pretrain.checkpoint_every"},
      {"--alpha", "masking.alpha"},
      {"--rate", "masking.rate"},
      {"--task", "task.task"},
      {"--finetune-steps", "task.finetune_steps"},
      {"--finetune-lr", "task.finetune_lr"},
      {"--max-len", "corpus.max_len"},
  };
  for (const auto& [flag, key] : kFlagKeys) {
    auto* opt = cmd->add_option_function<std::string>(
        flag, [&flags, key = key](const std::string& v) { flags.overrides[key] = v; });
    opt->expected(1);
  }
}

dapt::RunConfig load_config(const CommonFlags& flags) {
  if (flags.config_path.empty()) return dapt::RunConfig::from_map(flags.overrides);
  return dapt::RunConfig::from_file(flags.config_path, flags.overrides);
}

int run_pretrain(const CommonFlags& flags, const std::string& resume) {
  const dapt::RunConfig cfg = load_config(flags);
  const dapt::TrainData data = dapt::load_train_data(cfg);
  const dapt::PretrainResult res = dapt::pretrain(cfg, data, std::cout, resume);
  std::cout << "final checkpoint " << res.final_checkpoint << "\n";
  return 0;
}

int run_finetune(const CommonFlags& flags, const std::string& ckpt, bool fresh) {
  dapt::RunConfig cfg = load_config(flags);
  std::optional<dapt::Vocab> vocab;
  if (!fresh && !ckpt.empty()) vocab = dapt::vocab_from_checkpoint(dapt::load_checkpoint(ckpt));
  const dapt::TrainData train = dapt::load_train_data(cfg, vocab);

  dapt::TrainData eval_holder;
  const dapt::TrainData* eval_data = &train;
  if (!cfg.paths.eval_corpus.empty()) {
    dapt::RunConfig ec = cfg;
    ec.paths.corpus = cfg.paths.eval_corpus;
    eval_holder = dapt::load_train_data(ec, train.vocab);
    eval_data = &eval_holder;
  }

  const dapt::FinetuneResult res =
      dapt::finetune(cfg, train, *eval_data, fresh ? "" : ckpt, std::cout);
  std::cout << res.report.to_text();
  std::cout << "finetuned checkpoint " << res.checkpoint_path << "\n";
  return 0;
}

int run_eval(const std::string& ckpt, const std::string& data) {
  std::cout << dapt::evaluate_checkpoint(ckpt, data).to_text();
  return 0;
}

int run_probe(const std::string& ckpt_path, const std::string& data_path,
              const std::string& out_path) {
  const dapt::Checkpoint ckpt = dapt::load_checkpoint(ckpt_path);
  const dapt::RunConfig cfg = dapt::RunConfig::from_map(dapt::parse_ini_text(ckpt.config_text));
  dapt::Vocab vocab = dapt::vocab_from_checkpoint(ckpt);

  dapt::RunConfig data_cfg = cfg;
  data_cfg.paths.corpus = data_path;
  const dapt::TrainData data = dapt::load_train_data(data_cfg, vocab);

  dapt::RunConfig enc_cfg = cfg;
  enc_cfg.encoder.vocab_size = vocab.size();
  dapt::Rng dummy(0);
  dapt::EncoderParams params = dapt::EncoderParams::init(enc_cfg.encoder, dummy);
  auto named = params.named();
  dapt::load_named_tensors(ckpt, named);

  if (out_path == "-") {
    dapt::write_impact_matrices(params, data.sequences, vocab, std::cout);
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write '" + out_path + "'");
    dapt::write_impact_matrices(params, data.sequences, vocab, out);
  }
  return 0;
}

int run_maskstats(const CommonFlags& flags, int samples) {
  const dapt::RunConfig cfg = load_config(flags);
  const dapt::TrainData data = dapt::load_train_data(cfg);
  std::cout << dapt::mask_statistics(cfg, data, samples);
  return 0;
}

int run_matrix(const CommonFlags& flags, const std::string& grid_path) {
  auto grid = dapt::parse_ini(grid_path);
  CommonFlags effective = flags;
  if (effective.config_path.empty()) {
    const auto it = grid.find("base");
    if (it == grid.end())
      throw std::runtime_error("matrix: grid file has no 'base' and no --config given");
    effective.config_path = it->second;
  }
  const dapt::RunConfig cfg = load_config(effective);

  std::vector<std::string> rows;
  {
    const auto it = grid.find("rows");
    if (it == grid.end()) throw std::runtime_error("matrix: grid file has no 'rows'");
    std::istringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b != std::string::npos) rows.push_back(item.substr(b, e - b + 1));
    }
  }

  const auto results = dapt::run_matrix(cfg, rows, std::cout);
  std::cout << dapt::format_matrix_table(results, cfg.task);
  for (const auto& r : results)
    if (!r.ok) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"domain-adaptive pretraining toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string resume, ckpt, data, out = "-", grid;
  bool fresh = false;
  int samples = 100000;

  auto* pre = app.add_subcommand("pretrain", "run the pretraining loop");
  pre->add_option("--config", flags.config_path, "config file");
  pre->add_option("--resume", resume, "checkpoint to resume from");
  add_override_flags(pre, flags);

  auto* fin = app.add_subcommand("finetune", "fine-tune and evaluate a task head");
  fin->add_option("--config", flags.config_path, "config file");
  fin->add_option("--ckpt", ckpt, "pretraining checkpoint to initialize from");
  fin->add_flag("--fresh", fresh, "ignore --ckpt and start from fresh weights");
  add_override_flags(fin, flags);

  auto* ev = app.add_subcommand("eval", "evaluate a finetuned checkpoint");
  ev->add_option("--ckpt", ckpt, "finetuned checkpoint")->required();
  ev->add_option("--data", data, "corpus file")->required();

  auto* pr = app.add_subcommand("probe", "write perturbation impact matrices");
  pr->add_option("--ckpt", ckpt, "checkpoint")->required();
  pr->add_option("--data", data, "corpus file")->required();
  pr->add_option("--out", out, "output path, - for stdout");

  auto* ms = app.add_subcommand("maskstats", "empirical masking statistics");
  ms->add_option("--config", flags.config_path, "config file");
  ms->add_option("--samples", samples, "number of plans to sample");
  add_override_flags(ms, flags);

  auto* mx = app.add_subcommand("matrix", "run an experiment grid");
  mx->add_option("--grid", grid, "grid file")->required();
  mx->add_option("--config", flags.config_path, "base config file");
  add_override_flags(mx, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) return run_pretrain(flags, resume);
    if (fin->parsed()) return run_finetune(flags, ckpt, fresh);
    if (ev->parsed()) return run_eval(ckpt, data);
    if (pr->parsed()) return run_probe(ckpt, data, out);
    if (ms->parsed()) return run_maskstats(flags, samples);
    if (mx->parsed()) return run_matrix(flags, grid);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
