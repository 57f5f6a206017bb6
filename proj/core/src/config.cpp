// SPDX-License-Identifier: Apache-2.0
#include "dapt/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dapt {

std::string scheme_name(MaskScheme s) {
  switch (s) {
    case MaskScheme::Token: return "token";
    case MaskScheme::Span: return "span";
    case MaskScheme::Np: return "np";
  }
  return "span";
}

MaskScheme scheme_from_name(const std::string& s) {
  if (s == "token") return MaskScheme::Token;
  if (s == "span") return MaskScheme::Span;
  if (s == "np") return MaskScheme::Np;
  throw std::invalid_argument("unknown masking scheme '" + s + "'");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw std::invalid_argument("config: bad boolean '" + v + "'");
}

class KvReader {
 public:
  explicit KvReader(const std::map<std::string, std::string>& kv) : kv_(kv) {}

  std::string str(const std::string& key, const std::string& def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : it->second;
  }
  int integer(const std::string& key, int def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : std::stoi(it->second);
  }
  uint64_t u64(const std::string& key, uint64_t def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : std::stoull(it->second);
  }
  double real(const std::string& key, double def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : std::stod(it->second);
  }
  bool boolean(const std::string& key, bool def) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? def : parse_bool(it->second);
  }

 private:
  const std::map<std::string, std::string>& kv_;
};

}  // namespace

std::map<std::string, std::string> parse_ini_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

std::map<std::string, std::string> parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_ini_text(ss.str());
}

void RunConfig::validate() const {
  encoder.validate();
  mask.validate();
  objectives.validate();
  if (steps < 1) throw std::invalid_argument("config: steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
  if (max_len < 3) throw std::invalid_argument("config: max_len must be >= 3");
  if (finetune_steps < 1 || finetune_batch < 1)
    throw std::invalid_argument("config: finetune steps/batch must be >= 1");
}

RunConfig RunConfig::from_map(const std::map<std::string, std::string>& kv) {
  KvReader r(kv);
  RunConfig c;
  c.paths.corpus = r.str("paths.corpus", "");
  c.paths.eval_corpus = r.str("paths.eval_corpus", "");
  c.paths.np_spans = r.str("paths.np_spans", "");
  c.paths.verb_lexicon = r.str("paths.verb_lexicon", "");
  c.paths.checkpoint_dir = r.str("paths.checkpoint_dir", "checkpoints");

  c.encoder.vocab_size = r.integer("encoder.vocab_size", 0);
  c.encoder.d_model = r.integer("encoder.d_model", 64);
  c.encoder.n_heads = r.integer("encoder.n_heads", 4);
  c.encoder.n_layers = r.integer("encoder.n_layers", 2);
  c.encoder.d_ff = r.integer("encoder.d_ff", 128);
  c.encoder.max_positions = r.integer("encoder.max_positions", 128);
  c.encoder.layer_norm_eps = r.real("encoder.layer_norm_eps", 1e-5);
  c.encoder.sbo_max_span = r.integer("encoder.sbo_max_span", 10);
  c.encoder.diag_attention = r.boolean("encoder.diag_attention", false);

  c.mask.rate = r.real("masking.rate", 0.15);
  c.mask.p_mask = r.real("masking.p_mask", 0.8);
  c.mask.p_random = r.real("masking.p_random", 0.1);
  c.mask.p_keep = r.real("masking.p_keep", 0.1);
  c.mask.geo_p = r.real("masking.geo_p", 0.2);
  c.mask.max_span_len = r.integer("masking.max_span_len", 10);
  c.mask.alpha = r.real("masking.alpha", 0.8);

  c.objectives.use_mlm = r.boolean("objectives.use_mlm", true);
  c.objectives.use_sbo = r.boolean("objectives.use_sbo", false);
  c.objectives.use_pmo = r.boolean("objectives.use_pmo", false);
  c.objectives.w_mlm = r.real("objectives.w_mlm", 1.0);
  c.objectives.w_sbo = r.real("objectives.w_sbo", 1.0);
  c.objectives.w_pmo = r.real("objectives.w_pmo", 1.0);
  c.objectives.pmo_sign = r.integer("objectives.pmo_sign", -1);
  c.objectives.pmo_clip = r.real("objectives.pmo_clip", 5.0);
  c.objectives.pmo_mode =
      r.str("objectives.pmo_mode", "exact") == "batched" ? PmoMode::Batched : PmoMode::Exact;

  c.scheme = scheme_from_name(r.str("pretrain.scheme", "span"));
  c.batch_size = r.integer("pretrain.batch_size", 128);
  c.lr = r.real("pretrain.lr", 5e-5);
  c.steps = r.integer("pretrain.steps", 1);
  c.checkpoint_every = r.integer("pretrain.checkpoint_every", 0);
  c.seed = r.u64("pretrain.seed", 0);
  c.max_len = r.integer("corpus.max_len", 128);
  c.min_count = r.integer("corpus.min_count", 1);

  c.task = task_from_name(r.str("task.task", "csrl"));
  c.finetune_steps = r.integer("task.finetune_steps", 200);
  c.finetune_batch = r.integer("task.finetune_batch", 8);
  c.finetune_lr = r.real("task.finetune_lr", 1e-3);
  return c;
}

RunConfig RunConfig::from_file(const std::string& path,
                               const std::map<std::string, std::string>& overrides) {
  auto kv = parse_ini(path);
  for (const auto& [k, v] : overrides) kv[k] = v;
  return from_map(kv);
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "[paths]\n"
     << "corpus = " << paths.corpus << "\n"
     << "eval_corpus = " << paths.eval_corpus << "\n"
     << "np_spans = " << paths.np_spans << "\n"
     << "verb_lexicon = " << paths.verb_lexicon << "\n"
     << "checkpoint_dir = " << paths.checkpoint_dir << "\n";
  os << "[encoder]\n"
     << "vocab_size = " << encoder.vocab_size << "\n"
     << "d_model = " << encoder.d_model << "\n"
     << "n_heads = " << encoder.n_heads << "\n"
     << "n_layers = " << encoder.n_layers << "\n"
     << "d_ff = " << encoder.d_ff << "\n"
     << "max_positions = " << encoder.max_positions << "\n"
     << "layer_norm_eps = " << encoder.layer_norm_eps << "\n"
     << "sbo_max_span = " << encoder.sbo_max_span << "\n"
     << "diag_attention = " << (encoder.diag_attention ? "true" : "false") << "\n";
  os << "[masking]\n"
     << "rate = " << mask.rate << "\n"
     << "p_mask = " << mask.p_mask << "\n"
     << "p_random = " << mask.p_random << "\n"
     << "p_keep = " << mask.p_keep << "\n"
     << "geo_p = " << mask.geo_p << "\n"
     << "max_span_len = " << mask.max_span_len << "\n"
     << "alpha = " << mask.alpha << "\n";
  os << "[objectives]\n"
     << "use_mlm = " << (objectives.use_mlm ? "true" : "false") << "\n"
     << "use_sbo = " << (objectives.use_sbo ? "true" : "false") << "\n"
     << "use_pmo = " << (objectives.use_pmo ? "true" : "false") << "\n"
     << "w_mlm = " << objectives.w_mlm << "\n"
     << "w_sbo = " << objectives.w_sbo << "\n"
     << "w_pmo = " << objectives.w_pmo << "\n"
     << "pmo_sign = " << objectives.pmo_sign << "\n"
     << "pmo_clip = " << objectives.pmo_clip << "\n"
     << "pmo_mode = " << (objectives.pmo_mode == PmoMode::Batched ? "batched" : "exact") << "\n";
  os << "[pretrain]\n"
     << "scheme = " << scheme_name(scheme) << "\n"
     << "batch_size = " << batch_size << "\n"
     << "lr = " << lr << "\n"
     << "steps = " << steps << "\n"
     << "checkpoint_every = " << checkpoint_every << "\n"
     << "seed = " << seed << "\n";
  os << "[corpus]\n"
     << "max_len = " << max_len << "\n"
     << "min_count = " << min_count << "\n";
  os << "[task]\n"
     << "task = " << task_name(task) << "\n"
     << "finetune_steps = " << finetune_steps << "\n"
     << "finetune_batch = " << finetune_batch << "\n"
     << "finetune_lr = " << finetune_lr << "\n";
  return os.str();
}

}  // namespace dapt
