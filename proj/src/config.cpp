#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace unidial {

namespace {

std::size_t parse_size(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos != v.size() || n < 0) throw std::invalid_argument(v);
    return static_cast<std::size_t>(n);
  } catch (const std::exception&) {
    throw ParamError("config: " + key + " expects a non-negative integer, got '" +
                     v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const int n = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ParamError("config: " + key + " expects an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long n = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ParamError("config: " + key + " expects an unsigned integer, got '" +
                     v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ParamError("config: " + key + " expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ParamError("config: " + key + " expects true/false, got '" + v + "'");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

RunConfig default_config() { return RunConfig{}; }

void apply_preset(RunConfig& cfg, const std::string& name) {
  if (name == "desk") {
    RunConfig fresh;
    fresh.preset = "desk";
    cfg = fresh;
    return;
  }
  if (name == "bert-base") {
    RunConfig fresh;
    fresh.preset = "bert-base";
    fresh.model.enc.layers = 12;
    fresh.model.enc.heads = 12;
    fresh.model.enc.dim = 768;
    fresh.model.enc.ffn = 3072;
    fresh.model.enc.max_len = 512;
    fresh.model.enc.dropout = 0.1;
    fresh.model.patch = 32;
    fresh.train.lr = 3e-4;
    fresh.train.batch = 32;
    fresh.train.epochs = 20;
    fresh.data.synth_image_size = 224;
    cfg = fresh;
    return;
  }
  throw ParamError("config: unknown preset '" + name + "'");
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "preset") {
    apply_preset(cfg, value);
  } else if (key == "model.layers") {
    cfg.model.enc.layers = parse_size(key, value);
  } else if (key == "model.heads") {
    const std::size_t n = parse_size(key, value);
    if (n == 0) throw ParamError("config: model.heads must be positive");
    cfg.model.enc.heads = n;
  } else if (key == "model.dim") {
    const std::size_t n = parse_size(key, value);
    if (n == 0) throw ParamError("config: model.dim must be positive");
    cfg.model.enc.dim = n;
  } else if (key == "model.ffn") {
    const std::size_t n = parse_size(key, value);
    if (n == 0) throw ParamError("config: model.ffn must be positive");
    cfg.model.enc.ffn = n;
  } else if (key == "model.max_len") {
    const std::size_t n = parse_size(key, value);
    if (n < 4) throw ParamError("config: model.max_len is too small");
    cfg.model.enc.max_len = n;
  } else if (key == "model.dropout") {
    const double d = parse_double(key, value);
    if (d < 0.0 || d >= 1.0)
      throw ParamError("config: model.dropout outside [0, 1)");
    cfg.model.enc.dropout = d;
  } else if (key == "model.patch") {
    const std::size_t n = parse_size(key, value);
    if (n == 0) throw ParamError("config: model.patch must be positive");
    cfg.model.patch = n;
  } else if (key == "model.channels") {
    const std::size_t n = parse_size(key, value);
    if (n == 0) throw ParamError("config: model.channels must be positive");
    cfg.model.channels = n;
  } else if (key == "model.vocab_hint") {
    cfg.vocab_hint = parse_size(key, value);
  } else if (key == "train.lr") {
    const double d = parse_double(key, value);
    if (d < 0.0) throw ParamError("config: train.lr must be non-negative");
    cfg.train.lr = d;
  } else if (key == "train.epochs") {
    cfg.train.epochs = parse_size(key, value);
  } else if (key == "train.max_steps") {
    cfg.train.max_steps = parse_size(key, value);
  } else if (key == "train.batch") {
    const std::size_t n = parse_size(key, value);
    if (n == 0) throw ParamError("config: train.batch must be positive");
    cfg.train.batch = n;
  } else if (key == "train.alpha") {
    const double d = parse_double(key, value);
    if (d < 0.0) throw ParamError("config: train.alpha must be non-negative");
    cfg.train.alpha = d;
  } else if (key == "train.beta") {
    const double d = parse_double(key, value);
    if (d < 0.0) throw ParamError("config: train.beta must be non-negative");
    cfg.train.beta = d;
  } else if (key == "train.mlm_rate") {
    const double d = parse_double(key, value);
    if (d < 0.0 || d >= 1.0)
      throw ParamError("config: train.mlm_rate outside [0, 1)");
    cfg.train.mlm_rate = d;
  } else if (key == "train.mlm_bert_split") {
    cfg.train.mlm_bert_split = parse_bool(key, value);
  } else if (key == "train.negatives") {
    const std::size_t n = parse_size(key, value);
    if (n == 0) throw ParamError("config: train.negatives must be positive");
    cfg.train.negatives = n;
  } else if (key == "train.seed") {
    cfg.train.seed = parse_u64(key, value);
  } else if (key == "train.eval_every") {
    cfg.train.eval_every = parse_size(key, value);
  } else if (key == "train.warmup_steps") {
    cfg.train.warmup_steps = parse_size(key, value);
  } else if (key == "train.adam_beta2") {
    const double d = parse_double(key, value);
    if (d <= 0.0 || d >= 1.0)
      throw ParamError("config: train.adam_beta2 outside (0, 1)");
    cfg.train.adam_beta2 = d;
  } else if (key == "data.source") {
    if (value != "synthetic" && value != "visdial")
      throw ParamError("config: data.source must be synthetic or visdial");
    cfg.data.source = value;
  } else if (key == "data.train_path") {
    cfg.data.train_path = value;
  } else if (key == "data.eval_path") {
    cfg.data.eval_path = value;
  } else if (key == "data.dense_path") {
    cfg.data.dense_path = value;
  } else if (key == "data.image_dir") {
    cfg.data.image_dir = value;
  } else if (key == "data.max_turns") {
    const int n = parse_int(key, value);
    if (n < -1) throw ParamError("config: data.max_turns must be >= -1");
    cfg.data.max_turns = n;
  } else if (key == "data.use_image") {
    cfg.data.use_image = parse_bool(key, value);
  } else if (key == "synth.seed") {
    cfg.data.synth_seed = parse_u64(key, value);
  } else if (key == "synth.dialogs") {
    cfg.data.synth_dialogs = parse_size(key, value);
  } else if (key == "synth.eval_dialogs") {
    cfg.data.synth_eval_dialogs = parse_size(key, value);
  } else if (key == "synth.turns") {
    const std::size_t n = parse_size(key, value);
    if (n == 0) throw ParamError("config: synth.turns must be positive");
    cfg.data.synth_turns = n;
  } else if (key == "synth.candidates") {
    const std::size_t n = parse_size(key, value);
    if (n < 2) throw ParamError("config: synth.candidates must be >= 2");
    cfg.data.synth_candidates = n;
  } else if (key == "synth.image_size") {
    const std::size_t n = parse_size(key, value);
    if (n == 0 || n % 2 != 0)
      throw ParamError("config: synth.image_size must be positive and even");
    cfg.data.synth_image_size = n;
  } else if (key == "synth.image_fraction") {
    const double d = parse_double(key, value);
    if (d < 0.0 || d > 1.0)
      throw ParamError("config: synth.image_fraction outside [0, 1]");
    cfg.data.synth_image_fraction = d;
  } else if (key == "synth.color_fraction") {
    const double d = parse_double(key, value);
    if (d < 0.0 || d > 1.0)
      throw ParamError("config: synth.color_fraction outside [0, 1]");
    cfg.data.synth_color_fraction = d;
  } else {
    throw ParamError("config: unknown key '" + key + "'");
  }
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParamError("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto begin = line.find_first_not_of(" \t\r");
    if (begin == std::string::npos) continue;
    const auto end = line.find_last_not_of(" \t\r");
    line = line.substr(begin, end - begin + 1);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParamError("config: line " + std::to_string(line_no) + " of " +
                       path + " is not key=value");
    }
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto strip = [](std::string& s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    strip(key);
    strip(value);
    set_key(cfg, key, value);
  }
  return cfg;
}

std::string resolved_text(const RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  kv["preset"] = cfg.preset;
  kv["model.layers"] = std::to_string(cfg.model.enc.layers);
  kv["model.heads"] = std::to_string(cfg.model.enc.heads);
  kv["model.dim"] = std::to_string(cfg.model.enc.dim);
  kv["model.ffn"] = std::to_string(cfg.model.enc.ffn);
  kv["model.max_len"] = std::to_string(cfg.model.enc.max_len);
  kv["model.dropout"] = format_double(cfg.model.enc.dropout);
  kv["model.patch"] = std::to_string(cfg.model.patch);
  kv["model.channels"] = std::to_string(cfg.model.channels);
  kv["model.vocab_hint"] = std::to_string(cfg.vocab_hint);
  kv["train.lr"] = format_double(cfg.train.lr);
  kv["train.epochs"] = std::to_string(cfg.train.epochs);
  kv["train.max_steps"] = std::to_string(cfg.train.max_steps);
  kv["train.batch"] = std::to_string(cfg.train.batch);
  kv["train.alpha"] = format_double(cfg.train.alpha);
  kv["train.beta"] = format_double(cfg.train.beta);
  kv["train.mlm_rate"] = format_double(cfg.train.mlm_rate);
  kv["train.mlm_bert_split"] = cfg.train.mlm_bert_split ? "true" : "false";
  kv["train.negatives"] = std::to_string(cfg.train.negatives);
  kv["train.seed"] = std::to_string(cfg.train.seed);
  kv["train.eval_every"] = std::to_string(cfg.train.eval_every);
  kv["train.warmup_steps"] = std::to_string(cfg.train.warmup_steps);
  kv["train.adam_beta2"] = format_double(cfg.train.adam_beta2);
  kv["data.source"] = cfg.data.source;
  kv["data.train_path"] = cfg.data.train_path;
  kv["data.eval_path"] = cfg.data.eval_path;
  kv["data.dense_path"] = cfg.data.dense_path;
  kv["data.image_dir"] = cfg.data.image_dir;
  kv["data.max_turns"] = std::to_string(cfg.data.max_turns);
  kv["data.use_image"] = cfg.data.use_image ? "true" : "false";
  kv["synth.seed"] = std::to_string(cfg.data.synth_seed);
  kv["synth.dialogs"] = std::to_string(cfg.data.synth_dialogs);
  kv["synth.eval_dialogs"] = std::to_string(cfg.data.synth_eval_dialogs);
  kv["synth.turns"] = std::to_string(cfg.data.synth_turns);
  kv["synth.candidates"] = std::to_string(cfg.data.synth_candidates);
  kv["synth.image_size"] = std::to_string(cfg.data.synth_image_size);
  kv["synth.image_fraction"] = format_double(cfg.data.synth_image_fraction);
  kv["synth.color_fraction"] = format_double(cfg.data.synth_color_fraction);
  std::ostringstream os;
  for (const auto& [k, v] : kv) os << k << "=" << v << "\n";
  return os.str();
}

std::string config_hash_hex(const RunConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(resolved_text(cfg))));
  return buf;
}

}  // namespace unidial
