#pragma once

#include <cstdint>
#include <string>

#include "model.hpp"

namespace unidial {

// Fully validated run settings. Every key is checked at set time; the
// resolved canonical text (sorted key=value lines) feeds the config hash that
// is embedded in all run artifacts.
struct RunConfig {
  std::string preset = "desk";

  ModelConfig model;  // model.vocab filled from the corpus at run time

  struct TrainCfg {
    double lr = 1e-3;
    double adam_beta2 = 0.999;
    std::size_t epochs = 3;
    std::size_t max_steps = 0;  // 0 = bounded by epochs only
    std::size_t batch = 8;
    double alpha = 1.0;
    double beta = 1.0;
    double mlm_rate = 0.15;
    bool mlm_bert_split = false;
    std::size_t negatives = 15;
    std::uint64_t seed = 1;
    std::size_t eval_every = 0;  // epochs between in-training evals; 0 = off
    std::size_t warmup_steps = 0;  // linear lr ramp over the first steps
  } train;

  struct DataCfg {
    std::string source = "synthetic";  // synthetic | visdial
    std::string train_path;
    std::string eval_path;
    std::string dense_path;
    std::string image_dir;
    int max_turns = -1;  // -1 = keep full history
    bool use_image = true;
    std::uint64_t synth_seed = 1;
    std::size_t synth_dialogs = 500;
    std::size_t synth_eval_dialogs = 100;
    std::size_t synth_turns = 10;
    std::size_t synth_candidates = 20;
    std::size_t synth_image_size = 32;
    double synth_image_fraction = 0.5;
    double synth_color_fraction = 0.5;
  } data;

  // used by the params report when no corpus is reachable
  std::size_t vocab_hint = 30522;
};

RunConfig default_config();

// "desk" (the defaults above) or "bert-base" (12 blocks, 12 heads, hidden
// 768, ffn 3072, patch 32, lr 3e-4, batch 32, 20 epochs).
void apply_preset(RunConfig& cfg, const std::string& name);

// Parses and validates one key; unknown keys and unparsable values raise
// ParamError. Setting "preset" applies the preset immediately, so later keys
// override preset values.
void set_key(RunConfig& cfg, const std::string& key, const std::string& value);

// Flat key=value file; '#' starts a comment, blank lines ignored.
RunConfig load_config_file(const std::string& path);

std::string resolved_text(const RunConfig& cfg);
std::string config_hash_hex(const RunConfig& cfg);

std::uint64_t fnv1a64(const std::string& text);
std::string format_double(double v);  // shortest round-trip decimal

}  // namespace unidial
