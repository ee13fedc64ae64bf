#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "metrics.hpp"
#include "synthetic.hpp"

namespace unidial {

struct DatasetBundle {
  std::vector<DialogInstance> train;
  std::vector<DialogInstance> eval;
};

// Resolves the data source and applies the ablation transforms
// (data.max_turns, data.use_image) to both splits.
DatasetBundle load_dataset(const RunConfig& cfg);

struct TrainOutcome {
  std::string checkpoint_path;
  double final_loss = 0.0;
  std::uint64_t steps = 0;
  std::size_t vocab_size = 0;
};

// Builds the vocabulary, trains, and writes config.txt, vocab.txt,
// train_log.txt and model.ckpt into out_dir. Checkpoints are written at
// initialization and after each epoch, so an aborted run keeps its last
// good state.
TrainOutcome run_train(const RunConfig& cfg, const std::string& out_dir);

// Loads the checkpoint (refusing on a config-hash mismatch), evaluates the
// requested split ("train" or "eval") through the candidate cache, and
// writes metrics.txt / metrics.json / candidates.ckpt into out_dir.
SplitReport run_eval(const RunConfig& cfg, const std::string& checkpoint,
                     const std::string& split, const std::string& out_dir);

// Greedy answers for eval-split instances [start, start+count), detokenized.
std::vector<std::string> run_generate(const RunConfig& cfg,
                                      const std::string& checkpoint,
                                      std::size_t start, std::size_t count,
                                      std::size_t max_len);

struct AblationCell {
  int turns = -1;
  int vis = 1;
  bool failed = false;
  std::string error;
  SplitReport report;
};

// Trains one model per (turns, vis) cell from the shared seed and evaluates
// it; emits ablation.tsv (condition, metric, value rows) into out_dir.
// Failed cells are recorded and the sweep continues.
std::vector<AblationCell> run_ablate(const RunConfig& cfg,
                                     const std::vector<int>& turns_list,
                                     const std::vector<int>& vis_list,
                                     const std::string& out_dir);

std::string format_ablation_table(const std::vector<AblationCell>& cells);

// Parameter accounting: the constructed model of the current config, the
// brute-force patch-pathway recount, and the patch-projection sizes at the
// bert-base scale (including the D=192 evaluation).
std::string run_params(const RunConfig& cfg);

// Writes the synthetic corpus files into out_dir and returns a summary.
std::string run_synth(const RunConfig& cfg, const std::string& out_dir);

std::string mask_grid_text(std::size_t context_len, std::size_t answer_len,
                           bool bidirectional);

std::string format_report(const SplitReport& report);

}  // namespace unidial
