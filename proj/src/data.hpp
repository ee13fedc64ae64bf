#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "image.hpp"
#include "objectives.hpp"
#include "rng.hpp"
#include "text.hpp"

namespace unidial {

// Mirror of the VisDial v1.0 JSON layout: global question/answer string
// pools, dialogs referencing them by index, per-turn answer options and a
// ground-truth index. The synthetic generator writes the same structure, so
// both sources flow through one loader. Synthetic turns additionally carry a
// "question_kind" tag ("image" / "history"); the key is absent in real data.
struct VisdialCorpus {
  struct Turn {
    int question = -1;
    int answer = -1;
    std::vector<int> answer_options;
    int gt_index = -1;
    std::string kind;  // empty when untagged
  };
  struct Dialog {
    long image_id = -1;
    std::string caption;
    std::vector<Turn> turns;
  };
  std::string split;
  std::vector<std::string> questions;
  std::vector<std::string> answers;
  std::vector<Dialog> dialogs;
};

// {"image_id": ..., "round_id": r (1-based), "gt_relevance": [...]} records.
struct DenseAnnotation {
  long image_id = -1;
  int round_id = -1;
  std::vector<double> relevance;
};

VisdialCorpus load_corpus_json(const std::string& path);
void save_corpus_json(const VisdialCorpus& corpus, const std::string& path);
std::vector<DenseAnnotation> load_dense_json(const std::string& path);
void save_dense_json(const std::vector<DenseAnnotation>& dense,
                     const std::string& path);

// One evaluation/training unit: a dialog turn with its context.
struct DialogInstance {
  long image_id = -1;
  std::shared_ptr<const ImageRaster> image;  // null when pixels are absent
  std::string caption;
  std::vector<std::string> history;  // q, a, q, a ... oldest first
  std::string current;
  std::vector<std::string> candidates;
  std::vector<int> candidate_ids;  // answer-pool ids
  int gt_index = -1;
  std::optional<std::vector<double>> relevance;
  std::string kind;
  int dialog_index = 0;
  int turn_index = 0;
};

using ImageStore = std::unordered_map<long, std::shared_ptr<const ImageRaster>>;

// Expands each dialog into per-turn instances (turn r sees turns < r as
// history) and joins dense annotations by (image_id, round_id).
std::vector<DialogInstance> expand_instances(
    const VisdialCorpus& corpus, const std::vector<DenseAnnotation>& dense,
    const ImageStore& images);

// Loads and expands a split file; `expected_split` is checked against the
// file's split field when both are non-empty. image_dir, when given, attaches
// "<image_id>.ufr" rasters; dense_path joins relevance annotations.
std::vector<DialogInstance> load_visdial(const std::string& path,
                                         const std::string& expected_split,
                                         const std::string& dense_path = "",
                                         const std::string& image_dir = "");

// Keeps the most recent max_turns question/answer pairs.
DialogInstance truncate_history(const DialogInstance& inst,
                                std::size_t max_turns);

DialogInstance strip_image(const DialogInstance& inst);

// Deterministically shuffled index batches; the final partial batch is kept.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t count,
                                                    std::size_t batch_size,
                                                    std::uint64_t shuffle_seed);

// Token-level view of the instances; patchifies attached rasters with the
// given patch size.
std::vector<TokenizedInstance> tokenize_instances(
    const std::vector<DialogInstance>& instances, const Vocab& vocab,
    std::size_t patch);

// Every caption, question, answer and candidate string of the instances, in
// corpus order (the tokenizer vocabulary is built from this).
std::vector<std::string> corpus_text(const std::vector<DialogInstance>& insts);

}  // namespace unidial
