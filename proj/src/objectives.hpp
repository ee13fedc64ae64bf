#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "model.hpp"
#include "optim.hpp"

namespace unidial {

// One dialog turn in token form, ready for the encoder.
struct TokenizedInstance {
  std::vector<int> caption;
  std::vector<std::vector<int>> history;  // flattened q, a, q, a ... utterances
  std::vector<int> current;
  std::vector<std::vector<int>> candidates;
  std::vector<int> candidate_ids;  // answer-pool ids, parallel to candidates
  int gt_index = -1;
  std::optional<std::vector<double>> relevance;
  std::string kind;  // "", "image" or "history"
  Tensor patches;    // raw [N × P*P*C] rows; undefined handle when no image
  long image_id = -1;
};

struct MlmBatch {
  std::vector<int> original;
  std::vector<int> corrupted;
  std::vector<std::size_t> mask_indices;
};

// Independently masks each eligible position with the given rate; if nothing
// was selected and at least one position is maskable, one is forced so the
// loss stays defined. With bert_split (off by default) a selected position is
// replaced by [MASK] 80% of the time, by a random word 10%, left intact 10%.
MlmBatch apply_mlm_masking(const std::vector<int>& ids,
                           const std::vector<bool>& maskable, double rate,
                           Rng& rng, bool bert_split = false,
                           std::size_t vocab_size = 0);

// Tied-output logits at each masked position: hidden_row · word^T + bias.
Tensor mlm_loss(const Tensor& hidden, const MlmBatch& batch,
                const Tensor& word_table, const Tensor& output_bias);

// h_cls of the full dialog context (no answer region, bidirectional mask).
Tensor encode_context(const TokenizedInstance& inst, const Model& model,
                      bool training, Rng& rng);

// Standalone [CLS] tokens [END] sequence, text segment, bidirectional mask.
Tensor encode_candidate(const std::vector<int>& candidate_ids,
                        const Model& model, bool training, Rng& rng);

Tensor nur_loss(const Tensor& context, const Tensor& positive,
                const std::vector<Tensor>& negatives);

struct LossWeights {
  double alpha = 1.0;
  double beta = 1.0;
};

Tensor total_loss(const Tensor& mlm, const Tensor& nur, const LossWeights& w);

// Per-candidate context-free vectors, keyed by answer-pool id. Persists in
// the checkpoint container as tensors named "cand/<id>".
class CandidateCache {
 public:
  const std::vector<double>& get_or_compute(int pool_id,
                                            const std::vector<int>& ids,
                                            const Model& model);
  bool contains(int pool_id) const { return vectors_.count(pool_id) > 0; }
  std::size_t size() const { return vectors_.size(); }

  void save(const std::string& path,
            const std::map<std::string, std::string>& meta) const;
  static CandidateCache load(const std::string& path);

 private:
  std::map<int, std::vector<double>> vectors_;
};

struct Ranking {
  std::vector<std::size_t> order;  // candidate indices, best first
  std::vector<double> scores;     // parallel to the candidate list
};

// Dot-product scores against cached candidate vectors, sorted descending,
// ties broken by ascending candidate index. cache may be null (fresh
// encodings each call, same bits).
Ranking rank_candidates(const TokenizedInstance& inst, const Model& model,
                        CandidateCache* cache);

// Greedy mask-and-predict decoding with the seq2seq mask; stops at [END] or
// max_len. Reserved ids are dropped from the returned list.
std::vector<int> generate_answer(const TokenizedInstance& inst,
                                 const Model& model, std::size_t max_len);

// Sum of per-token -log p for the candidate placed in the answer region under
// the seq2seq mask (the generative-setting candidate score).
double answer_log_likelihood(const TokenizedInstance& inst,
                             const std::vector<int>& answer,
                             const Model& model);

struct TrainHyper {
  LossWeights weights;
  double mlm_rate = 0.15;
  bool mlm_bert_split = false;
  std::size_t negatives = 15;
};

// Forward both objectives over the batch, backward, one Adam step.
// Returns the pre-update mean loss.
double train_step(const std::vector<const TokenizedInstance*>& batch,
                  Model& model, const TrainHyper& hyper, AdamState& adam,
                  Rng& rng);

}  // namespace unidial
