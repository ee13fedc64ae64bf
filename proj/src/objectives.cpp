#include "objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace unidial {

namespace {

// Projects the raw patch rows when the instance carries an image; returns
// null when it does not (the [CLS][EOI]-adjacent layout).
struct VisualPath {
  Tensor projected;
  const Tensor* ptr = nullptr;
};

VisualPath project_visual(const TokenizedInstance& inst, const Model& model) {
  VisualPath v;
  if (inst.patches.defined()) {
    v.projected = patch_project(inst.patches, model.patch());
    v.ptr = &v.projected;
  }
  return v;
}

Tensor forward_plan(const SequencePlan& plan, const std::vector<int>& ids,
                    const Tensor* visual, const AttentionMask& mask,
                    const Model& model, bool training, Rng& rng) {
  Tensor rows = model.embed_norm(embed_sequence(plan, ids, visual,
                                                model.tables()),
                                 training, rng);
  return encoder_forward(rows, mask, model.layers(), model.config().enc.heads,
                         model.config().enc.dropout, training, rng);
}

std::size_t argmax_row(const Tensor& logits) {
  const auto& d = logits.data();
  std::size_t best = 0;
  for (std::size_t i = 1; i < d.size(); ++i)
    if (d[i] > d[best]) best = i;
  return best;
}

}  // namespace

MlmBatch apply_mlm_masking(const std::vector<int>& ids,
                           const std::vector<bool>& maskable, double rate,
                           Rng& rng, bool bert_split, std::size_t vocab_size) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ParamError("apply_mlm_masking: rate " + std::to_string(rate) +
                     " outside [0, 1)");
  }
  if (ids.size() != maskable.size()) {
    throw ContractError("apply_mlm_masking: flag list length mismatch");
  }
  if (bert_split && vocab_size <= Vocab::kReservedCount) {
    throw ParamError("apply_mlm_masking: bert_split needs the vocab size");
  }
  MlmBatch b;
  b.original = ids;
  b.corrupted = ids;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (maskable[i] && rng.uniform() < rate) b.mask_indices.push_back(i);
  }
  if (b.mask_indices.empty()) {
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < ids.size(); ++i)
      if (maskable[i]) eligible.push_back(i);
    if (!eligible.empty()) {
      b.mask_indices.push_back(eligible[rng.uniform_index(eligible.size())]);
    }
  }
  for (std::size_t k : b.mask_indices) {
    if (!bert_split) {
      b.corrupted[k] = Vocab::kMask;
      continue;
    }
    const double roll = rng.uniform();
    if (roll < 0.8) {
      b.corrupted[k] = Vocab::kMask;
    } else if (roll < 0.9) {
      const std::size_t words = vocab_size - Vocab::kReservedCount;
      b.corrupted[k] =
          static_cast<int>(Vocab::kReservedCount + rng.uniform_index(words));
    }  // else keep the original token as its own target
  }
  return b;
}

Tensor mlm_loss(const Tensor& hidden, const MlmBatch& batch,
                const Tensor& word_table, const Tensor& output_bias) {
  if (batch.mask_indices.empty()) {
    throw ContractError("mlm_loss: no masked positions (caller must skip)");
  }
  Tensor gathered = gather_rows(hidden, batch.mask_indices);
  Tensor logits =
      add_rowvec(matmul(gathered, transpose(word_table)), output_bias);
  std::vector<std::size_t> targets;
  targets.reserve(batch.mask_indices.size());
  for (std::size_t k : batch.mask_indices) {
    const int id = batch.original[k];
    if (id < 0) throw ContractError("mlm_loss: masked patch position");
    targets.push_back(static_cast<std::size_t>(id));
  }
  return cross_entropy(logits, targets);
}

Tensor encode_context(const TokenizedInstance& inst, const Model& model,
                      bool training, Rng& rng) {
  VisualPath visual = project_visual(inst, model);
  SequencePlan plan =
      plan_sequence(visual.ptr == nullptr ? 0 : visual.projected.rows(),
                    inst.caption, inst.history, inst.current, nullptr,
                    /*open_ended=*/false, model.config().enc.max_len);
  AttentionMask mask = build_bidirectional_mask(plan);
  Tensor h =
      forward_plan(plan, plan.ids, visual.ptr, mask, model, training, rng);
  return slice(h, 0, 1, 0, model.config().enc.dim);
}

Tensor encode_candidate(const std::vector<int>& candidate_ids,
                        const Model& model, bool training, Rng& rng) {
  if (candidate_ids.empty()) {
    throw ContractError("encode_candidate: empty candidate token list");
  }
  const std::size_t len = candidate_ids.size() + 2;
  if (len > model.config().enc.max_len) {
    throw TruncationError("encode_candidate: candidate length " +
                          std::to_string(len) + " exceeds the budget of " +
                          std::to_string(model.config().enc.max_len));
  }
  std::vector<std::size_t> ids, positions, segments;
  ids.push_back(Vocab::kCls);
  for (int id : candidate_ids) {
    if (id < 0) throw ContractError("encode_candidate: negative token id");
    ids.push_back(static_cast<std::size_t>(id));
  }
  ids.push_back(Vocab::kEnd);
  for (std::size_t i = 0; i < len; ++i) {
    positions.push_back(i);
    segments.push_back(kSegmentText);
  }
  Tensor rows = model.embed_norm(
      embed_tokens(ids, model.tables(), positions, segments), training, rng);
  AttentionMask mask = bidirectional_mask_pattern(len);
  Tensor h =
      encoder_forward(rows, mask, model.layers(), model.config().enc.heads,
                      model.config().enc.dropout, training, rng);
  return slice(h, 0, 1, 0, model.config().enc.dim);
}

Tensor nur_loss(const Tensor& context, const Tensor& positive,
                const std::vector<Tensor>& negatives) {
  if (negatives.empty()) {
    throw ContractError("nur_loss: at least one negative required");
  }
  std::vector<Tensor> scores;
  scores.reserve(negatives.size() + 1);
  scores.push_back(matmul(context, transpose(positive)));
  for (const auto& n : negatives)
    scores.push_back(matmul(context, transpose(n)));
  Tensor logits = concat(scores, 1);  // [1 x (1 + negatives)]
  return cross_entropy(logits, {0});
}

Tensor total_loss(const Tensor& mlm, const Tensor& nur, const LossWeights& w) {
  if (w.alpha < 0.0 || w.beta < 0.0 || (w.alpha == 0.0 && w.beta == 0.0)) {
    throw ContractError(
        "total_loss: weights must be non-negative and not both zero");
  }
  return add(scalar_mul(mlm, w.alpha), scalar_mul(nur, w.beta));
}

const std::vector<double>& CandidateCache::get_or_compute(
    int pool_id, const std::vector<int>& ids, const Model& model) {
  auto it = vectors_.find(pool_id);
  if (it != vectors_.end()) return it->second;
  NoGradGuard ng;
  Rng quiet(0);
  Tensor v = encode_candidate(ids, model, /*training=*/false, quiet);
  return vectors_.emplace(pool_id, v.data()).first->second;
}

void CandidateCache::save(
    const std::string& path,
    const std::map<std::string, std::string>& meta) const {
  Checkpoint ck;
  ck.meta = meta;
  ck.meta["kind"] = "candidate_cache";
  for (const auto& [id, vec] : vectors_) {
    ck.tensors.push_back({"cand/" + std::to_string(id), {vec.size()}, vec});
  }
  ck.save(path);
}

CandidateCache CandidateCache::load(const std::string& path) {
  Checkpoint ck = Checkpoint::load(path);
  CandidateCache cache;
  for (const auto& e : ck.tensors) {
    if (e.name.rfind("cand/", 0) != 0) {
      throw DataError("candidate cache: unexpected tensor " + e.name);
    }
    cache.vectors_[std::stoi(e.name.substr(5))] = e.values;
  }
  return cache;
}

Ranking rank_candidates(const TokenizedInstance& inst, const Model& model,
                        CandidateCache* cache) {
  NoGradGuard ng;
  Rng quiet(0);
  Tensor h = encode_context(inst, model, /*training=*/false, quiet);
  const std::size_t n = inst.candidates.size();
  Ranking r;
  r.scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor fresh;
    const std::vector<double>* vec;
    if (cache != nullptr) {
      vec = &cache->get_or_compute(inst.candidate_ids[i], inst.candidates[i],
                                   model);
    } else {
      fresh = encode_candidate(inst.candidates[i], model, false, quiet);
      vec = &fresh.data();
    }
    double s = 0.0;
    for (std::size_t j = 0; j < vec->size(); ++j)
      s += h.data()[j] * (*vec)[j];
    r.scores[i] = s;
  }
  r.order.resize(n);
  std::iota(r.order.begin(), r.order.end(), 0);
  std::sort(r.order.begin(), r.order.end(), [&](std::size_t a, std::size_t b) {
    if (r.scores[a] != r.scores[b]) return r.scores[a] > r.scores[b];
    return a < b;
  });
  return r;
}

std::vector<int> generate_answer(const TokenizedInstance& inst,
                                 const Model& model, std::size_t max_len) {
  if (max_len == 0) throw ParamError("generate_answer: max_len must be >= 1");
  NoGradGuard ng;
  Rng quiet(0);
  VisualPath visual = project_visual(inst, model);
  const std::size_t n_patches =
      visual.ptr == nullptr ? 0 : visual.projected.rows();

  std::vector<int> generated;
  for (std::size_t step = 0; step < max_len; ++step) {
    std::vector<int> answer = generated;
    answer.push_back(Vocab::kMask);
    SequencePlan plan = plan_sequence(n_patches, inst.caption, inst.history,
                                      inst.current, &answer,
                                      /*open_ended=*/true,
                                      model.config().enc.max_len);
    AttentionMask mask = build_seq2seq_mask(plan);
    Tensor h = forward_plan(plan, plan.ids, visual.ptr, mask, model,
                            /*training=*/false, quiet);
    const std::size_t pos = plan.length() - 1;
    Tensor logits =
        add_rowvec(matmul(slice(h, pos, 1, 0, model.config().enc.dim),
                          transpose(model.tables().word)),
                   model.lm_bias());
    const std::size_t pred = argmax_row(logits);
    if (pred == static_cast<std::size_t>(Vocab::kEnd)) break;
    generated.push_back(static_cast<int>(pred));
  }
  std::vector<int> out;
  for (int id : generated)
    if (id >= Vocab::kReservedCount) out.push_back(id);
  return out;
}

double answer_log_likelihood(const TokenizedInstance& inst,
                             const std::vector<int>& answer,
                             const Model& model) {
  if (answer.empty()) {
    throw ContractError("answer_log_likelihood: empty answer");
  }
  NoGradGuard ng;
  Rng quiet(0);
  VisualPath visual = project_visual(inst, model);
  const std::size_t n_patches =
      visual.ptr == nullptr ? 0 : visual.projected.rows();

  // score token t from the prefix a_0..a_{t-1} with [MASK] in slot t; the
  // final step scores [END] after the full answer
  double total = 0.0;
  for (std::size_t t = 0; t <= answer.size(); ++t) {
    std::vector<int> work(answer.begin(),
                          answer.begin() + static_cast<std::ptrdiff_t>(t));
    work.push_back(Vocab::kMask);
    SequencePlan plan = plan_sequence(n_patches, inst.caption, inst.history,
                                      inst.current, &work, /*open_ended=*/true,
                                      model.config().enc.max_len);
    AttentionMask mask = build_seq2seq_mask(plan);
    Tensor h =
        forward_plan(plan, plan.ids, visual.ptr, mask, model, false, quiet);
    const std::size_t pos = plan.length() - 1;
    Tensor logits =
        add_rowvec(matmul(slice(h, pos, 1, 0, model.config().enc.dim),
                          transpose(model.tables().word)),
                   model.lm_bias());
    const std::size_t target =
        t < answer.size() ? static_cast<std::size_t>(answer[t])
                          : static_cast<std::size_t>(Vocab::kEnd);
    total -= cross_entropy(logits, {target}).item();
  }
  return total;
}

double train_step(const std::vector<const TokenizedInstance*>& batch,
                  Model& model, const TrainHyper& hyper, AdamState& adam,
                  Rng& rng) {
  if (batch.empty()) throw ContractError("train_step: empty batch");
  model.zero_grads();

  // one training-mode encoding per distinct candidate per step; the node is
  // shared across instances, so gradients accumulate through shared scores
  std::map<int, Tensor> step_candidates;
  auto candidate_vec = [&](const TokenizedInstance& inst,
                           std::size_t i) -> Tensor {
    const int pool_id = inst.candidate_ids[i];
    auto it = step_candidates.find(pool_id);
    if (it != step_candidates.end()) return it->second;
    Tensor v = encode_candidate(inst.candidates[i], model, true, rng);
    step_candidates.emplace(pool_id, v);
    return v;
  };

  std::vector<Tensor> losses;
  losses.reserve(batch.size());
  for (const TokenizedInstance* inst : batch) {
    if (inst->gt_index < 0 ||
        inst->gt_index >= static_cast<int>(inst->candidates.size())) {
      throw ContractError("train_step: instance without a valid gt candidate");
    }
    const std::vector<int>& answer =
        inst->candidates[static_cast<std::size_t>(inst->gt_index)];

    // generative pathway: MLM over the context+answer sequence, seq2seq mask
    VisualPath visual = project_visual(*inst, model);
    SequencePlan plan = plan_sequence(
        visual.ptr == nullptr ? 0 : visual.projected.rows(), inst->caption,
        inst->history, inst->current, &answer, false,
        model.config().enc.max_len);
    MlmBatch mb =
        apply_mlm_masking(plan.ids, plan.maskable, hyper.mlm_rate, rng,
                          hyper.mlm_bert_split, model.config().vocab);
    Tensor mlm;
    bool have_mlm = false;
    if (!mb.mask_indices.empty()) {
      AttentionMask mask = build_seq2seq_mask(plan);
      Tensor h = forward_plan(plan, mb.corrupted, visual.ptr, mask, model,
                              /*training=*/true, rng);
      mlm = mlm_loss(h, mb, model.tables().word, model.lm_bias());
      have_mlm = true;
    }

    // retrieval pathway: dual encoding against sampled negatives
    Tensor ctx = encode_context(*inst, model, /*training=*/true, rng);
    Tensor positive =
        candidate_vec(*inst, static_cast<std::size_t>(inst->gt_index));
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < inst->candidates.size(); ++i)
      if (static_cast<int>(i) != inst->gt_index) others.push_back(i);
    if (others.empty()) {
      throw ContractError("train_step: instance needs at least one negative");
    }
    if (others.size() > hyper.negatives) {
      shuffle(others, rng);
      others.resize(hyper.negatives);
    }
    std::vector<Tensor> negatives;
    negatives.reserve(others.size());
    for (std::size_t i : others) negatives.push_back(candidate_vec(*inst, i));
    Tensor nur = nur_loss(ctx, positive, negatives);

    losses.push_back(have_mlm ? total_loss(mlm, nur, hyper.weights)
                              : scalar_mul(nur, hyper.weights.beta));
  }

  Tensor batch_loss = losses.size() == 1 ? losses[0] : mean(concat(losses, 0));
  const double value = batch_loss.item();
  if (!std::isfinite(value)) {
    throw TrainError("train_step: non-finite loss at optimizer step " +
                     std::to_string(adam.step_count() + 1));
  }
  backward(batch_loss);
  auto params = model.parameters();
  adam.step(params);
  return value;
}

}  // namespace unidial
