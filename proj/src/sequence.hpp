#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "embed.hpp"
#include "tensor.hpp"
#include "text.hpp"

namespace unidial {

// Additive-mask sentinel. Large but finite so finite-difference checks stay
// well defined; post-softmax weights underflow to exactly zero.
constexpr double kMaskNeg = -1e9;

struct Range {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
};

// Token-level layout of one unified sequence:
//   [CLS] v_1 .. v_N [EOI] caption [SEP] u_1 [SEP] ... u_m ([SEP] answer) [END]
// where the utterances are the history turns followed by the current one and,
// when present, the answer. Patch slots carry id -1. Position ids run 0..L-1
// over the whole sequence; segment 0 covers [CLS], patches and [EOI], segment
// 1 covers all text and the remaining specials.
struct SequencePlan {
  std::vector<int> ids;
  std::vector<std::size_t> positions;
  std::vector<std::size_t> segments;
  std::vector<bool> maskable;  // text tokens only; never specials or patches

  std::size_t n_patches = 0;
  Range image, caption, history, current, answer;
  bool has_answer = false;
  // First position of the autoregressive zone; == length() when no answer.
  std::size_t causal_begin = 0;

  std::size_t cls_pos = 0;
  std::size_t eoi_pos = 0;
  std::vector<std::size_t> sep_positions;
  bool has_end = false;
  std::size_t end_pos = 0;
  // Open-ended plans (generation) stop right after the answer ids, no [END].
  bool open_ended = false;

  std::size_t length() const { return ids.size(); }
};

SequencePlan plan_sequence(std::size_t n_patches,
                           const std::vector<int>& caption,
                           const std::vector<std::vector<int>>& history,
                           const std::vector<int>& current,
                           const std::vector<int>* answer, bool open_ended,
                           std::size_t max_len);

// L×L additive matrix over {0, kMaskNeg}; entry (i, j) == 0 iff i may attend
// to j. Every row keeps at least one visible entry.
struct AttentionMask {
  std::size_t len = 0;
  std::vector<double> values;  // row-major
  double at(std::size_t i, std::size_t j) const { return values[i * len + j]; }
};

// All visible except the given columns, which are hidden from every row.
AttentionMask bidirectional_mask_pattern(
    std::size_t len, const std::vector<std::size_t>& hidden_columns = {});

// Context rows see only context; row i in the causal zone sees the context
// plus zone positions <= i.
AttentionMask seq2seq_mask_pattern(std::size_t context_len,
                                   std::size_t answer_len);

AttentionMask build_bidirectional_mask(const SequencePlan& plan);
AttentionMask build_seq2seq_mask(const SequencePlan& plan);

// Debug rendering: '0' visible, 'X' hidden, one row per line.
std::string mask_grid(const AttentionMask& mask);

// Embeds `ids` (normally plan.ids, or a corrupted copy of them) against the
// plan's positions and segments; patch slots take projected rows + position +
// vision segment. projected may be null only when the plan has no patches.
Tensor embed_sequence(const SequencePlan& plan, const std::vector<int>& ids,
                      const Tensor* projected, const EmbeddingTables& tables);

struct AssembledSequence {
  SequencePlan plan;
  Tensor rows;  // [L × D]
};

AssembledSequence assemble_sequence(const Tensor* visual,
                                    const std::vector<int>& caption,
                                    const std::vector<std::vector<int>>& history,
                                    const std::vector<int>& current,
                                    const std::vector<int>* answer,
                                    const EmbeddingTables& tables,
                                    std::size_t max_len);

}  // namespace unidial
