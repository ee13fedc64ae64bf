#include "sequence.hpp"

namespace unidial {

SequencePlan plan_sequence(std::size_t n_patches,
                           const std::vector<int>& caption,
                           const std::vector<std::vector<int>>& history,
                           const std::vector<int>& current,
                           const std::vector<int>* answer, bool open_ended,
                           std::size_t max_len) {
  if (open_ended && answer == nullptr) {
    throw ContractError("plan_sequence: open-ended form requires an answer");
  }
  SequencePlan plan;
  plan.n_patches = n_patches;
  plan.open_ended = open_ended;

  // reserved ids stay unmaskable even when they appear as text (e.g. [UNK])
  auto push = [&plan](int id, std::size_t segment, bool maskable) {
    plan.ids.push_back(id);
    plan.positions.push_back(plan.ids.size() - 1);
    plan.segments.push_back(segment);
    plan.maskable.push_back(maskable && id >= Vocab::kReservedCount);
  };

  plan.cls_pos = 0;
  push(Vocab::kCls, kSegmentVision, false);

  plan.image.begin = plan.length();
  for (std::size_t i = 0; i < n_patches; ++i)
    push(-1, kSegmentVision, false);
  plan.image.end = plan.length();

  plan.eoi_pos = plan.length();
  push(Vocab::kEoi, kSegmentVision, false);

  plan.caption.begin = plan.length();
  for (int id : caption) push(id, kSegmentText, true);
  plan.caption.end = plan.length();

  plan.history.begin = plan.length();
  for (const auto& utterance : history) {
    plan.sep_positions.push_back(plan.length());
    push(Vocab::kSep, kSegmentText, false);
    for (int id : utterance) push(id, kSegmentText, true);
  }
  plan.history.end = plan.length();

  plan.sep_positions.push_back(plan.length());
  push(Vocab::kSep, kSegmentText, false);
  plan.current.begin = plan.length();
  for (int id : current) push(id, kSegmentText, true);
  plan.current.end = plan.length();

  if (answer != nullptr) {
    plan.has_answer = true;
    plan.sep_positions.push_back(plan.length());
    push(Vocab::kSep, kSegmentText, false);
    plan.causal_begin = plan.length();
    plan.answer.begin = plan.length();
    for (int id : *answer) push(id, kSegmentText, true);
    plan.answer.end = plan.length();
  }

  if (!open_ended) {
    plan.has_end = true;
    plan.end_pos = plan.length();
    push(Vocab::kEnd, kSegmentText, false);
  }
  if (!plan.has_answer) plan.causal_begin = plan.length();

  if (plan.length() > max_len) {
    throw TruncationError("plan_sequence: assembled length " +
                          std::to_string(plan.length()) +
                          " exceeds the budget of " + std::to_string(max_len));
  }
  return plan;
}

AttentionMask bidirectional_mask_pattern(
    std::size_t len, const std::vector<std::size_t>& hidden_columns) {
  if (len == 0) throw ContractError("mask: empty sequence");
  AttentionMask m;
  m.len = len;
  m.values.assign(len * len, 0.0);
  for (std::size_t col : hidden_columns) {
    if (col >= len) {
      throw IndexError("mask: hidden column " + std::to_string(col) +
                       " out of range for length " + std::to_string(len));
    }
    for (std::size_t i = 0; i < len; ++i) m.values[i * len + col] = kMaskNeg;
  }
  // a fully hidden sequence would leave softmax undefined
  if (hidden_columns.size() >= len) {
    bool any_visible = false;
    for (double v : m.values)
      if (v == 0.0) any_visible = true;
    if (!any_visible) throw ContractError("mask: every column hidden");
  }
  return m;
}

AttentionMask seq2seq_mask_pattern(std::size_t context_len,
                                   std::size_t answer_len) {
  const std::size_t len = context_len + answer_len;
  if (len == 0) throw ContractError("mask: empty sequence");
  AttentionMask m;
  m.len = len;
  m.values.assign(len * len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    // context rows hide the whole zone; zone rows hide positions beyond i
    const std::size_t visible_end = i < context_len ? context_len : i + 1;
    for (std::size_t j = visible_end; j < len; ++j)
      m.values[i * len + j] = kMaskNeg;
  }
  return m;
}

namespace {

std::vector<std::size_t> pad_columns(const SequencePlan& plan) {
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < plan.length(); ++i)
    if (plan.ids[i] == Vocab::kPad) cols.push_back(i);
  return cols;
}

}  // namespace

AttentionMask build_bidirectional_mask(const SequencePlan& plan) {
  return bidirectional_mask_pattern(plan.length(), pad_columns(plan));
}

AttentionMask build_seq2seq_mask(const SequencePlan& plan) {
  if (!plan.has_answer) {
    throw ContractError("build_seq2seq_mask: plan has no answer region");
  }
  AttentionMask m = seq2seq_mask_pattern(plan.causal_begin,
                                         plan.length() - plan.causal_begin);
  for (std::size_t col : pad_columns(plan))
    for (std::size_t i = 0; i < m.len; ++i) m.values[i * m.len + col] = kMaskNeg;
  return m;
}

std::string mask_grid(const AttentionMask& mask) {
  std::string out;
  out.reserve(mask.len * (mask.len + 1));
  for (std::size_t i = 0; i < mask.len; ++i) {
    for (std::size_t j = 0; j < mask.len; ++j)
      out.push_back(mask.at(i, j) == 0.0 ? '0' : 'X');
    out.push_back('\n');
  }
  return out;
}

Tensor embed_sequence(const SequencePlan& plan, const std::vector<int>& ids,
                      const Tensor* projected, const EmbeddingTables& tables) {
  if (ids.size() != plan.length()) {
    throw ContractError("embed_sequence: id list length " +
                        std::to_string(ids.size()) +
                        " does not match plan length " +
                        std::to_string(plan.length()));
  }
  if (plan.n_patches > 0) {
    if (projected == nullptr || projected->ndim() != 2 ||
        projected->rows() != plan.n_patches) {
      throw ShapeError("embed_sequence: projected patches missing or not " +
                       std::to_string(plan.n_patches) + " rows");
    }
  }

  auto token_block = [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> tok_ids, pos, seg;
    for (std::size_t i = begin; i < end; ++i) {
      if (ids[i] < 0) {
        throw ContractError("embed_sequence: patch slot in token block");
      }
      tok_ids.push_back(static_cast<std::size_t>(ids[i]));
      pos.push_back(plan.positions[i]);
      seg.push_back(plan.segments[i]);
    }
    return embed_tokens(tok_ids, tables, pos, seg);
  };

  if (plan.n_patches == 0) return token_block(0, plan.length());

  // [CLS], patch block, everything from [EOI] on
  std::vector<std::size_t> patch_pos(plan.positions.begin() + plan.image.begin,
                                     plan.positions.begin() + plan.image.end);
  Tensor head = token_block(0, plan.image.begin);
  Tensor patches = embed_patches(*projected, tables, patch_pos);
  Tensor tail = token_block(plan.image.end, plan.length());
  return concat({head, patches, tail}, 0);
}

AssembledSequence assemble_sequence(const Tensor* visual,
                                    const std::vector<int>& caption,
                                    const std::vector<std::vector<int>>& history,
                                    const std::vector<int>& current,
                                    const std::vector<int>* answer,
                                    const EmbeddingTables& tables,
                                    std::size_t max_len) {
  const std::size_t n_patches =
      visual == nullptr ? 0 : visual->rows();
  AssembledSequence seq;
  seq.plan = plan_sequence(n_patches, caption, history, current, answer,
                           /*open_ended=*/false, max_len);
  seq.rows = embed_sequence(seq.plan, seq.plan.ids, visual, tables);
  return seq;
}

}  // namespace unidial
