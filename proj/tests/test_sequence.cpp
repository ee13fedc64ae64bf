#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gradcheck.hpp"
#include "rng.hpp"
#include "sequence.hpp"

using namespace unidial;

namespace {

EmbeddingTables small_tables(std::size_t vocab, std::size_t max_len,
                             std::size_t dim, Rng& rng) {
  auto fill = [&](Shape s) {
    std::vector<double> d(shape_size(s));
    for (auto& v : d) v = rng.normal();
    return Tensor::from_data(std::move(s), std::move(d));
  };
  EmbeddingTables t;
  t.word = fill({vocab, dim});
  t.position = fill({max_len, dim});
  t.segment = fill({2, dim});
  return t;
}

}  // namespace

TEST_CASE("minimal layout: no history, empty caption, one-token current") {
  SequencePlan plan = plan_sequence(3, {}, {}, {8}, nullptr, false, 64);
  // [CLS] v1 v2 v3 [EOI] [SEP] w [END]
  CHECK(plan.length() == 8);
  CHECK(plan.ids[0] == Vocab::kCls);
  CHECK(plan.ids[1] == -1);
  CHECK(plan.ids[4] == Vocab::kEoi);
  CHECK(plan.ids[5] == Vocab::kSep);
  CHECK(plan.ids[6] == 8);
  CHECK(plan.ids[7] == Vocab::kEnd);
  CHECK(plan.image.begin == 1);
  CHECK(plan.image.end == 4);
  CHECK(plan.caption.empty());
  CHECK(plan.history.empty());
  CHECK(plan.current.begin == 6);
  CHECK(plan.current.end == 7);
  CHECK_FALSE(plan.has_answer);
  CHECK(plan.causal_begin == plan.length());
  // position ids cover 0..L-1
  for (std::size_t i = 0; i < plan.length(); ++i) CHECK(plan.positions[i] == i);
  // segments: vision block 0, text 1
  CHECK(plan.segments[0] == kSegmentVision);
  CHECK(plan.segments[2] == kSegmentVision);
  CHECK(plan.segments[4] == kSegmentVision);
  CHECK(plan.segments[5] == kSegmentText);
  CHECK(plan.segments[7] == kSegmentText);
}

TEST_CASE("separator count equals utterance count") {
  // 2 history utterances + current = 3 utterances
  SequencePlan plan =
      plan_sequence(0, {7, 7}, {{8, 9}, {10, 11}}, {12}, nullptr, false, 64);
  CHECK(plan.sep_positions.size() == 3);
  std::size_t sep_count = 0;
  for (int id : plan.ids)
    if (id == Vocab::kSep) ++sep_count;
  CHECK(sep_count == 3);
  // verified positions: [CLS][EOI] cap cap [SEP] h h [SEP] h h [SEP] cur [END]
  CHECK(plan.sep_positions == std::vector<std::size_t>{4, 7, 10});
  CHECK(plan.history.begin == 4);
  CHECK(plan.history.end == 10);
}

TEST_CASE("assembled length follows the layout rule") {
  // 49 patches, caption 8, history 2 utterances of 5, current 5:
  // 1 + 49 + 1 + 8 + 3*(1) + 15 + 1 = 78
  std::vector<std::vector<int>> history{{7, 7, 7, 7, 7}, {7, 7, 7, 7, 7}};
  std::vector<int> caption(8, 7), current(5, 7);
  SequencePlan plan =
      plan_sequence(49, caption, history, current, nullptr, false, 256);
  CHECK(plan.length() == 49 + 8 + 15 + 3 + 3);
  CHECK(plan.length() == 78);
}

TEST_CASE("length budget overflow names the budget") {
  std::vector<int> caption(10, 7);
  CHECK_THROWS_WITH_AS(
      plan_sequence(4, caption, {}, {7}, nullptr, false, 16),
      doctest::Contains("16"), TruncationError);
}

TEST_CASE("answer region layout and causal begin") {
  std::vector<int> answer{5, 6};
  SequencePlan plan =
      plan_sequence(2, {7}, {{8}}, {9}, &answer, false, 64);
  // [CLS] v v [EOI] c [SEP] h [SEP] cur [SEP] a a [END]
  CHECK(plan.has_answer);
  CHECK(plan.length() == 13);
  CHECK(plan.answer.begin == 10);
  CHECK(plan.answer.end == 12);
  CHECK(plan.causal_begin == 10);
  CHECK(plan.has_end);
  CHECK(plan.end_pos == 12);
  CHECK(plan.ids[12] == Vocab::kEnd);
  CHECK(plan.sep_positions.size() == 3);

  // open-ended form: no [END]
  SequencePlan open =
      plan_sequence(2, {7}, {{8}}, {9}, &answer, true, 64);
  CHECK(open.length() == 12);
  CHECK_FALSE(open.has_end);
  CHECK(open.ids.back() == 6);
}

TEST_CASE("maskable flags cover text tokens only") {
  std::vector<int> answer{11, Vocab::kUnk};  // OOV word inside the answer
  SequencePlan plan = plan_sequence(2, {7, 8}, {{9}}, {10}, &answer, false, 64);
  for (std::size_t i = 0; i < plan.length(); ++i) {
    const bool text_token =
        plan.caption.contains(i) || plan.history.contains(i) ||
        plan.current.contains(i) || plan.answer.contains(i);
    const bool is_reserved = plan.ids[i] >= 0 && plan.ids[i] < 7;
    if (plan.maskable[i]) {
      CHECK(text_token);
      CHECK_FALSE(is_reserved);
      CHECK(plan.ids[i] >= 0);
    } else {
      CHECK((is_reserved || plan.ids[i] == -1));
    }
  }
}

TEST_CASE("bidirectional mask basics") {
  AttentionMask one = bidirectional_mask_pattern(1);
  CHECK(one.values == std::vector<double>{0.0});

  AttentionMask four = bidirectional_mask_pattern(4);
  for (double v : four.values) CHECK(v == 0.0);

  AttentionMask padded = bidirectional_mask_pattern(4, {3});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      if (j == 3) {
        CHECK(padded.at(i, j) == kMaskNeg);
      } else {
        CHECK(padded.at(i, j) == 0.0);
      }
    }
  }
}

TEST_CASE("bidirectional mask visibility pattern is symmetric") {
  AttentionMask m = bidirectional_mask_pattern(6);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      CHECK((m.at(i, j) == 0.0) == (m.at(j, i) == 0.0));
}

TEST_CASE("seq2seq mask forced example") {
  AttentionMask m = seq2seq_mask_pattern(3, 2);
  const double X = kMaskNeg;
  std::vector<double> expect{
      0, 0, 0, X, X,
      0, 0, 0, X, X,
      0, 0, 0, X, X,
      0, 0, 0, 0, X,
      0, 0, 0, 0, 0,
  };
  CHECK(m.values == expect);
}

TEST_CASE("seq2seq degenerate answer equals bidirectional") {
  AttentionMask a = seq2seq_mask_pattern(5, 0);
  AttentionMask b = bidirectional_mask_pattern(5);
  CHECK(a.values == b.values);
}

TEST_CASE("seq2seq exhaustive small instances") {
  for (std::size_t c = 0; c <= 6; ++c) {
    for (std::size_t a = 0; a <= 6; ++a) {
      if (c + a == 0) continue;
      AttentionMask m = seq2seq_mask_pattern(c, a);
      for (std::size_t i = 0; i < m.len; ++i) {
        bool row_has_visible = false;
        for (std::size_t j = 0; j < m.len; ++j) {
          const bool visible = m.at(i, j) == 0.0;
          row_has_visible = row_has_visible || visible;
          if (i < c) {
            // no visibility from context rows into answer columns
            CHECK(visible == (j < c));
          } else {
            // strictly causal inside the answer block
            CHECK(visible == (j < c || j <= i));
          }
        }
        CHECK(row_has_visible);
      }
    }
  }
}

TEST_CASE("mask builders read the plan") {
  std::vector<int> answer{5, 6};
  SequencePlan plan = plan_sequence(1, {7}, {}, {8}, &answer, false, 64);
  AttentionMask bid = build_bidirectional_mask(plan);
  for (double v : bid.values) CHECK(v == 0.0);

  AttentionMask s2s = build_seq2seq_mask(plan);
  CHECK(s2s.len == plan.length());
  for (std::size_t i = 0; i < plan.causal_begin; ++i)
    for (std::size_t j = plan.causal_begin; j < plan.length(); ++j)
      CHECK(s2s.at(i, j) == kMaskNeg);

  SequencePlan no_answer = plan_sequence(1, {7}, {}, {8}, nullptr, false, 64);
  CHECK_THROWS_AS(build_seq2seq_mask(no_answer), ContractError);
}

TEST_CASE("mask grid dump uses 0 and X") {
  AttentionMask m = seq2seq_mask_pattern(2, 1);
  CHECK(mask_grid(m) == "00X\n00X\n000\n");
}

TEST_CASE("embed_sequence matches manual composition") {
  Rng rng(21);
  EmbeddingTables tables = small_tables(12, 32, 4, rng);
  std::vector<double> proj_data(2 * 4);
  for (auto& v : proj_data) v = rng.normal();
  Tensor projected = Tensor::from_data({2, 4}, proj_data);

  SequencePlan plan = plan_sequence(2, {7}, {}, {8}, nullptr, false, 32);
  Tensor rows = embed_sequence(plan, plan.ids, &projected, tables);
  CHECK(rows.rows() == plan.length());
  CHECK(rows.cols() == 4);

  // row 0: word[CLS] + pos[0] + seg[0]
  for (std::size_t j = 0; j < 4; ++j) {
    const double expect = tables.word.data()[Vocab::kCls * 4 + j] +
                          tables.position.data()[0 * 4 + j] +
                          tables.segment.data()[0 * 4 + j];
    CHECK(rows.data()[j] == doctest::Approx(expect).epsilon(1e-12));
  }
  // row 1: first patch + pos[1] + seg[0]
  for (std::size_t j = 0; j < 4; ++j) {
    const double expect = proj_data[j] + tables.position.data()[1 * 4 + j] +
                          tables.segment.data()[0 * 4 + j];
    CHECK(rows.data()[4 + j] == doctest::Approx(expect).epsilon(1e-12));
  }
  // caption token row: word[7] + pos[4] + seg[1]
  const std::size_t cap_row = plan.caption.begin;
  for (std::size_t j = 0; j < 4; ++j) {
    const double expect = tables.word.data()[7 * 4 + j] +
                          tables.position.data()[cap_row * 4 + j] +
                          tables.segment.data()[1 * 4 + j];
    CHECK(rows.data()[cap_row * 4 + j] ==
          doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("embed_sequence without patches gives [CLS][EOI] adjacency") {
  Rng rng(22);
  EmbeddingTables tables = small_tables(12, 32, 4, rng);
  SequencePlan plan = plan_sequence(0, {}, {}, {8}, nullptr, false, 32);
  // [CLS] [EOI] [SEP] w [END]
  CHECK(plan.length() == 5);
  CHECK(plan.ids[0] == Vocab::kCls);
  CHECK(plan.ids[1] == Vocab::kEoi);
  Tensor rows = embed_sequence(plan, plan.ids, nullptr, tables);
  CHECK(rows.rows() == 5);
}

TEST_CASE("embed_sequence gradient flows through projection path") {
  Rng rng(23);
  EmbeddingTables tables = small_tables(12, 32, 3, rng);
  SequencePlan plan = plan_sequence(2, {7}, {}, {8}, nullptr, false, 32);
  std::vector<double> pd(2 * 3);
  for (auto& v : pd) v = rng.normal();
  Tensor projected = Tensor::from_data({2, 3}, pd);
  double err = grad_check(
      [&](const Tensor& p) {
        return sum(embed_sequence(plan, plan.ids, &p, tables));
      },
      projected);
  CHECK(err < 1e-4);
}
