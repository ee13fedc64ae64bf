#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "encoder.hpp"
#include "gradcheck.hpp"
#include "model.hpp"

using namespace unidial;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
  std::vector<double> d(shape_size(shape));
  for (auto& v : d) v = rng.normal();
  return Tensor::from_data(std::move(shape), std::move(d), requires_grad);
}

LayerWeights random_layer(std::size_t dim, std::size_t ffn, Rng& rng) {
  LayerWeights w;
  w.wq = random_tensor({dim, dim}, rng);
  w.bq = random_tensor({dim}, rng);
  w.wk = random_tensor({dim, dim}, rng);
  w.wv = random_tensor({dim, dim}, rng);
  w.bv = random_tensor({dim}, rng);
  w.wo = random_tensor({dim, dim}, rng);
  w.bo = random_tensor({dim}, rng);
  w.ln1_gain = Tensor::full({dim}, 1.0);
  w.ln1_bias = Tensor::zeros({dim});
  w.fc1_w = random_tensor({dim, ffn}, rng);
  w.fc1_b = random_tensor({ffn}, rng);
  w.fc2_w = random_tensor({ffn, dim}, rng);
  w.fc2_b = random_tensor({dim}, rng);
  w.ln2_gain = Tensor::full({dim}, 1.0);
  w.ln2_bias = Tensor::zeros({dim});
  return w;
}

}  // namespace

TEST_CASE("single-position attention is a deterministic affine map") {
  Rng rng(1);
  LayerWeights w = random_layer(4, 8, rng);
  AttentionMask mask = bidirectional_mask_pattern(1);
  Tensor x = random_tensor({1, 4}, rng);
  Rng r1(0), r2(0);
  Tensor a = attention_layer(x, mask, w, 2, 0.0, false, r1);
  Tensor b = attention_layer(x, mask, w, 2, 0.0, false, r2);
  CHECK(a.data() == b.data());
  CHECK(a.rows() == 1);
  CHECK(a.cols() == 4);
}

TEST_CASE("masked column makes output invariant to that row's content") {
  Rng rng(2);
  const std::size_t len = 5, dim = 8;
  LayerWeights w = random_layer(dim, 16, rng);
  AttentionMask mask = bidirectional_mask_pattern(len);
  // hide row 3 from everyone except itself
  for (std::size_t i = 0; i < len; ++i)
    if (i != 3) mask.values[i * len + 3] = kMaskNeg;

  Tensor x = random_tensor({len, dim}, rng);
  Rng r0(0);
  Tensor base = attention_layer(x, mask, w, 2, 0.0, false, r0);

  // perturb row 3 arbitrarily
  std::vector<double> d = x.data();
  for (std::size_t j = 0; j < dim; ++j) d[3 * dim + j] += 17.5 * (j + 1);
  Tensor xp = Tensor::from_data({len, dim}, d);
  Rng r1(0);
  Tensor pert = attention_layer(xp, mask, w, 2, 0.0, false, r1);

  for (std::size_t i = 0; i < len; ++i) {
    if (i == 3) continue;
    for (std::size_t j = 0; j < dim; ++j)
      CHECK(pert.data()[i * dim + j] == base.data()[i * dim + j]);
  }
}

TEST_CASE("post-softmax weight on masked entries is zero") {
  // direct check through softmax on a masked score row
  Tensor scores = Tensor::from_data({1, 3}, {0.2, kMaskNeg, -0.7});
  Tensor probs = softmax(scores, 1);
  CHECK(probs.data()[1] < 1e-30);
  CHECK(probs.data()[1] == 0.0);  // underflows to exactly zero
  CHECK(probs.data()[0] + probs.data()[2] == doctest::Approx(1.0));
}

TEST_CASE("attention layer passes grad check") {
  for (int seed = 0; seed < 3; ++seed) {
    Rng rng(100 + seed);
    const std::size_t len = 4, dim = 6;
    LayerWeights w = random_layer(dim, 12, rng);
    AttentionMask mask = seq2seq_mask_pattern(2, 2);
    Tensor x = random_tensor({len, dim}, rng);
    Tensor probe = random_tensor({len, dim}, rng);
    double ex = grad_check(
        [&](const Tensor& t) {
          Rng r(0);
          return sum(mul(attention_layer(t, mask, w, 2, 0.0, false, r), probe));
        },
        x);
    CHECK(ex < 1e-4);
    double ew = grad_check(
        [&](const Tensor& t) {
          LayerWeights w2 = w;
          w2.wq = t;
          Rng r(0);
          return sum(
              mul(attention_layer(x, mask, w2, 2, 0.0, false, r), probe));
        },
        w.wq);
    CHECK(ew < 1e-4);
    double ev = grad_check(
        [&](const Tensor& t) {
          LayerWeights w2 = w;
          w2.fc1_w = t;
          Rng r(0);
          return sum(
              mul(attention_layer(x, mask, w2, 2, 0.0, false, r), probe));
        },
        w.fc1_w);
    CHECK(ev < 1e-4);
  }
}

TEST_CASE("zero-layer encoder is the identity") {
  Rng rng(5);
  Tensor x = random_tensor({3, 4}, rng);
  AttentionMask mask = bidirectional_mask_pattern(3);
  Rng r(0);
  Tensor y = encoder_forward(x, mask, {}, 2, 0.1, true, r);
  CHECK(y.data() == x.data());
}

TEST_CASE("seq2seq causality at the stack level is bitwise") {
  Rng rng(6);
  const std::size_t context = 5, answer = 3, dim = 8;
  const std::size_t len = context + answer;
  std::vector<LayerWeights> layers{random_layer(dim, 16, rng),
                                   random_layer(dim, 16, rng)};
  AttentionMask mask = seq2seq_mask_pattern(context, answer);
  Tensor x = random_tensor({len, dim}, rng);
  Rng r0(0);
  Tensor base = encoder_forward(x, mask, layers, 2, 0.0, false, r0);

  // substitute all answer-region inputs
  std::vector<double> d = x.data();
  for (std::size_t i = context; i < len; ++i)
    for (std::size_t j = 0; j < dim; ++j) d[i * dim + j] = 3.3 * (i + j + 1);
  Rng r1(0);
  Tensor pert = encoder_forward(Tensor::from_data({len, dim}, d), mask, layers,
                                2, 0.0, false, r1);
  // context outputs identical to the bit
  for (std::size_t i = 0; i < context; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      CHECK(pert.data()[i * dim + j] == base.data()[i * dim + j]);

  // answer position i is invariant to answer tokens at positions > i
  std::vector<double> d2 = x.data();
  for (std::size_t j = 0; j < dim; ++j)
    d2[(len - 1) * dim + j] = -9.0 * (j + 1);  // change only the last position
  Rng r2(0);
  Tensor pert2 = encoder_forward(Tensor::from_data({len, dim}, d2), mask,
                                 layers, 2, 0.0, false, r2);
  for (std::size_t i = 0; i < len - 1; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      CHECK(pert2.data()[i * dim + j] == base.data()[i * dim + j]);
}

TEST_CASE("two-layer stack passes grad check") {
  Rng rng(7);
  const std::size_t len = 4, dim = 6;
  std::vector<LayerWeights> layers{random_layer(dim, 12, rng),
                                   random_layer(dim, 12, rng)};
  AttentionMask mask = bidirectional_mask_pattern(len);
  Tensor x = random_tensor({len, dim}, rng);
  Tensor probe = random_tensor({len, dim}, rng);
  double err = grad_check(
      [&](const Tensor& t) {
        Rng r(0);
        return sum(mul(encoder_forward(t, mask, layers, 2, 0.0, false, r),
                       probe));
      },
      x);
  CHECK(err < 1e-4);
}

TEST_CASE("eval-mode forward is bitwise reproducible") {
  Rng rng(8);
  const std::size_t len = 6, dim = 8;
  std::vector<LayerWeights> layers{random_layer(dim, 16, rng)};
  AttentionMask mask = bidirectional_mask_pattern(len);
  Tensor x = random_tensor({len, dim}, rng);
  Rng r1(123), r2(456);  // rng must not matter in eval mode
  Tensor a = encoder_forward(x, mask, layers, 4, 0.3, false, r1);
  Tensor b = encoder_forward(x, mask, layers, 4, 0.3, false, r2);
  CHECK(a.data() == b.data());
}

TEST_CASE("model constructor validates config") {
  Rng rng(9);
  ModelConfig cfg;
  cfg.enc.dim = 10;
  cfg.enc.heads = 4;  // not divisible
  cfg.vocab = 20;
  CHECK_THROWS_AS(Model(cfg, rng), ParamError);
  cfg.vocab = 3;
  cfg.enc.heads = 2;
  CHECK_THROWS_AS(Model(cfg, rng), ParamError);
}

TEST_CASE("model parameter registry and counts") {
  Rng rng(10);
  ModelConfig cfg;
  cfg.enc.layers = 2;
  cfg.enc.heads = 2;
  cfg.enc.dim = 8;
  cfg.enc.ffn = 16;
  cfg.enc.max_len = 32;
  cfg.patch = 2;
  cfg.channels = 3;
  cfg.vocab = 20;
  Model m(cfg, rng);
  CHECK(m.patch_parameter_count() == count_patch_params(2, 3, 8));
  std::size_t expected = 20 * 8 + 32 * 8 + 2 * 8;       // tables
  expected += 2 * 8;                                    // embedding layer norm
  expected += (2 * 2 * 3) * 8 + 8;                      // patch projection
  expected += 2 * (4 * 8 * 8 + 3 * 8 + 2 * 8 + 8 * 16 + 16 + 16 * 8 + 8 + 2 * 8);
  expected += 20;                                       // lm bias
  CHECK(m.parameter_count() == expected);
  CHECK(m.named_parameters().size() == 7 + 2 * 15 + 1);
}
