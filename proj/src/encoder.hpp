#pragma once

#include <cstddef>
#include <vector>

#include "rng.hpp"
#include "sequence.hpp"
#include "tensor.hpp"

namespace unidial {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t dim = 64;
  std::size_t ffn = 256;
  double dropout = 0.1;
  std::size_t max_len = 256;
};

// One post-norm block: multi-head attention + residual + layer norm, then a
// GELU feed-forward + residual + layer norm.
// The key projection carries no bias: a per-row constant added to the
// attention scores cancels in the softmax, so such a bias is unlearnable.
struct LayerWeights {
  Tensor wq, bq, wk, wv, bv;  // [D×D], [D]
  Tensor wo, bo;              // [D×D], [D]
  Tensor ln1_gain, ln1_bias;      // [D]
  Tensor fc1_w, fc1_b;            // [D×F], [F]
  Tensor fc2_w, fc2_b;            // [F×D], [D]
  Tensor ln2_gain, ln2_bias;      // [D]
};

// softmax(Q·K^T/sqrt(d_head) + M)·V per head, heads concatenated and
// projected, both sublayers with residual + post-norm.
Tensor attention_layer(const Tensor& x, const AttentionMask& mask,
                       const LayerWeights& w, std::size_t heads,
                       double dropout_p, bool training, Rng& rng);

Tensor encoder_forward(const Tensor& x, const AttentionMask& mask,
                       const std::vector<LayerWeights>& layers,
                       std::size_t heads, double dropout_p, bool training,
                       Rng& rng);

}  // namespace unidial
