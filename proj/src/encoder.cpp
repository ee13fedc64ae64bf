#include "encoder.hpp"

#include <cmath>

namespace unidial {

Tensor attention_layer(const Tensor& x, const AttentionMask& mask,
                       const LayerWeights& w, std::size_t heads,
                       double dropout_p, bool training, Rng& rng) {
  if (x.ndim() != 2) {
    throw ShapeError("attention_layer: expected [L x D] input, got " +
                     shape_str(x.shape()));
  }
  const std::size_t len = x.rows();
  const std::size_t dim = x.cols();
  if (heads == 0 || dim % heads != 0) {
    throw ShapeError("attention_layer: dim " + std::to_string(dim) +
                     " not divisible by " + std::to_string(heads) + " heads");
  }
  if (mask.len != len) {
    throw ShapeError("attention_layer: mask length " +
                     std::to_string(mask.len) + " vs sequence length " +
                     std::to_string(len));
  }
  const std::size_t d_head = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_head));

  Tensor mask_add = Tensor::from_data({len, len}, mask.values);
  Tensor q = add_rowvec(matmul(x, w.wq), w.bq);
  Tensor k = matmul(x, w.wk);
  Tensor v = add_rowvec(matmul(x, w.wv), w.bv);

  std::vector<Tensor> head_outs;
  head_outs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    Tensor qh = slice(q, 0, len, h * d_head, d_head);
    Tensor kh = slice(k, 0, len, h * d_head, d_head);
    Tensor vh = slice(v, 0, len, h * d_head, d_head);
    Tensor scores =
        add(scalar_mul(matmul(qh, transpose(kh)), scale), mask_add);
    Tensor probs = softmax(scores, 1);
    probs = dropout(probs, dropout_p, training, rng);
    head_outs.push_back(matmul(probs, vh));
  }
  Tensor attended = heads == 1 ? head_outs[0] : concat(head_outs, 1);
  Tensor projected = add_rowvec(matmul(attended, w.wo), w.bo);
  projected = dropout(projected, dropout_p, training, rng);
  Tensor normed1 = layer_norm(add(x, projected), w.ln1_gain, w.ln1_bias);

  Tensor hidden = gelu(add_rowvec(matmul(normed1, w.fc1_w), w.fc1_b));
  Tensor ff = add_rowvec(matmul(hidden, w.fc2_w), w.fc2_b);
  ff = dropout(ff, dropout_p, training, rng);
  return layer_norm(add(normed1, ff), w.ln2_gain, w.ln2_bias);
}

Tensor encoder_forward(const Tensor& x, const AttentionMask& mask,
                       const std::vector<LayerWeights>& layers,
                       std::size_t heads, double dropout_p, bool training,
                       Rng& rng) {
  Tensor h = x;
  for (const auto& layer : layers)
    h = attention_layer(h, mask, layer, heads, dropout_p, training, rng);
  return h;
}

}  // namespace unidial
