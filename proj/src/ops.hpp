#pragma once

#include <cstddef>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace unidial {

// All operations record backward closures when grad recording is enabled and
// any input requires grad. Inputs are 1-D or 2-D unless stated otherwise.

Tensor matmul(const Tensor& a, const Tensor& b);  // [m×k]·[k×n] -> [m×n]

Tensor add(const Tensor& a, const Tensor& b);       // same shape
Tensor add_rowvec(const Tensor& m, const Tensor& v);  // [r×c] + [c] per row
Tensor subtract(const Tensor& a, const Tensor& b);  // same shape
Tensor mul(const Tensor& a, const Tensor& b);       // elementwise, same shape
Tensor scalar_mul(const Tensor& a, double c);

Tensor transpose(const Tensor& a);            // 2-D
Tensor reshape(const Tensor& a, Shape shape);  // same element count

// axis 0 stacks rows, axis 1 stacks columns; 1-D tensors concat on axis 0
Tensor concat(const std::vector<Tensor>& parts, int axis);

Tensor slice(const Tensor& a, std::size_t r0, std::size_t nr, std::size_t c0,
             std::size_t nc);                            // 2-D block
Tensor slice(const Tensor& a, std::size_t i0, std::size_t n);  // 1-D range

// Gather rows of a 2-D tensor; backward scatter-adds into the source.
// Serves both embedding-table lookups and hidden-state row selection.
Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids);

Tensor sum(const Tensor& a);   // -> scalar
Tensor mean(const Tensor& a);  // -> scalar

// Numerically stabilized by max subtraction; rows (axis=1) or columns
// (axis=0) of a 2-D tensor, or the whole of a 1-D tensor.
Tensor softmax(const Tensor& a, int axis);

// Exact erf form: x * Phi(x).
Tensor gelu(const Tensor& a);

// Per-row standardization over the last axis, then affine by gain and bias.
Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

// Mean of -log softmax(logits)[i, target_i] over rows.
Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets);

// Inverted dropout: scales survivors by 1/(1-p) at training time, identity in
// eval mode. Consumes one rng draw per element when training and p > 0.
Tensor dropout(const Tensor& a, double p, bool training, Rng& rng);

}  // namespace unidial
