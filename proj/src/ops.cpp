#include "ops.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace unidial {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;

Tensor make_op(Shape shape, std::vector<double> value,
               std::vector<NodePtr> parents,
               std::function<void(TensorNode&)> backward) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  bool rq = false;
  for (const auto& p : parents) rq = rq || p->requires_grad;
  if (detail::grad_enabled() && rq) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward_fn = std::move(backward);
  }
  return Tensor::wrap(std::move(n));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shapes disagree: " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

void require_2d(const Tensor& a, const char* op) {
  if (a.ndim() != 2) {
    throw ShapeError(std::string(op) + ": expected 2-D tensor, got " +
                     shape_str(a.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), k2 = b.rows(), n = b.cols();
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions disagree: " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = out.data() + i * n;
    const double* ai = A + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      const double* bp = B + p * n;
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  auto pa = a.node(), pb = b.node();
  return make_op(
      {m, n}, std::move(out), {pa, pb},
      [pa, pb, m, k, n](TensorNode& self) {
        const double* g = self.grad.data();
        if (pa->requires_grad) {
          double* da = pa->ensure_grad().data();
          const double* B = pb->value.data();
          // dA[i,p] += sum_j g[i,j] * B[p,j]
          for (std::size_t i = 0; i < m; ++i) {
            const double* gi = g + i * n;
            for (std::size_t p = 0; p < k; ++p) {
              const double* bp = B + p * n;
              double s = 0.0;
              for (std::size_t j = 0; j < n; ++j) s += gi[j] * bp[j];
              da[i * k + p] += s;
            }
          }
        }
        if (pb->requires_grad) {
          double* db = pb->ensure_grad().data();
          const double* A = pa->value.data();
          // dB[p,j] += sum_i A[i,p] * g[i,j]
          for (std::size_t i = 0; i < m; ++i) {
            const double* gi = g + i * n;
            const double* ai = A + i * k;
            for (std::size_t p = 0; p < k; ++p) {
              const double aip = ai[p];
              if (aip == 0.0) continue;
              double* dbp = db + p * n;
              for (std::size_t j = 0; j < n; ++j) dbp[j] += aip * gi[j];
            }
          }
        }
      });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb},
                 [pa, pb](TensorNode& self) {
                   if (pa->requires_grad) {
                     double* da = pa->ensure_grad().data();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       da[i] += self.grad[i];
                   }
                   if (pb->requires_grad) {
                     double* db = pb->ensure_grad().data();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       db[i] += self.grad[i];
                   }
                 });
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  require_2d(m, "add_rowvec");
  if (v.ndim() != 1 || v.size() != m.cols()) {
    throw ShapeError("add_rowvec: vector " + shape_str(v.shape()) +
                     " does not match columns of " + shape_str(m.shape()));
  }
  const std::size_t r = m.rows(), c = m.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j)
      out[i * c + j] = m.data()[i * c + j] + v.data()[j];
  auto pm = m.node(), pv = v.node();
  return make_op({r, c}, std::move(out), {pm, pv},
                 [pm, pv, r, c](TensorNode& self) {
                   if (pm->requires_grad) {
                     double* dm = pm->ensure_grad().data();
                     for (std::size_t i = 0; i < r * c; ++i)
                       dm[i] += self.grad[i];
                   }
                   if (pv->requires_grad) {
                     double* dv = pv->ensure_grad().data();
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t j = 0; j < c; ++j)
                         dv[j] += self.grad[i * c + j];
                   }
                 });
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "subtract");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb},
                 [pa, pb](TensorNode& self) {
                   if (pa->requires_grad) {
                     double* da = pa->ensure_grad().data();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       da[i] += self.grad[i];
                   }
                   if (pb->requires_grad) {
                     double* db = pb->ensure_grad().data();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       db[i] -= self.grad[i];
                   }
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {pa, pb},
                 [pa, pb](TensorNode& self) {
                   if (pa->requires_grad) {
                     double* da = pa->ensure_grad().data();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       da[i] += self.grad[i] * pb->value[i];
                   }
                   if (pb->requires_grad) {
                     double* db = pb->ensure_grad().data();
                     for (std::size_t i = 0; i < self.grad.size(); ++i)
                       db[i] += self.grad[i] * pa->value[i];
                   }
                 });
}

Tensor scalar_mul(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {pa}, [pa, c](TensorNode& self) {
    if (!pa->requires_grad) return;
    double* da = pa->ensure_grad().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      da[i] += c * self.grad[i];
  });
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = a.data()[i * c + j];
  auto pa = a.node();
  return make_op({c, r}, std::move(out), {pa}, [pa, r, c](TensorNode& self) {
    if (!pa->requires_grad) return;
    double* da = pa->ensure_grad().data();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j)
        da[i * c + j] += self.grad[j * r + i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                     shape_str(shape));
  }
  auto pa = a.node();
  return make_op(std::move(shape), a.data(), {pa}, [pa](TensorNode& self) {
    if (!pa->requires_grad) return;
    double* da = pa->ensure_grad().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) da[i] += self.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ContractError("concat: no parts");
  const std::size_t nd = parts[0].ndim();
  if (nd == 1) {
    if (axis != 0) throw ShapeError("concat: 1-D tensors concat on axis 0");
    std::size_t total = 0;
    for (const auto& p : parts) {
      if (p.ndim() != 1)
        throw ShapeError("concat: mixed ranks among parts");
      total += p.size();
    }
    std::vector<double> out;
    out.reserve(total);
    std::vector<NodePtr> parents;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
      offsets.push_back(out.size());
      out.insert(out.end(), p.data().begin(), p.data().end());
      parents.push_back(p.node());
    }
    auto ps = parents;
    return make_op({total}, std::move(out), std::move(parents),
                   [ps, offsets](TensorNode& self) {
                     for (std::size_t k = 0; k < ps.size(); ++k) {
                       if (!ps[k]->requires_grad) continue;
                       double* d = ps[k]->ensure_grad().data();
                       const std::size_t n = ps[k]->value.size();
                       for (std::size_t i = 0; i < n; ++i)
                         d[i] += self.grad[offsets[k] + i];
                     }
                   });
  }
  if (nd != 2 || (axis != 0 && axis != 1)) {
    throw ShapeError("concat: supports 1-D or 2-D tensors on axis 0/1");
  }
  if (axis == 0) {
    const std::size_t c = parts[0].cols();
    std::size_t r = 0;
    for (const auto& p : parts) {
      if (p.ndim() != 2 || p.cols() != c)
        throw ShapeError("concat axis 0: column mismatch: " +
                         shape_str(p.shape()) + " vs " +
                         shape_str(parts[0].shape()));
      r += p.rows();
    }
    std::vector<double> out;
    out.reserve(r * c);
    std::vector<NodePtr> parents;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
      offsets.push_back(out.size());
      out.insert(out.end(), p.data().begin(), p.data().end());
      parents.push_back(p.node());
    }
    auto ps = parents;
    return make_op({r, c}, std::move(out), std::move(parents),
                   [ps, offsets](TensorNode& self) {
                     for (std::size_t k = 0; k < ps.size(); ++k) {
                       if (!ps[k]->requires_grad) continue;
                       double* d = ps[k]->ensure_grad().data();
                       const std::size_t n = ps[k]->value.size();
                       for (std::size_t i = 0; i < n; ++i)
                         d[i] += self.grad[offsets[k] + i];
                     }
                   });
  }
  // axis == 1
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  std::vector<std::size_t> col_off;
  for (const auto& p : parts) {
    if (p.ndim() != 2 || p.rows() != r)
      throw ShapeError("concat axis 1: row mismatch: " + shape_str(p.shape()) +
                       " vs " + shape_str(parts[0].shape()));
    col_off.push_back(c);
    c += p.cols();
  }
  std::vector<double> out(r * c);
  std::vector<NodePtr> parents;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const std::size_t pc = parts[k].cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < pc; ++j)
        out[i * c + col_off[k] + j] = parts[k].data()[i * pc + j];
    parents.push_back(parts[k].node());
  }
  auto ps = parents;
  return make_op({r, c}, std::move(out), std::move(parents),
                 [ps, col_off, r, c](TensorNode& self) {
                   for (std::size_t k = 0; k < ps.size(); ++k) {
                     if (!ps[k]->requires_grad) continue;
                     const std::size_t pc = ps[k]->shape[1];
                     double* d = ps[k]->ensure_grad().data();
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t j = 0; j < pc; ++j)
                         d[i * pc + j] += self.grad[i * c + col_off[k] + j];
                   }
                 });
}

Tensor slice(const Tensor& a, std::size_t r0, std::size_t nr, std::size_t c0,
             std::size_t nc) {
  require_2d(a, "slice");
  const std::size_t r = a.rows(), c = a.cols();
  if (nr == 0 || nc == 0) throw ContractError("slice: empty range");
  if (r0 + nr > r || c0 + nc > c) {
    throw IndexError("slice: block [" + std::to_string(r0) + "+" +
                     std::to_string(nr) + ", " + std::to_string(c0) + "+" +
                     std::to_string(nc) + "] exceeds " + shape_str(a.shape()));
  }
  std::vector<double> out(nr * nc);
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nc; ++j)
      out[i * nc + j] = a.data()[(r0 + i) * c + c0 + j];
  auto pa = a.node();
  return make_op({nr, nc}, std::move(out), {pa},
                 [pa, r0, c0, nr, nc, c](TensorNode& self) {
                   if (!pa->requires_grad) return;
                   double* da = pa->ensure_grad().data();
                   for (std::size_t i = 0; i < nr; ++i)
                     for (std::size_t j = 0; j < nc; ++j)
                       da[(r0 + i) * c + c0 + j] += self.grad[i * nc + j];
                 });
}

Tensor slice(const Tensor& a, std::size_t i0, std::size_t n) {
  if (a.ndim() != 1)
    throw ShapeError("slice: expected 1-D tensor, got " + shape_str(a.shape()));
  if (n == 0) throw ContractError("slice: empty range");
  if (i0 + n > a.size()) {
    throw IndexError("slice: range [" + std::to_string(i0) + "+" +
                     std::to_string(n) + "] exceeds " + shape_str(a.shape()));
  }
  std::vector<double> out(a.data().begin() + i0, a.data().begin() + i0 + n);
  auto pa = a.node();
  return make_op({n}, std::move(out), {pa}, [pa, i0, n](TensorNode& self) {
    if (!pa->requires_grad) return;
    double* da = pa->ensure_grad().data();
    for (std::size_t i = 0; i < n; ++i) da[i0 + i] += self.grad[i];
  });
}

Tensor gather_rows(const Tensor& table, const std::vector<std::size_t>& ids) {
  require_2d(table, "gather_rows");
  const std::size_t r = table.rows(), c = table.cols();
  std::vector<double> out(ids.size() * c);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= r) {
      throw IndexError("gather_rows: row id " + std::to_string(ids[i]) +
                       " out of range for table " + shape_str(table.shape()));
    }
    std::copy_n(table.data().data() + ids[i] * c, c, out.data() + i * c);
  }
  auto pt = table.node();
  return make_op({ids.size(), c}, std::move(out), {pt},
                 [pt, ids, c](TensorNode& self) {
                   if (!pt->requires_grad) return;
                   double* dt = pt->ensure_grad().data();
                   for (std::size_t i = 0; i < ids.size(); ++i)
                     for (std::size_t j = 0; j < c; ++j)
                       dt[ids[i] * c + j] += self.grad[i * c + j];
                 });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  auto pa = a.node();
  return make_op({1}, {s}, {pa}, [pa](TensorNode& self) {
    if (!pa->requires_grad) return;
    double* da = pa->ensure_grad().data();
    const double g = self.grad[0];
    for (std::size_t i = 0; i < pa->value.size(); ++i) da[i] += g;
  });
}

Tensor mean(const Tensor& a) {
  const std::size_t n = a.size();
  if (n == 0) throw ContractError("mean: empty tensor");
  double s = 0.0;
  for (double v : a.data()) s += v;
  auto pa = a.node();
  return make_op({1}, {s / static_cast<double>(n)}, {pa},
                 [pa, n](TensorNode& self) {
                   if (!pa->requires_grad) return;
                   double* da = pa->ensure_grad().data();
                   const double g = self.grad[0] / static_cast<double>(n);
                   for (std::size_t i = 0; i < n; ++i) da[i] += g;
                 });
}

Tensor softmax(const Tensor& a, int axis) {
  const std::size_t nd = a.ndim();
  std::size_t groups, span, gstride, estride;
  if (nd == 1) {
    groups = 1;
    span = a.size();
    gstride = 0;
    estride = 1;
  } else if (nd == 2 && axis == 1) {
    groups = a.rows();
    span = a.cols();
    gstride = a.cols();
    estride = 1;
  } else if (nd == 2 && axis == 0) {
    groups = a.cols();
    span = a.rows();
    gstride = 1;
    estride = a.cols();
  } else {
    throw ShapeError("softmax: unsupported shape " + shape_str(a.shape()) +
                     " with axis " + std::to_string(axis));
  }
  std::vector<double> out(a.size());
  const double* x = a.data().data();
  for (std::size_t g = 0; g < groups; ++g) {
    const std::size_t base = g * gstride;
    double mx = x[base];
    for (std::size_t e = 1; e < span; ++e)
      mx = std::max(mx, x[base + e * estride]);
    double denom = 0.0;
    for (std::size_t e = 0; e < span; ++e) {
      const double v = std::exp(x[base + e * estride] - mx);
      out[base + e * estride] = v;
      denom += v;
    }
    for (std::size_t e = 0; e < span; ++e) out[base + e * estride] /= denom;
  }
  auto pa = a.node();
  auto y = std::make_shared<std::vector<double>>(out);
  return make_op(a.shape(), std::move(out), {pa},
                 [pa, y, groups, span, gstride, estride](TensorNode& self) {
                   if (!pa->requires_grad) return;
                   double* da = pa->ensure_grad().data();
                   const double* g = self.grad.data();
                   const double* yv = y->data();
                   for (std::size_t gr = 0; gr < groups; ++gr) {
                     const std::size_t base = gr * gstride;
                     double dot = 0.0;
                     for (std::size_t e = 0; e < span; ++e) {
                       const std::size_t k = base + e * estride;
                       dot += g[k] * yv[k];
                     }
                     for (std::size_t e = 0; e < span; ++e) {
                       const std::size_t k = base + e * estride;
                       da[k] += yv[k] * (g[k] - dot);
                     }
                   }
                 });
}

Tensor gelu(const Tensor& a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = a.data()[i];
    out[i] = 0.5 * x * (1.0 + std::erf(x / kSqrt2));
  }
  auto pa = a.node();
  auto xs = std::make_shared<std::vector<double>>(a.data());
  return make_op(a.shape(), std::move(out), {pa}, [pa, xs](TensorNode& self) {
    if (!pa->requires_grad) return;
    double* da = pa->ensure_grad().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      const double x = (*xs)[i];
      const double cdf = 0.5 * (1.0 + std::erf(x / kSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      da[i] += self.grad[i] * (cdf + x * pdf);
    }
  });
}

Tensor layer_norm(const Tensor& a, const Tensor& gain, const Tensor& bias,
                  double eps) {
  std::size_t rows, cols;
  if (a.ndim() == 1) {
    rows = 1;
    cols = a.size();
  } else if (a.ndim() == 2) {
    rows = a.rows();
    cols = a.cols();
  } else {
    throw ShapeError("layer_norm: expected 1-D or 2-D input, got " +
                     shape_str(a.shape()));
  }
  if (cols == 0) throw ShapeError("layer_norm: empty normalization axis");
  if (gain.ndim() != 1 || gain.size() != cols || bias.ndim() != 1 ||
      bias.size() != cols) {
    throw ShapeError("layer_norm: gain/bias must be 1-D of size " +
                     std::to_string(cols));
  }
  std::vector<double> out(a.size());
  auto xhat = std::make_shared<std::vector<double>>(a.size());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  const double* x = a.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x + r * cols;
    double mu = 0.0;
    for (std::size_t j = 0; j < cols; ++j) mu += xr[j];
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      const double d = xr[j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    for (std::size_t j = 0; j < cols; ++j) {
      const double xh = (xr[j] - mu) * inv;
      (*xhat)[r * cols + j] = xh;
      out[r * cols + j] = xh * gain.data()[j] + bias.data()[j];
    }
  }
  auto pa = a.node(), pg = gain.node(), pb = bias.node();
  return make_op(
      a.shape(), std::move(out), {pa, pg, pb},
      [pa, pg, pb, xhat, inv_std, rows, cols](TensorNode& self) {
        const double* g = self.grad.data();
        const double* xh = xhat->data();
        for (std::size_t r = 0; r < rows; ++r) {
          const double* gr = g + r * cols;
          const double* xhr = xh + r * cols;
          if (pa->requires_grad) {
            double* da = pa->ensure_grad().data() + r * cols;
            const double inv = (*inv_std)[r];
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
              const double dxh = gr[j] * pg->value[j];
              m1 += dxh;
              m2 += dxh * xhr[j];
            }
            m1 /= static_cast<double>(cols);
            m2 /= static_cast<double>(cols);
            for (std::size_t j = 0; j < cols; ++j) {
              const double dxh = gr[j] * pg->value[j];
              da[j] += inv * (dxh - m1 - xhr[j] * m2);
            }
          }
          if (pg->requires_grad) {
            double* dg = pg->ensure_grad().data();
            for (std::size_t j = 0; j < cols; ++j) dg[j] += gr[j] * xhr[j];
          }
          if (pb->requires_grad) {
            double* db = pb->ensure_grad().data();
            for (std::size_t j = 0; j < cols; ++j) db[j] += gr[j];
          }
        }
      });
}

Tensor cross_entropy(const Tensor& logits,
                     const std::vector<std::size_t>& targets) {
  require_2d(logits, "cross_entropy");
  const std::size_t n = logits.rows(), v = logits.cols();
  if (targets.size() != n) {
    throw ContractError("cross_entropy: " + std::to_string(targets.size()) +
                        " targets for " + std::to_string(n) + " rows");
  }
  for (std::size_t t : targets) {
    if (t >= v) {
      throw IndexError("cross_entropy: target " + std::to_string(t) +
                       " out of range for " + std::to_string(v) + " classes");
    }
  }
  auto probs = std::make_shared<std::vector<double>>(n * v);
  const double* x = logits.data().data();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x + i * v;
    double mx = xi[0];
    for (std::size_t j = 1; j < v; ++j) mx = std::max(mx, xi[j]);
    double denom = 0.0;
    for (std::size_t j = 0; j < v; ++j) denom += std::exp(xi[j] - mx);
    const double lse = mx + std::log(denom);
    for (std::size_t j = 0; j < v; ++j)
      (*probs)[i * v + j] = std::exp(xi[j] - lse);
    loss += lse - xi[targets[i]];
  }
  loss /= static_cast<double>(n);
  auto pl = logits.node();
  return make_op({1}, {loss}, {pl},
                 [pl, probs, targets, n, v](TensorNode& self) {
                   if (!pl->requires_grad) return;
                   double* dl = pl->ensure_grad().data();
                   const double scale = self.grad[0] / static_cast<double>(n);
                   for (std::size_t i = 0; i < n; ++i) {
                     for (std::size_t j = 0; j < v; ++j)
                       dl[i * v + j] += scale * (*probs)[i * v + j];
                     dl[i * v + targets[i]] -= scale;
                   }
                 });
}

Tensor dropout(const Tensor& a, double p, bool training, Rng& rng) {
  if (p < 0.0 || p >= 1.0) {
    throw ParamError("dropout: probability " + std::to_string(p) +
                     " outside [0, 1)");
  }
  if (!training || p == 0.0) return a;
  const double keep_scale = 1.0 / (1.0 - p);
  auto mask = std::make_shared<std::vector<double>>(a.size());
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double m = rng.uniform() < p ? 0.0 : keep_scale;
    (*mask)[i] = m;
    out[i] = a.data()[i] * m;
  }
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {pa}, [pa, mask](TensorNode& self) {
    if (!pa->requires_grad) return;
    double* da = pa->ensure_grad().data();
    for (std::size_t i = 0; i < self.grad.size(); ++i)
      da[i] += self.grad[i] * (*mask)[i];
  });
}

}  // namespace unidial
