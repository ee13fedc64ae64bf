#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "error.hpp"

namespace unidial {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_size(const Shape& s);

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first touched
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

bool grad_enabled();

}  // namespace detail

// RAII switch that turns off graph recording for forward-only evaluation.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Dense row-major float64 tensor participating in reverse-mode autodiff.
// Copying a Tensor copies the handle; storage is shared.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t ndim() const;
  // 2-D accessors
  std::size_t rows() const;
  std::size_t cols() const;

  const std::vector<double>& data() const;
  // Direct storage access for initialization and optimizer updates. Writing
  // through this does not create graph nodes.
  std::vector<double>& mutable_data();

  double at(std::size_t flat) const;
  double item() const;  // scalar tensors only

  bool requires_grad() const;
  const std::vector<double>& grad() const;  // zeros of matching size if untouched
  void zero_grad();

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::TensorNode> n);

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// Linearized record of the operations reachable from one output: each entry's
// parents precede it, and a backward sweep visits each entry exactly once.
class GradTape {
 public:
  static GradTape build(const Tensor& root);
  // Seeds d(root)=1 and runs every backward closure in reverse order.
  void backward();
  std::size_t node_count() const { return order_.size(); }

 private:
  std::shared_ptr<detail::TensorNode> root_;
  std::vector<detail::TensorNode*> order_;  // topological, parents first
};

// build + run in one call; root must be scalar
void backward(const Tensor& root);

}  // namespace unidial
