#include "tensor.hpp"

#include <sstream>
#include <unordered_set>
#include <utility>

namespace unidial {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

std::size_t shape_size(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

namespace detail {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

}  // namespace detail

NoGradGuard::NoGradGuard() : previous_(detail::grad_enabled()) {
  detail::g_grad_enabled = false;
}

NoGradGuard::~NoGradGuard() { detail::g_grad_enabled = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = std::make_shared<detail::TensorNode>();
  n->value.assign(shape_size(shape), 0.0);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  auto n = std::make_shared<detail::TensorNode>();
  n->value.assign(shape_size(shape), v);
  n->shape = std::move(shape);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  if (shape_size(shape) != data.size()) {
    throw ShapeError("Tensor::from_data: shape " + shape_str(shape) +
                     " does not match data length " +
                     std::to_string(data.size()));
  }
  auto n = std::make_shared<detail::TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return wrap(std::move(n));
}

Tensor Tensor::scalar(double v, bool requires_grad) {
  return from_data({1}, {v}, requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw ContractError("Tensor: undefined handle");
  return node_->shape;
}

std::size_t Tensor::size() const { return shape_size(shape()); }

std::size_t Tensor::ndim() const { return shape().size(); }

std::size_t Tensor::rows() const {
  const Shape& s = shape();
  if (s.size() != 2) {
    throw ShapeError("Tensor::rows: expected 2-D tensor, got " + shape_str(s));
  }
  return s[0];
}

std::size_t Tensor::cols() const {
  const Shape& s = shape();
  if (s.size() != 2) {
    throw ShapeError("Tensor::cols: expected 2-D tensor, got " + shape_str(s));
  }
  return s[1];
}

const std::vector<double>& Tensor::data() const {
  if (!node_) throw ContractError("Tensor: undefined handle");
  return node_->value;
}

std::vector<double>& Tensor::mutable_data() {
  if (!node_) throw ContractError("Tensor: undefined handle");
  return node_->value;
}

double Tensor::at(std::size_t flat) const {
  const auto& v = data();
  if (flat >= v.size()) {
    throw IndexError("Tensor::at: index " + std::to_string(flat) +
                     " out of range for size " + std::to_string(v.size()));
  }
  return v[flat];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("Tensor::item: tensor has " + std::to_string(size()) +
                        " elements, expected exactly one");
  }
  return data()[0];
}

bool Tensor::requires_grad() const {
  if (!node_) throw ContractError("Tensor: undefined handle");
  return node_->requires_grad;
}

const std::vector<double>& Tensor::grad() const {
  if (!node_) throw ContractError("Tensor: undefined handle");
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  if (!node_) throw ContractError("Tensor: undefined handle");
  node_->grad.assign(node_->value.size(), 0.0);
}

Tensor Tensor::wrap(std::shared_ptr<detail::TensorNode> n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

GradTape GradTape::build(const Tensor& root) {
  if (!root.defined()) throw ContractError("GradTape: undefined root tensor");
  GradTape tape;
  tape.root_ = root.node();

  // iterative postorder DFS: parents are appended before the node itself
  std::unordered_set<detail::TensorNode*> visited;
  std::vector<std::pair<detail::TensorNode*, std::size_t>> stack;
  stack.emplace_back(tape.root_.get(), 0);
  visited.insert(tape.root_.get());
  while (!stack.empty()) {
    auto& [node, next_parent] = stack.back();
    if (next_parent < node->parents.size()) {
      detail::TensorNode* p = node->parents[next_parent].get();
      ++next_parent;
      if (visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      tape.order_.push_back(node);
      stack.pop_back();
    }
  }
  return tape;
}

void GradTape::backward() {
  if (!root_) throw ContractError("GradTape::backward: empty tape");
  if (root_->value.size() != 1) {
    throw ContractError("GradTape::backward: root must be scalar, got shape " +
                        shape_str(root_->shape));
  }
  root_->ensure_grad()[0] += 1.0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    detail::TensorNode* n = *it;
    if (n->requires_grad && n->backward_fn) {
      n->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

void backward(const Tensor& root) { GradTape::build(root).backward(); }

}  // namespace unidial
