#include "optim.hpp"

#include <cmath>

namespace unidial {

AdamState::AdamState(AdamConfig cfg, const std::vector<Tensor>& params)
    : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.size(), 0.0);
    v_.emplace_back(p.size(), 0.0);
  }
}

void AdamState::step(std::vector<Tensor>& params,
                     const std::vector<std::vector<double>>& grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adam_step: expected " + std::to_string(m_.size()) +
                     " parameters, got " + std::to_string(params.size()) +
                     " with " + std::to_string(grads.size()) + " gradients");
  }
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& w = params[k].mutable_data();
    const auto& g = grads[k];
    if (g.size() != w.size()) {
      throw ShapeError("adam_step: gradient length " +
                       std::to_string(g.size()) + " does not match parameter " +
                       shape_str(params[k].shape()));
    }
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void AdamState::step(std::vector<Tensor>& params) {
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  for (auto& p : params) grads.push_back(p.grad());
  step(params, grads);
}

void adam_step(std::vector<Tensor>& params,
               const std::vector<std::vector<double>>& grads,
               AdamState& state) {
  state.step(params, grads);
}

}  // namespace unidial
