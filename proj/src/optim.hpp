#pragma once

#include <cstdint>
#include <vector>

#include "tensor.hpp"

namespace unidial {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment accumulators, one pair per parameter, in registration
// order. step() applies the bias-corrected update in place.
class AdamState {
 public:
  AdamState(AdamConfig cfg, const std::vector<Tensor>& params);

  std::uint64_t step_count() const { return step_; }
  const AdamConfig& config() const { return cfg_; }
  void set_lr(double lr) { cfg_.lr = lr; }

  // Update from explicit gradients (one flat array per parameter).
  void step(std::vector<Tensor>& params,
            const std::vector<std::vector<double>>& grads);
  // Update from the gradients accumulated on the parameters themselves.
  void step(std::vector<Tensor>& params);

 private:
  AdamConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Single Adam update; increments state.step by exactly one.
void adam_step(std::vector<Tensor>& params,
               const std::vector<std::vector<double>>& grads, AdamState& state);

}  // namespace unidial
