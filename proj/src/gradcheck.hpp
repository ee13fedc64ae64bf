#pragma once

#include <functional>

#include "tensor.hpp"

namespace unidial {

// Central-difference gradient verification. f must map a tensor of x's shape
// to a scalar tensor deterministically. Returns the maximum over coordinates
// of |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double h = 1e-5);

}  // namespace unidial
