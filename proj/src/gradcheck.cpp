#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace unidial {

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double h) {
  if (h <= 0.0) throw ParamError("grad_check: step size must be positive");

  Tensor probe = Tensor::from_data(x.shape(), x.data(), /*requires_grad=*/true);
  Tensor out = f(probe);
  if (out.size() != 1) {
    throw ContractError("grad_check: f must return a scalar, got shape " +
                        shape_str(out.shape()));
  }
  backward(out);
  const std::vector<double> analytic = probe.grad();

  // numeric side never needs the graph
  NoGradGuard ng;
  std::vector<double> base = x.data();
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const double keep = base[i];
    base[i] = keep + h;
    const double fp = f(Tensor::from_data(x.shape(), base)).item();
    base[i] = keep - h;
    const double fm = f(Tensor::from_data(x.shape(), base)).item();
    base[i] = keep;
    const double numeric = (fp - fm) / (2.0 * h);
    const double denom =
        std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
    worst = std::max(worst, std::fabs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace unidial
