#include <cmath>

#include "autograph/autodiff.hpp"
#include "autograph/error.hpp"

namespace autograph::ad {

void adam_step(std::span<Tensor> params, AdamState& s) {
  if (s.m.empty()) {
    for (const auto& p : params) {
      s.m.emplace_back(p.rows(), p.cols());
      s.v.emplace_back(p.rows(), p.cols());
    }
  }
  require(s.m.size() == params.size(), "adam_step: state does not match parameter list");
  ++s.step;
  const double t = static_cast<double>(s.step);
  const double c1 = 1.0 - std::pow(s.beta1, t);
  const double c2 = 1.0 - std::pow(s.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k].value().data;
    const auto& grad = params[k].grad().data;
    auto& m = s.m[k].data;
    auto& v = s.v[k].data;
    require(m.size() == value.size(), "adam_step: moment shape mismatch");
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i] + s.l2 * value[i];
      if (s.weight_decay != 0.0) value[i] -= s.lr * s.weight_decay * value[i];
      m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g;
      v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g * g;
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      value[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
  }
}

}  // namespace autograph::ad
