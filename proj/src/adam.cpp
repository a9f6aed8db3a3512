#include "heatax/adam.hpp"

#include <cmath>
#include <string>

#include "heatax/error.hpp"

namespace heatax {

void Adam::step(std::span<Tensor* const> params, std::span<const Tensor> grads) {
  if (params.size() != grads.size()) {
    fail(ErrorCode::shape_mismatch, "adam: " + std::to_string(params.size()) + " parameters but " +
                                        std::to_string(grads.size()) + " gradients");
  }
  for (std::size_t i = 0; i < params.size(); ++i) require_same_shape(*params[i], grads[i], "adam");
  if (m_.empty()) {
    for (const Tensor* p : params) {
      m_.emplace_back(p->shape());
      v_.emplace_back(p->shape());
    }
  } else if (m_.size() != params.size()) {
    fail(ErrorCode::shape_mismatch, "adam: parameter count changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) require_same_shape(*params[i], m_[i], "adam");

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = grads[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g[j];
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= cfg_.learning_rate * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

void Adam::step(Tensor& param, const Tensor& grad) {
  Tensor* p[] = {&param};
  step(p, std::span<const Tensor>(&grad, 1));
}

}  // namespace heatax
