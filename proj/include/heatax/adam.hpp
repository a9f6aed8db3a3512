#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "heatax/tensor.hpp"

namespace heatax {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias correction and no weight decay. Moment buffers are created
/// on the first step, shaped like the parameters they track.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(std::span<Tensor* const> params, std::span<const Tensor> grads);
  void step(Tensor& param, const Tensor& grad);

  const AdamConfig& config() const noexcept { return cfg_; }
  std::size_t steps() const noexcept { return steps_; }
  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

 private:
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::size_t steps_ = 0;
};

}  // namespace heatax
