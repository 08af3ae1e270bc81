#pragma once

#include <cstddef>
#include <vector>

#include "lcat/autodiff.hpp"

namespace lcat {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// Per-step exponential decay: lr_t = lr_0 * gamma^t.
  double lr_decay_gamma = 0.998;
  /// L2 penalty added to the gradient.
  double weight_decay = 0.0;
};

/// Adam with bias correction over one parameter group.
class Adam {
 public:
  Adam(std::vector<ad::Parameter*> params, AdamConfig config);

  /// Applies one update. Throws RuntimeFailure naming the parameter when a
  /// gradient is non-finite; nothing is modified in that case.
  void step(const ad::Gradients& grads);

  [[nodiscard]] double learning_rate_at(std::size_t t) const;
  [[nodiscard]] std::size_t steps() const noexcept { return t_; }
  [[nodiscard]] const AdamConfig& config() const noexcept { return config_; }

 private:
  std::vector<ad::Parameter*> params_;
  AdamConfig config_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  std::size_t t_ = 0;
};

}  // namespace lcat
