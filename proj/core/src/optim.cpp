#include "lcat/optim.hpp"

#include <cmath>

#include "lcat/error.hpp"

namespace lcat {

Adam::Adam(std::vector<ad::Parameter*> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  if (!(config_.learning_rate > 0.0)) throw ConfigError("adam: learning rate must be > 0");
  if (!(config_.beta1 >= 0.0 && config_.beta1 < 1.0 && config_.beta2 >= 0.0 && config_.beta2 < 1.0))
    throw ConfigError("adam: betas must lie in [0, 1)");
  if (!(config_.epsilon > 0.0)) throw ConfigError("adam: epsilon must be > 0");
  if (!(config_.lr_decay_gamma > 0.0 && config_.lr_decay_gamma <= 1.0))
    throw ConfigError("adam: lr decay gamma must lie in (0, 1]");
  if (!(config_.weight_decay >= 0.0)) throw ConfigError("adam: weight decay must be >= 0");
  for (auto* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

double Adam::learning_rate_at(std::size_t t) const {
  return config_.learning_rate * std::pow(config_.lr_decay_gamma, static_cast<double>(t));
}

void Adam::step(const ad::Gradients& grads) {
  for (auto* p : params_) {
    const Matrix& g = grads.of(*p);
    if (g.rows() != p->value.rows() || g.cols() != p->value.cols())
      throw ShapeError("adam: gradient shape " + g.shape_string() + " for parameter '" + p->name + "'");
    if (!g.all_finite()) throw RuntimeFailure("adam: non-finite gradient for parameter '" + p->name + "'");
  }
  const double lr = learning_rate_at(t_);
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto theta = params_[k]->value.data();
    auto g = grads.of(*params_[k]).data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (std::size_t e = 0; e < theta.size(); ++e) {
      const double ge = g[e] + config_.weight_decay * theta[e];
      m[e] = config_.beta1 * m[e] + (1.0 - config_.beta1) * ge;
      v[e] = config_.beta2 * v[e] + (1.0 - config_.beta2) * ge * ge;
      theta[e] -= lr * (m[e] / c1) / (std::sqrt(v[e] / c2) + config_.epsilon);
    }
  }
}

}  // namespace lcat
