#pragma once

#include <cmath>

#include "mmdmp/error.hpp"
#include "mmdmp/sample_set.hpp"

namespace mmdmp {

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam (Kingma & Ba) with bias correction. `descend` moves the parameters
/// against the gradient; `ascend` along it.
class Adam {
 public:
  Adam(AdamConfig cfg, Eigen::Index size) : cfg_(cfg), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {
    detail::require(cfg.learning_rate > 0.0, "learning rate must be positive");
    detail::require(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0 && cfg.beta2 >= 0.0 && cfg.beta2 < 1.0,
                    "Adam betas must lie in [0, 1)");
    detail::require(cfg.eps > 0.0, "Adam eps must be positive");
  }

  void descend(Vector& params, const Vector& grad) {
    detail::require(params.size() == m_.size() && grad.size() == m_.size(), "Adam: size mismatch");
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
  }

  void ascend(Vector& params, const Vector& grad) { descend(params, -grad); }

  [[nodiscard]] long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  Vector m_;
  Vector v_;
  long t_ = 0;
};

}  // namespace mmdmp
