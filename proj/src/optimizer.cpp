#include "fovrl/optimizer.hpp"

#include <atomic>
#include <cmath>

#include "fovrl/errors.hpp"

namespace fovrl::train {

SharedAmsGrad::SharedAmsGrad(std::size_t size, AmsGradConfig cfg)
    : cfg_(cfg), m_(size, 0.0), v_(size, 0.0), vhat_(size, 0.0) {
  if (!(cfg.lr > 0.0) || !(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0) || !(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0) ||
      !(cfg.eps > 0.0)) {
    throw InvalidConfig("invalid AMSGrad hyperparameters");
  }
}

simd::AmsGradCoefficients SharedAmsGrad::coefficients(std::int64_t step) const {
  const double t = static_cast<double>(step);
  simd::AmsGradCoefficients c;
  c.beta1 = cfg_.beta1;
  c.beta2 = cfg_.beta2;
  c.eps = cfg_.eps;
  c.step_size = cfg_.lr / (1.0 - std::pow(cfg_.beta1, t));
  c.inv_sqrt_bias2 = 1.0 / std::sqrt(1.0 - std::pow(cfg_.beta2, t));
  return c;
}

void SharedAmsGrad::apply(std::span<double> theta, std::span<const double> grad, bool element_atomic) {
  if (theta.size() != m_.size() || grad.size() != m_.size()) {
    throw ContractViolation("gradient/parameter size does not match the optimizer state");
  }
  const std::int64_t step = steps_.fetch_add(1, std::memory_order_relaxed) + 1;
  const simd::AmsGradCoefficients c = coefficients(step);
  if (!element_atomic) {
    simd::amsgrad_step(theta, m_, v_, vhat_, grad, c);
    return;
  }
  constexpr auto relaxed = std::memory_order_relaxed;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    std::atomic_ref<double> mi(m_[i]), vi(v_[i]), vhi(vhat_[i]), ti(theta[i]);
    const double m = c.beta1 * mi.load(relaxed) + (1.0 - c.beta1) * g;
    const double v = c.beta2 * vi.load(relaxed) + (1.0 - c.beta2) * (g * g);
    const double vh = std::max(vhi.load(relaxed), v);
    mi.store(m, relaxed);
    vi.store(v, relaxed);
    vhi.store(vh, relaxed);
    ti.store(ti.load(relaxed) - c.step_size * m / (std::sqrt(vh) * c.inv_sqrt_bias2 + c.eps), relaxed);
  }
}

}  // namespace fovrl::train
