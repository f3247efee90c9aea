#pragma once

#include <atomic>
#include <cstdint>
#include <span>
#include <vector>

#include "fovrl/simd.hpp"

namespace fovrl::train {

struct AmsGradConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  bool operator==(const AmsGradConfig&) const = default;
};

// Adam with the AMSGrad max-of-second-moments rule and bias correction,
// holding moment buffers shared by every worker.
class SharedAmsGrad {
 public:
  SharedAmsGrad(std::size_t size, AmsGradConfig cfg);

  // One step in place. With `element_atomic` every load/store goes through
  // a relaxed std::atomic_ref so concurrent lock-free callers never tear an
  // element (whole-vector consistency is not promised). Otherwise the caller
  // must serialise calls and the SIMD kernel is used.
  void apply(std::span<double> theta, std::span<const double> grad, bool element_atomic);

  const AmsGradConfig& config() const { return cfg_; }
  std::int64_t steps() const { return steps_.load(std::memory_order_relaxed); }
  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }
  std::span<const double> max_second_moment() const { return vhat_; }

 private:
  simd::AmsGradCoefficients coefficients(std::int64_t step) const;

  AmsGradConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::vector<double> vhat_;
  std::atomic<std::int64_t> steps_{0};
};

}  // namespace fovrl::train
