#include <cmath>

#include "fovrl/simd.hpp"

namespace fovrl::simd::scalar {

double dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void amsgrad_step(double* theta, double* m, double* v, double* vhat, const double* grad, std::size_t n,
                  const AmsGradCoefficients& c) {
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * (g * g);
    if (v[i] > vhat[i]) vhat[i] = v[i];
    theta[i] -= c.step_size * m[i] / (std::sqrt(vhat[i]) * c.inv_sqrt_bias2 + c.eps);
  }
}

}  // namespace fovrl::simd::scalar
