#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense inner-loop kernels used by the autodiff tape and the optimizer. Each
// kernel has a portable scalar reference and, on x86-64, an AVX2/FMA variant
// compiled with a function-level target attribute. The variant is picked once
// at startup from CPUID; FOVRL_SIMD=scalar forces the reference path.
namespace fovrl::simd {

enum class Backend { kScalar, kAvx2 };

std::string_view backend_name(Backend b);
bool avx2_supported();
Backend active_backend();
// Switching backends is meant for tests and benchmarks, not mid-training.
void set_backend(Backend b);

struct AmsGradCoefficients {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double step_size = 1e-4;  // lr / (1 - beta1^t)
  double inv_sqrt_bias2 = 1.0;  // 1 / sqrt(1 - beta2^t)
};

double dot(std::span<const double> a, std::span<const double> b);
// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
// One AMSGrad step on contiguous arrays (no atomics; see optimizer.hpp for
// the lock-free path).
void amsgrad_step(std::span<double> theta, std::span<double> m, std::span<double> v,
                  std::span<double> vhat, std::span<const double> grad, const AmsGradCoefficients& c);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void amsgrad_step(double* theta, double* m, double* v, double* vhat, const double* grad, std::size_t n,
                  const AmsGradCoefficients& c);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define FOVRL_HAVE_AVX2_KERNELS 1
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void amsgrad_step(double* theta, double* m, double* v, double* vhat, const double* grad, std::size_t n,
                  const AmsGradCoefficients& c);
}  // namespace avx2
#else
#define FOVRL_HAVE_AVX2_KERNELS 0
#endif

}  // namespace fovrl::simd
