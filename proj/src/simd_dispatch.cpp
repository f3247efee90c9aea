#include <atomic>
#include <cstdlib>
#include <string>

#include "fovrl/errors.hpp"
#include "fovrl/simd.hpp"

namespace fovrl::simd {
namespace {

Backend detect() {
  if (const char* forced = std::getenv("FOVRL_SIMD"); forced && std::string(forced) == "scalar") {
    return Backend::kScalar;
  }
  return avx2_supported() ? Backend::kAvx2 : Backend::kScalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

void check_sizes(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw InvalidShape(std::string(what) + ": operand lengths differ");
}

}  // namespace

std::string_view backend_name(Backend b) { return b == Backend::kAvx2 ? "avx2" : "scalar"; }

bool avx2_supported() {
#if FOVRL_HAVE_AVX2_KERNELS
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::kAvx2 && !avx2_supported()) throw InvalidConfig("AVX2 backend not supported on this CPU");
  current().store(b, std::memory_order_relaxed);
}

double dot(std::span<const double> a, std::span<const double> b) {
  check_sizes(a.size(), b.size(), "dot");
#if FOVRL_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::kAvx2) return avx2::dot(a.data(), b.data(), a.size());
#endif
  return scalar::dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_sizes(x.size(), y.size(), "axpy");
#if FOVRL_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::kAvx2) return avx2::axpy(alpha, x.data(), y.data(), x.size());
#endif
  scalar::axpy(alpha, x.data(), y.data(), x.size());
}

void amsgrad_step(std::span<double> theta, std::span<double> m, std::span<double> v, std::span<double> vhat,
                  std::span<const double> grad, const AmsGradCoefficients& c) {
  const std::size_t n = theta.size();
  check_sizes(n, m.size(), "amsgrad_step");
  check_sizes(n, v.size(), "amsgrad_step");
  check_sizes(n, vhat.size(), "amsgrad_step");
  check_sizes(n, grad.size(), "amsgrad_step");
#if FOVRL_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::kAvx2) {
    return avx2::amsgrad_step(theta.data(), m.data(), v.data(), vhat.data(), grad.data(), n, c);
  }
#endif
  scalar::amsgrad_step(theta.data(), m.data(), v.data(), vhat.data(), grad.data(), n, c);
}

}  // namespace fovrl::simd
