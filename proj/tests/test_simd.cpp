#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "fovrl/simd.hpp"

using namespace fovrl::simd;

namespace {

std::vector<double> randv(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

}  // namespace

TEST_CASE("scalar reference kernels") {
  const std::vector<double> a = {1, 2, 3}, b = {4, 5, 6};
  CHECK(scalar::dot(a.data(), b.data(), 3) == 32.0);
  std::vector<double> y = {1, 1, 1};
  scalar::axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});
  CHECK(scalar::dot(a.data(), b.data(), 0) == 0.0);
}

TEST_CASE("span wrappers reject size mismatch") {
  std::vector<double> a(3), b(4);
  CHECK_THROWS(dot(a, b));
  CHECK_THROWS(axpy(1.0, a, b));
}

#if FOVRL_HAVE_AVX2_KERNELS
TEST_CASE("AVX2 kernels agree with the scalar reference") {
  if (!avx2_supported()) {
    MESSAGE("AVX2 not available on this CPU; skipping equivalence");
    return;
  }
  std::mt19937_64 rng(17);
  for (std::size_t n = 0; n < 70; ++n) {
    const auto a = randv(n, rng), b = randv(n, rng);
    const double s = scalar::dot(a.data(), b.data(), n), v = avx2::dot(a.data(), b.data(), n);
    double mag = 0.0;
    for (std::size_t i = 0; i < n; ++i) mag += std::abs(a[i] * b[i]);
    CHECK(std::abs(s - v) <= 1e-13 * (1.0 + mag));

    auto y1 = randv(n, rng), y2 = y1;
    scalar::axpy(0.37, a.data(), y1.data(), n);
    avx2::axpy(0.37, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-15 * (1.0 + std::abs(y1[i])));
  }
}

TEST_CASE("AVX2 AMSGrad step is bit-identical to scalar") {
  if (!avx2_supported()) return;
  std::mt19937_64 rng(23);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 31u, 64u, 1001u}) {
    auto th1 = randv(n, rng), m1 = randv(n, rng, -0.1, 0.1), v1 = randv(n, rng, 0.0, 0.01), vh1 = v1;
    auto th2 = th1, m2 = m1, v2 = v1, vh2 = vh1;
    AmsGradCoefficients c{0.9, 0.999, 1e-8, 1e-3 / (1 - 0.9 * 0.9), 1.0 / std::sqrt(1 - 0.999 * 0.999)};
    for (int step = 0; step < 5; ++step) {
      const auto g = randv(n, rng);
      scalar::amsgrad_step(th1.data(), m1.data(), v1.data(), vh1.data(), g.data(), n, c);
      avx2::amsgrad_step(th2.data(), m2.data(), v2.data(), vh2.data(), g.data(), n, c);
    }
    CHECK(th1 == th2);
    CHECK(m1 == m2);
    CHECK(v1 == v2);
    CHECK(vh1 == vh2);
  }
}
#endif

TEST_CASE("backend selection") {
  const Backend original = active_backend();
  set_backend(Backend::kScalar);
  CHECK(active_backend() == Backend::kScalar);
  std::vector<double> a = {1, 2}, b = {3, 4};
  CHECK(dot(a, b) == 11.0);
  if (avx2_supported()) {
    set_backend(Backend::kAvx2);
    CHECK(active_backend() == Backend::kAvx2);
    CHECK(dot(a, b) == 11.0);
  } else {
    CHECK_THROWS(set_backend(Backend::kAvx2));
  }
  set_backend(original);
  CHECK(backend_name(Backend::kScalar) == "scalar");
}
