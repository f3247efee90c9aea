#include <cmath>
#include <random>

#include "doctest.h"
#include "fovrl/errors.hpp"
#include "fovrl/gradcheck.hpp"
#include "fovrl/params.hpp"
#include "fovrl/tensor.hpp"

using namespace fovrl;
using namespace fovrl::tensor;

namespace {

ParamVector random_params(std::vector<ParamSpec> specs, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  ParamVector p(std::move(specs));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : p.values()) v = u(rng);
  return p;
}

// Weighted sum so every output element carries a distinct gradient.
Var weighted_sum(Tape& t, Var x) {
  const auto n = t.value(x).size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 0.3 + 0.1 * static_cast<double>(i % 7) - 0.05 * static_cast<double>(i % 3);
  return t.sum(t.mul(t.reshape(x, {n}), t.constant(w, {n})));
}

constexpr double kTol = 1e-6;

}  // namespace

TEST_CASE("elementwise primitives") {
  auto p = random_params({{"a", {6}}, {"b", {6}}}, 1);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.add(v[0], v[1])); }, p, 1e-5) < kTol);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.sub(v[0], v[1])); }, p, 1e-5) < kTol);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.mul(v[0], v[1])); }, p, 1e-5) < kTol);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.scale(v[0], -2.5)); }, p, 1e-5) < kTol);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.tanh(v[0])); }, p, 1e-5) < kTol);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.sigmoid(v[1])); }, p, 1e-5) < kTol);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.relu(v[0])); }, p, 1e-5) < kTol);
  // mul of a node with itself exercises gradient accumulation.
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return t.sum(t.mul(v[0], v[0])); }, p, 1e-5) < kTol);
  auto pos = random_params({{"a", {5}}}, 2, 0.5, 2.0);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.log(v[0])); }, pos, 1e-5) < kTol);
}

TEST_CASE("softmax, log_softmax, select") {
  auto p = random_params({{"z", {5}}}, 3, -3.0, 3.0);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.softmax(v[0])); }, p, 1e-5) < kTol);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.log_softmax(v[0])); }, p, 1e-5) < kTol);
  CHECK(finite_diff_check([](Tape& t, std::span<const Var> v) { return t.select(t.log_softmax(v[0]), 2); }, p, 1e-5) < kTol);

  Tape t;
  const Var z = t.constant({1000.0, 1001.0, 999.0}, {3});
  const auto sm = t.value(t.softmax(z));
  const auto lsm = t.value(t.log_softmax(z));
  double s = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    s += sm[i];
    CHECK(std::isfinite(lsm[i]));
    CHECK(std::exp(lsm[i]) == doctest::Approx(sm[i]).epsilon(1e-12));
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(t.select(z, 3), InvalidShape);
}

TEST_CASE("affine and conv2d") {
  auto p = random_params({{"x", {2, 7, 7}}, {"k", {3, 2, 3, 3}}, {"b", {3}}, {"w", {4, 27}}, {"c", {4}}}, 4);
  auto loss = [](Tape& t, std::span<const Var> v) {
    const Var conv = t.conv2d(v[0], v[1], v[2], 2);  // [3,3,3]
    return weighted_sum(t, t.affine(t.tanh(conv), v[3], v[4]));
  };
  CHECK(finite_diff_check(loss, p, 1e-5) < kTol);

  Tape t;
  const auto x = t.constant(std::vector<double>(2 * 7 * 7, 1.0), {2, 7, 7});
  const auto k = t.constant(std::vector<double>(3 * 2 * 3 * 3, 1.0), {3, 2, 3, 3});
  const auto b = t.constant({0.0, 1.0, 2.0}, {3});
  const Var y = t.conv2d(x, k, b, 2);
  CHECK(t.shape(y) == Shape{3, 3, 3});
  CHECK(t.value(y)[0] == 18.0);
  CHECK(t.value(y)[26] == 20.0);
  CHECK_THROWS_AS(t.conv2d(x, t.constant(std::vector<double>(3 * 3 * 3 * 3), {3, 3, 3, 3}), b, 2), InvalidShape);
}

TEST_CASE("conv2d against a direct-loop oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t C = 3, H = 11, W = 9, O = 2, K = 4;
  const int S = 3;
  std::vector<double> x(C * H * W), k(O * C * K * K), b(O);
  for (auto* v : {&x, &k, &b})
    for (auto& e : *v) e = u(rng);
  Tape t;
  const Var y = t.conv2d(t.constant(x, {C, H, W}), t.constant(k, {O, C, K, K}), t.constant(b, {O}), S);
  const std::size_t OH = (H - K) / S + 1, OW = (W - K) / S + 1;
  REQUIRE(t.shape(y) == Shape{O, OH, OW});
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < OH; ++i)
      for (std::size_t j = 0; j < OW; ++j) {
        double s = b[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t di = 0; di < K; ++di)
            for (std::size_t dj = 0; dj < K; ++dj)
              s += k[((o * C + c) * K + di) * K + dj] * x[(c * H + i * S + di) * W + j * S + dj];
        CHECK(t.value(y)[(o * OH + i) * OW + j] == doctest::Approx(s).epsilon(1e-13));
      }
}

TEST_CASE("lstm_cell gradients and forward formula") {
  const std::size_t n = 3, H = 4;
  auto p = random_params({{"x", {n}}, {"h", {H}}, {"c", {H}}, {"wx", {4 * H, n}}, {"wh", {4 * H, H}}, {"b", {4 * H}}}, 6);
  CHECK(finite_diff_check(
            [](Tape& t, std::span<const Var> v) {
              auto [h1, c1] = t.lstm_cell(v[0], v[1], v[2], v[3], v[4], v[5]);
              auto [h2, c2] = t.lstm_cell(v[0], h1, c1, v[3], v[4], v[5]);
              return t.add(weighted_sum(t, h2), weighted_sum(t, c2));
            },
            p, 1e-5) < kTol);

  Tape t;
  const auto vars = p.bind(t);
  auto [h1, c1] = t.lstm_cell(vars[0], vars[1], vars[2], vars[3], vars[4], vars[5]);
  const auto x = p.tensor(0), h = p.tensor(1), c = p.tensor(2), wx = p.tensor(3), wh = p.tensor(4), b = p.tensor(5);
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  for (std::size_t j = 0; j < H; ++j) {
    double z[4];
    for (std::size_t g = 0; g < 4; ++g) {
      const std::size_t r = g * H + j;
      z[g] = b[r];
      for (std::size_t i = 0; i < n; ++i) z[g] += wx[r * n + i] * x[i];
      for (std::size_t i = 0; i < H; ++i) z[g] += wh[r * H + i] * h[i];
    }
    const double cn = sig(z[1]) * c[j] + sig(z[0]) * std::tanh(z[2]);
    CHECK(t.value(c1)[j] == doctest::Approx(cn).epsilon(1e-13));
    CHECK(t.value(h1)[j] == doctest::Approx(sig(z[3]) * std::tanh(cn)).epsilon(1e-13));
  }
}

TEST_CASE("backward semantics") {
  Tape t;
  const Var a = t.variable(Tensor({2}, std::vector<double>{1.0, 2.0}));
  const Var unused = t.variable(Tensor({2}, std::vector<double>{3.0, 4.0}));
  const Var l = t.sum(t.mul(a, a));
  CHECK_THROWS_AS(t.backward(a), ContractViolation);
  t.backward(l);
  CHECK(t.grad(a) == std::vector<double>{2.0, 4.0});
  CHECK(t.grad(unused) == std::vector<double>{0.0, 0.0});
  // Owned gradients reset between sweeps.
  t.backward(l);
  CHECK(t.grad(a) == std::vector<double>{2.0, 4.0});
  CHECK_FALSE(t.requires_grad(t.constant({1.0}, {1})));

  // External gradients accumulate.
  std::vector<double> vals{3.0}, g{0.0};
  Tape t2;
  const Var e = t2.external(vals, {1}, g);
  const Var l2 = t2.scale(t2.sum(e), 2.0);
  t2.backward(l2);
  t2.backward(l2);
  CHECK(g[0] == 4.0);
  CHECK_THROWS_AS(t2.add(e, t2.constant({1.0, 2.0}, {2})), InvalidShape);
}

TEST_CASE("finite_diff_report on sampled coordinates") {
  auto p = random_params({{"w", {8, 10}}, {"b", {8}}, {"x", {10}}}, 8);
  GradCheckOptions o;
  o.max_coords = 20;
  o.seed = 3;
  const auto r = finite_diff_report(
      [](Tape& t, std::span<const Var> v) { return weighted_sum(t, t.tanh(t.affine(v[2], v[0], v[1]))); }, p, o);
  CHECK(r.checked == 20);
  CHECK(r.max_rel_error < kTol);
}
