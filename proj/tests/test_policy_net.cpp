#include <cmath>
#include <random>

#include "doctest.h"
#include "fovrl/errors.hpp"
#include "fovrl/gradcheck.hpp"
#include "fovrl/policy_net.hpp"

using namespace fovrl;
using namespace fovrl::net;

namespace {

NetConfig small() {
  NetConfig c;
  c.conv = {{3, 8, 4}, {4, 4, 2}};
  c.lstm_size = 6;
  return c;
}

Frame random_frame(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Frame f;
  for (auto& v : f.values) v = u(rng);
  return f;
}

}  // namespace

TEST_CASE("default architecture shapes") {
  const PolicyNet net{NetConfig{}};
  CHECK(net.config().torso_output_size() == 32 * 8 * 8);
  const auto specs = net.param_specs();
  CHECK(specs.front().name == "conv0.w");
  CHECK(specs.front().shape == tensor::Shape{16, 1, 8, 8});
  const auto out = net.forward(random_frame(1), net.initial_lstm_state(), net.init_params(1));
  CHECK(out.pi_nat.size() == 4);
  CHECK(out.pi_vis.size() == 5);
  CHECK(out.lstm_state.h.size() == 256);
}

TEST_CASE("zero heads give uniform policies and zero values") {
  const PolicyNet net(small());
  auto p = net.init_params(3);
  for (std::size_t i = 0; i < p.tensor_count(); ++i) {
    const auto& name = p.spec(i).name;
    if (PolicyNet::is_natural_head(name) || PolicyNet::is_vision_head(name))
      for (double& v : p.tensor(i)) v = 0.0;
  }
  const auto out = net.forward(random_frame(2), net.initial_lstm_state(), p);
  for (double x : out.pi_nat) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
  for (double x : out.pi_vis) CHECK(x == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(out.v_nat == 0.0);
  CHECK(out.v_vis == 0.0);
}

TEST_CASE("initial state and zero network") {
  const PolicyNet net(small());
  const LstmState s = net.initial_lstm_state();
  CHECK(s.h == std::vector<double>(6, 0.0));
  CHECK(s.c == std::vector<double>(6, 0.0));
  const auto out = net.forward(Frame{}, s, net.zero_params());
  for (double h : out.lstm_state.h) CHECK(h == 0.0);
}

TEST_CASE("forward is pure and policies are probability vectors") {
  const PolicyNet net(small());
  const auto p = net.init_params(5);
  const Frame f = random_frame(5);
  const auto a = net.forward(f, net.initial_lstm_state(), p);
  const auto b = net.forward(f, net.initial_lstm_state(), p);
  CHECK(a.pi_nat == b.pi_nat);
  CHECK(a.lstm_state == b.lstm_state);
  double s = 0;
  for (double x : a.pi_nat) {
    CHECK(x > 0.0);
    s += x;
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("perturbing the vision head leaves the natural outputs unchanged") {
  const PolicyNet net(small());
  auto p = net.init_params(6);
  const Frame f = random_frame(6);
  const auto before = net.forward(f, net.initial_lstm_state(), p);
  for (double& v : p.tensor("vis_pi.w")) v += 0.5;
  for (double& v : p.tensor("vis_v.w")) v -= 0.5;
  const auto after = net.forward(f, net.initial_lstm_state(), p);
  CHECK(after.pi_nat == before.pi_nat);
  CHECK(after.v_nat == before.v_nat);
  CHECK(after.pi_vis != before.pi_vis);
}

TEST_CASE("init: forget-gate bias 1, small heads, seeded") {
  const PolicyNet net(small());
  const auto p = net.init_params(7);
  const auto b = p.tensor(*p.find("lstm.b"));
  for (std::size_t j = 0; j < 6; ++j) {
    CHECK(b[j] == 0.0);
    CHECK(b[6 + j] == 1.0);
  }
  for (double w : p.tensor(*p.find("nat_pi.w"))) CHECK(std::abs(w) < 0.05);
  CHECK(net.init_params(7) == p);
  CHECK_FALSE(net.init_params(8) == p);
}

TEST_CASE("layout checks") {
  const PolicyNet net(small());
  CHECK_NOTHROW(net.check_layout(net.init_params(1)));
  NetConfig other = small();
  other.lstm_size = 7;
  CHECK_THROWS_AS(net.check_layout(PolicyNet(other).init_params(1)), InvalidCheckpoint);
  Frame wrong(40, 40);
  CHECK_THROWS(net.forward(wrong, net.initial_lstm_state(), net.init_params(1)));
  NetConfig too_big = small();
  too_big.conv = {{16, 100, 4}};
  CHECK_THROWS_AS(too_big.validate(), InvalidConfig);
}

TEST_CASE("sampling") {
  std::mt19937_64 rng(1);
  const std::vector<double> onehot = {0, 0, 1, 0};
  for (int i = 0; i < 1000; ++i) CHECK(sample_categorical(onehot, rng) == 2);
  const std::vector<double> uni(4, 0.25);
  std::array<int, 4> counts{};
  const int n = 100000;
  for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(sample_categorical(uni, rng))];
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c : counts) CHECK(std::abs(c - n * 0.25) < 4 * sigma);
  std::mt19937_64 a(9), b(9);
  NetOutput out;
  out.pi_nat = {0.1, 0.2, 0.3, 0.4};
  out.pi_vis = {0.2, 0.2, 0.2, 0.2, 0.2};
  for (int i = 0; i < 100; ++i) CHECK(sample_actions(out, a) == sample_actions(out, b));
  CHECK(argmax(out.pi_nat) == 3);
}

TEST_CASE("network step gradients match finite differences") {
  const PolicyNet net(NetConfig{{{2, 8, 4}, {2, 4, 2}}, 3, 4, 5, 80, 80});
  auto p = net.init_params(11);
  for (double& v : p.values()) v += 0.02;  // lift heads off exact zero
  const Frame f1 = random_frame(1), f2 = random_frame(2);
  auto build = [&](tensor::Tape& t, std::span<const tensor::Var> v) {
    const std::size_t H = 3;
    tensor::Var h = t.constant(std::vector<double>(H, 0.0), {H});
    tensor::Var c = t.constant(std::vector<double>(H, 0.0), {H});
    const StepVars s1 = net.step(t, v, f1, h, c);
    const StepVars s2 = net.step(t, v, f2, s1.h, s1.c);
    tensor::Var l = t.add(t.select(s2.log_pi_nat, 1), t.select(s2.log_pi_vis, 3));
    l = t.add(l, t.mul(s2.v_nat, s1.v_vis));
    return l;
  };
  tensor::GradCheckOptions o;
  o.max_coords = 200;
  o.seed = 1;
  CHECK(tensor::finite_diff_report(build, p, o).max_rel_error < 1e-6);
}
