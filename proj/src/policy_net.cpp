#include "fovrl/policy_net.hpp"

#include <algorithm>
#include <cmath>

#include "fovrl/errors.hpp"

namespace fovrl::net {

using tensor::ParamSpec;
using tensor::ParamVector;
using tensor::Tape;
using tensor::Var;

namespace {

constexpr double kHeadScale = 0.01;

// Fills `w` (rows x cols, row-major) with a gain-scaled matrix whose rows
// (or columns, when rows > cols) are orthonormal.
void orthogonal_fill(std::span<double> w, std::size_t rows, std::size_t cols, double gain, std::mt19937_64& rng) {
  const bool by_rows = rows <= cols;
  const std::size_t nvec = by_rows ? rows : cols;
  const std::size_t len = by_rows ? cols : rows;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> q(nvec * len);
  for (double& v : q) v = normal(rng);
  for (std::size_t i = 0; i < nvec; ++i) {
    double* vi = q.data() + i * len;
    // Two Gram-Schmidt passes keep the basis orthogonal to working precision.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < i; ++j) {
        const double* vj = q.data() + j * len;
        double d = 0.0;
        for (std::size_t k = 0; k < len; ++k) d += vi[k] * vj[k];
        for (std::size_t k = 0; k < len; ++k) vi[k] -= d * vj[k];
      }
    }
    double norm = 0.0;
    for (std::size_t k = 0; k < len; ++k) norm += vi[k] * vi[k];
    norm = std::sqrt(norm);
    for (std::size_t k = 0; k < len; ++k) vi[k] /= norm;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      w[r * cols + c] = gain * (by_rows ? q[r * len + c] : q[c * len + r]);
    }
  }
}

std::size_t conv_params(const NetConfig& cfg) { return 2 * cfg.conv.size(); }

}  // namespace

void NetConfig::validate() const {
  if (conv.empty()) throw InvalidConfig("network needs at least one conv layer");
  if (lstm_size < 1) throw InvalidConfig("lstm_size must be >= 1");
  if (n_nat_actions < 2) throw InvalidConfig("need at least two natural actions");
  if (n_vis_actions < 1) throw InvalidConfig("need at least one visual action");
  int h = input_height, w = input_width;
  for (const ConvSpec& c : conv) {
    if (c.out_channels < 1 || c.kernel < 1 || c.stride < 1) throw InvalidConfig("conv layer values must be >= 1");
    if (c.kernel > h || c.kernel > w) throw InvalidConfig("conv kernel larger than its input");
    h = (h - c.kernel) / c.stride + 1;
    w = (w - c.kernel) / c.stride + 1;
  }
}

std::size_t NetConfig::torso_output_size() const {
  int h = input_height, w = input_width;
  for (const ConvSpec& c : conv) {
    h = (h - c.kernel) / c.stride + 1;
    w = (w - c.kernel) / c.stride + 1;
  }
  return static_cast<std::size_t>(conv.back().out_channels) * h * w;
}

PolicyNet::PolicyNet(NetConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

std::vector<ParamSpec> PolicyNet::param_specs() const {
  std::vector<ParamSpec> specs;
  std::size_t in_ch = 1;
  for (std::size_t i = 0; i < cfg_.conv.size(); ++i) {
    const ConvSpec& c = cfg_.conv[i];
    const auto oc = static_cast<std::size_t>(c.out_channels);
    const auto k = static_cast<std::size_t>(c.kernel);
    specs.push_back({"conv" + std::to_string(i) + ".w", {oc, in_ch, k, k}});
    specs.push_back({"conv" + std::to_string(i) + ".b", {oc}});
    in_ch = oc;
  }
  const auto H = static_cast<std::size_t>(cfg_.lstm_size);
  specs.push_back({"lstm.wx", {4 * H, cfg_.torso_output_size()}});
  specs.push_back({"lstm.wh", {4 * H, H}});
  specs.push_back({"lstm.b", {4 * H}});
  const auto nn = static_cast<std::size_t>(cfg_.n_nat_actions);
  const auto nv = static_cast<std::size_t>(cfg_.n_vis_actions);
  specs.push_back({"nat_pi.w", {nn, H}});
  specs.push_back({"nat_pi.b", {nn}});
  specs.push_back({"nat_v.w", {1, H}});
  specs.push_back({"nat_v.b", {1}});
  specs.push_back({"vis_pi.w", {nv, H}});
  specs.push_back({"vis_pi.b", {nv}});
  specs.push_back({"vis_v.w", {1, H}});
  specs.push_back({"vis_v.b", {1}});
  return specs;
}

ParamVector PolicyNet::zero_params() const { return ParamVector(param_specs()); }

ParamVector PolicyNet::init_params(std::uint64_t seed) const {
  ParamVector params(param_specs());
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < params.tensor_count(); ++i) {
    const ParamSpec& s = params.spec(i);
    if (s.shape.size() < 2) continue;  // biases start at zero
    const std::size_t rows = s.shape[0];
    const std::size_t cols = tensor::element_count(s.shape) / rows;
    double gain = 1.0;
    if (s.name.rfind("conv", 0) == 0) gain = std::sqrt(2.0);
    if (is_natural_head(s.name) || is_vision_head(s.name)) gain = kHeadScale;
    orthogonal_fill(params.tensor(i), rows, cols, gain, rng);
  }
  auto b = params.tensor("lstm.b");
  const auto H = static_cast<std::size_t>(cfg_.lstm_size);
  std::fill(b.begin() + H, b.begin() + 2 * H, 1.0);
  return params;
}

void PolicyNet::check_layout(const ParamVector& params) const {
  if (params.specs() != param_specs()) {
    throw InvalidCheckpoint("parameter layout does not match the network configuration");
  }
}

LstmState PolicyNet::initial_lstm_state() const {
  const auto H = static_cast<std::size_t>(cfg_.lstm_size);
  return {std::vector<double>(H, 0.0), std::vector<double>(H, 0.0)};
}

StepVars PolicyNet::step(Tape& tape, std::span<const Var> p, const Frame& frame, Var h, Var c) const {
  if (p.size() != param_specs().size()) throw InvalidShape("parameter binding does not match the network");
  if (frame.width != cfg_.input_width || frame.height != cfg_.input_height ||
      frame.values.size() != static_cast<std::size_t>(frame.width) * frame.height) {
    throw InvalidShape("network expects a " + std::to_string(cfg_.input_width) + "x" +
                       std::to_string(cfg_.input_height) + " frame");
  }
  Var x = tape.constant(frame.values, {1, static_cast<std::size_t>(frame.height), static_cast<std::size_t>(frame.width)});
  for (std::size_t i = 0; i < cfg_.conv.size(); ++i) {
    x = tape.relu(tape.conv2d(x, p[2 * i], p[2 * i + 1], cfg_.conv[i].stride));
  }
  const std::size_t base = conv_params(cfg_);
  auto [h_next, c_next] = tape.lstm_cell(x, h, c, p[base], p[base + 1], p[base + 2]);

  StepVars out;
  const Var nat_logits = tape.affine(h_next, p[base + 3], p[base + 4]);
  out.pi_nat = tape.softmax(nat_logits);
  out.log_pi_nat = tape.log_softmax(nat_logits);
  out.v_nat = tape.affine(h_next, p[base + 5], p[base + 6]);
  const Var vis_logits = tape.affine(h_next, p[base + 7], p[base + 8]);
  out.pi_vis = tape.softmax(vis_logits);
  out.log_pi_vis = tape.log_softmax(vis_logits);
  out.v_vis = tape.affine(h_next, p[base + 9], p[base + 10]);
  out.h = h_next;
  out.c = c_next;
  return out;
}

NetOutput PolicyNet::forward(const Frame& frame, const LstmState& state, const ParamVector& params) const {
  const auto H = static_cast<std::size_t>(cfg_.lstm_size);
  if (state.h.size() != H || state.c.size() != H) throw InvalidShape("LSTM state size does not match lstm_size");
  check_layout(params);
  Tape tape;
  const auto vars = params.bind(tape);
  const StepVars s = step(tape, vars, frame, tape.constant(state.h, {H}), tape.constant(state.c, {H}));
  NetOutput out;
  const auto pn = tape.value(s.pi_nat);
  const auto pv = tape.value(s.pi_vis);
  out.pi_nat.assign(pn.begin(), pn.end());
  out.pi_vis.assign(pv.begin(), pv.end());
  out.v_nat = tape.scalar_value(s.v_nat);
  out.v_vis = tape.scalar_value(s.v_vis);
  const auto hv = tape.value(s.h);
  const auto cv = tape.value(s.c);
  out.lstm_state.h.assign(hv.begin(), hv.end());
  out.lstm_state.c.assign(cv.begin(), cv.end());
  return out;
}

bool PolicyNet::is_natural_head(const std::string& name) { return name.rfind("nat_", 0) == 0; }

bool PolicyNet::is_vision_head(const std::string& name) { return name.rfind("vis_", 0) == 0; }

int sample_categorical(std::span<const double> probs, std::mt19937_64& rng) {
  if (probs.empty()) throw InvalidInput("cannot sample from an empty distribution");
  const double u = std::generate_canonical<double, 53>(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u above the accumulated mass: take the last positive entry.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size() - 1);
}

int argmax(std::span<const double> probs) {
  return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
}

std::pair<int, int> sample_actions(const NetOutput& out, std::mt19937_64& rng) {
  const int a_nat = sample_categorical(out.pi_nat, rng);
  const int a_vis = sample_categorical(out.pi_vis, rng);
  return {a_nat, a_vis};
}

}  // namespace fovrl::net
