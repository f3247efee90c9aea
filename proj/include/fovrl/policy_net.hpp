#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fovrl/frame.hpp"
#include "fovrl/params.hpp"
#include "fovrl/tensor.hpp"

// Dual-head A3C-LSTM: shared conv torso and LSTM, then separate policy and
// value heads for natural (game) and visual (gaze) actions.
namespace fovrl::net {

struct ConvSpec {
  int out_channels = 16;
  int kernel = 8;
  int stride = 4;

  bool operator==(const ConvSpec&) const = default;
};

struct NetConfig {
  std::vector<ConvSpec> conv = {{16, 8, 4}, {32, 4, 2}};
  int lstm_size = 256;
  int n_nat_actions = 4;
  int n_vis_actions = 5;
  int input_width = kScreenWidth;
  int input_height = kScreenHeight;

  void validate() const;
  // Flattened size of the conv torso output fed to the LSTM.
  std::size_t torso_output_size() const;

  bool operator==(const NetConfig&) const = default;
};

struct LstmState {
  std::vector<double> h;
  std::vector<double> c;

  bool operator==(const LstmState&) const = default;
};

struct NetOutput {
  std::vector<double> pi_nat;
  double v_nat = 0.0;
  std::vector<double> pi_vis;
  double v_vis = 0.0;
  LstmState lstm_state;
};

// Tape nodes produced by one network step.
struct StepVars {
  tensor::Var log_pi_nat;
  tensor::Var pi_nat;
  tensor::Var v_nat;
  tensor::Var log_pi_vis;
  tensor::Var pi_vis;
  tensor::Var v_vis;
  tensor::Var h;
  tensor::Var c;
};

class PolicyNet {
 public:
  explicit PolicyNet(NetConfig cfg);

  const NetConfig& config() const { return cfg_; }
  std::vector<tensor::ParamSpec> param_specs() const;
  tensor::ParamVector zero_params() const;
  // Orthogonal init (relu gain for convs), forget-gate bias 1, head weights
  // scaled by 0.01.
  tensor::ParamVector init_params(std::uint64_t seed) const;
  // Throws InvalidCheckpoint if `params` does not match this architecture.
  void check_layout(const tensor::ParamVector& params) const;

  LstmState initial_lstm_state() const;

  // Records one step on `tape`. `params` are the leaves from
  // ParamVector::bind in param_specs() order.
  StepVars step(tensor::Tape& tape, std::span<const tensor::Var> params, const Frame& frame, tensor::Var h,
                tensor::Var c) const;

  NetOutput forward(const Frame& frame, const LstmState& state, const tensor::ParamVector& params) const;

  static bool is_natural_head(const std::string& param_name);
  static bool is_vision_head(const std::string& param_name);

 private:
  NetConfig cfg_;
};

int sample_categorical(std::span<const double> probs, std::mt19937_64& rng);
int argmax(std::span<const double> probs);
// Independent categorical draws (natural first, then visual).
std::pair<int, int> sample_actions(const NetOutput& out, std::mt19937_64& rng);

}  // namespace fovrl::net
