#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fovrl/tensor.hpp"

// Return, advantage and loss arithmetic for the dual-head actor-critic.
// The natural head learns from R_{t+1}; the vision head from the shifted
// reward R_{t+2}, so its sums stop one transition earlier.
namespace fovrl::adv {

struct Hyper {
  double gamma = 0.99;
  double lambda = 0.92;
  double beta = 0.01;

  void validate() const;
  bool operator==(const Hyper&) const = default;
};

enum class Head { kNatural, kVision };

// Exponent on the vision-head bootstrap term: k as printed in the source
// formula, or k-1 to match the shortened reward sum.
enum class VisBootstrapExponent { kK, kKMinus1 };

struct LossOptions {
  double value_coef = 0.5;
  VisBootstrapExponent vis_bootstrap_exponent = VisBootstrapExponent::kK;

  bool operator==(const LossOptions&) const = default;
};

// (S_t, A_t^nat, A_t^vis, R_{t+1}, R_{t+2}, S_{t+1}) plus the network
// quantities recorded at S_t.
struct Transition {
  int a_nat = 0;
  int a_vis = 0;
  double reward_next = 0.0;   // R_{t+1}
  double reward_after = 0.0;  // R_{t+2}; meaningful only if has_reward_after
  bool has_reward_after = false;
  double v_nat = 0.0;
  double v_vis = 0.0;
  double log_pi_nat = 0.0;
  double log_pi_vis = 0.0;
  double entropy_nat = 0.0;
  double entropy_vis = 0.0;
};

struct RolloutBuffer {
  std::vector<Transition> steps;
  double bootstrap_nat = 0.0;  // V^nat(s_k), 0 if s_k is terminal
  double bootstrap_vis = 0.0;
  bool terminal = false;

  std::size_t size() const { return steps.size(); }
  // Sets R_{t+2} of every transition but the last from R_{t+1} of its
  // successor.
  void link_rewards();
  // R_{t+2}(t) == R_{t+1}(t+1) for all t < k-1.
  bool overlap_consistent() const;
};

struct LossParts {
  double value_nat = 0.0;
  double policy_nat = 0.0;
  double value_vis = 0.0;
  double policy_vis = 0.0;
  double total = 0.0;
};

// Number of loss terms a head contributes: k (natural) or k-1 (vision).
std::size_t head_terms(const RolloutBuffer& buf, Head head);

// H(pi) = -sum pi log pi.
double entropy(std::span<const double> probs);

// Non-generalised n-step advantage from step t to the rollout end.
double nstep_advantage(const RolloutBuffer& buf, Head head, std::size_t t, double gamma,
                       VisBootstrapExponent exponent = VisBootstrapExponent::kK);
double nstep_advantage_nat(const RolloutBuffer& buf, std::size_t t, double gamma);

// TD(0) error; the vision head uses R_{t+2} and is defined for t <= k-2.
double td0_delta(const RolloutBuffer& buf, Head head, std::size_t t, double gamma);
std::vector<double> td0_deltas(const RolloutBuffer& buf, Head head, double gamma);

// A_t = sum_{i>=0, t+i<n} (gamma*lambda)^i delta_{t+i}, by backward recursion.
std::vector<double> gae(std::span<const double> deltas, double gamma, double lambda);

double loss_value(const RolloutBuffer& buf, Head head, double gamma,
                  VisBootstrapExponent exponent = VisBootstrapExponent::kK);
double loss_policy(const RolloutBuffer& buf, Head head, const Hyper& hyper);
LossParts total_loss(const RolloutBuffer& buf, const Hyper& hyper, const LossOptions& opts = {});

// ---- differentiable form ----------------------------------------------------

// Per-step tape nodes the loss differentiates through.
struct StepNodes {
  tensor::Var v_nat;
  tensor::Var v_vis;
  tensor::Var log_pi_nat;  // log-probability of the taken natural action
  tensor::Var log_pi_vis;
  tensor::Var entropy_nat;
  tensor::Var entropy_vis;
};

// -sum(pi * log_pi) recorded on the tape.
tensor::Var entropy_node(tensor::Tape& tape, tensor::Var pi, tensor::Var log_pi);

struct HeadSelection {
  bool natural = true;
  bool vision = true;
};

// Records L_total (or the selected heads' part of it) on `tape`. Advantage
// estimates and bootstrap values enter as constants. Scalar values of the
// parts are written to `parts` when given.
tensor::Var build_loss(tensor::Tape& tape, const RolloutBuffer& buf, std::span<const StepNodes> nodes,
                       const Hyper& hyper, const LossOptions& opts, HeadSelection heads = {},
                       LossParts* parts = nullptr);

}  // namespace fovrl::adv
