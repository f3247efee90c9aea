#include "fovrl/advantage.hpp"

#include <cmath>
#include <string>

#include "fovrl/errors.hpp"

namespace fovrl::adv {

using tensor::Tape;
using tensor::Var;

namespace {

void check_index(const RolloutBuffer& buf, Head head, std::size_t t) {
  const std::size_t n = head_terms(buf, head);
  if (t >= n) {
    throw ContractViolation(std::string(head == Head::kNatural ? "natural" : "vision") + "-head index " +
                            std::to_string(t) + " out of range (" + std::to_string(n) + " terms)");
  }
  if (head == Head::kVision && !buf.steps[t].has_reward_after) {
    throw ContractViolation("R_{t+2} missing for transition " + std::to_string(t));
  }
}

double value_at(const RolloutBuffer& buf, Head head, std::size_t t) {
  return head == Head::kNatural ? buf.steps[t].v_nat : buf.steps[t].v_vis;
}

}  // namespace

void Hyper::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InvalidConfig("gamma must lie in [0,1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidConfig("lambda must lie in [0,1]");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidConfig("beta must be >= 0");
}

void RolloutBuffer::link_rewards() {
  for (std::size_t t = 0; t < steps.size(); ++t) {
    steps[t].has_reward_after = t + 1 < steps.size();
    steps[t].reward_after = steps[t].has_reward_after ? steps[t + 1].reward_next : 0.0;
  }
}

bool RolloutBuffer::overlap_consistent() const {
  for (std::size_t t = 0; t + 1 < steps.size(); ++t) {
    if (!steps[t].has_reward_after || steps[t].reward_after != steps[t + 1].reward_next) return false;
  }
  return true;
}

std::size_t head_terms(const RolloutBuffer& buf, Head head) {
  const std::size_t k = buf.size();
  if (head == Head::kNatural) return k;
  return k == 0 ? 0 : k - 1;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

double nstep_advantage(const RolloutBuffer& buf, Head head, std::size_t t, double gamma,
                       VisBootstrapExponent exponent) {
  check_index(buf, head, t);
  const std::size_t k = buf.size();
  double ret = 0.0;
  double discount = 1.0;
  if (head == Head::kNatural) {
    for (std::size_t i = t; i < k; ++i) {
      ret += discount * buf.steps[i].reward_next;
      discount *= gamma;
    }
    ret += std::pow(gamma, static_cast<double>(k - t)) * buf.bootstrap_nat;
    return ret - buf.steps[t].v_nat;
  }
  for (std::size_t i = t; i + 1 < k; ++i) {
    ret += discount * buf.steps[i].reward_after;
    discount *= gamma;
  }
  const std::size_t e = exponent == VisBootstrapExponent::kK ? k - t : k - 1 - t;
  ret += std::pow(gamma, static_cast<double>(e)) * buf.bootstrap_vis;
  return ret - buf.steps[t].v_vis;
}

double nstep_advantage_nat(const RolloutBuffer& buf, std::size_t t, double gamma) {
  return nstep_advantage(buf, Head::kNatural, t, gamma);
}

double td0_delta(const RolloutBuffer& buf, Head head, std::size_t t, double gamma) {
  check_index(buf, head, t);
  const std::size_t k = buf.size();
  if (head == Head::kNatural) {
    const double next = t + 1 < k ? buf.steps[t + 1].v_nat : buf.bootstrap_nat;
    return buf.steps[t].reward_next + gamma * next - buf.steps[t].v_nat;
  }
  return buf.steps[t].reward_after + gamma * buf.steps[t + 1].v_vis - buf.steps[t].v_vis;
}

std::vector<double> td0_deltas(const RolloutBuffer& buf, Head head, double gamma) {
  std::vector<double> d(head_terms(buf, head));
  for (std::size_t t = 0; t < d.size(); ++t) d[t] = td0_delta(buf, head, t, gamma);
  return d;
}

std::vector<double> gae(std::span<const double> deltas, double gamma, double lambda) {
  std::vector<double> out(deltas.size());
  const double decay = gamma * lambda;
  double running = 0.0;
  for (std::size_t t = deltas.size(); t-- > 0;) {
    running = deltas[t] + decay * running;
    out[t] = running;
  }
  return out;
}

double loss_value(const RolloutBuffer& buf, Head head, double gamma, VisBootstrapExponent exponent) {
  double acc = 0.0;
  for (std::size_t t = 0; t < head_terms(buf, head); ++t) {
    const double a = nstep_advantage(buf, head, t, gamma, exponent);
    acc += a * a;
  }
  return 0.5 * acc;
}

double loss_policy(const RolloutBuffer& buf, Head head, const Hyper& hyper) {
  const auto adv = gae(td0_deltas(buf, head, hyper.gamma), hyper.gamma, hyper.lambda);
  double acc = 0.0;
  for (std::size_t t = 0; t < adv.size(); ++t) {
    const Transition& s = buf.steps[t];
    const double logp = head == Head::kNatural ? s.log_pi_nat : s.log_pi_vis;
    const double h = head == Head::kNatural ? s.entropy_nat : s.entropy_vis;
    acc += -logp * adv[t] - hyper.beta * h;
  }
  return acc;
}

LossParts total_loss(const RolloutBuffer& buf, const Hyper& hyper, const LossOptions& opts) {
  LossParts p;
  p.value_nat = loss_value(buf, Head::kNatural, hyper.gamma);
  p.policy_nat = loss_policy(buf, Head::kNatural, hyper);
  p.value_vis = loss_value(buf, Head::kVision, hyper.gamma, opts.vis_bootstrap_exponent);
  p.policy_vis = loss_policy(buf, Head::kVision, hyper);
  p.total = p.policy_nat + opts.value_coef * p.value_nat + p.policy_vis + opts.value_coef * p.value_vis;
  return p;
}

Var entropy_node(Tape& tape, Var pi, Var log_pi) { return tape.scale(tape.sum(tape.mul(pi, log_pi)), -1.0); }

Var build_loss(Tape& tape, const RolloutBuffer& buf, std::span<const StepNodes> nodes, const Hyper& hyper,
               const LossOptions& opts, HeadSelection heads, LossParts* parts) {
  if (nodes.size() != buf.size()) throw ContractViolation("one StepNodes entry per transition is required");

  auto head_loss = [&](Head head, double& value_out, double& policy_out) -> Var {
    const std::size_t n = head_terms(buf, head);
    const auto adv = gae(td0_deltas(buf, head, hyper.gamma), hyper.gamma, hyper.lambda);
    Var value_sum = tape.scalar(0.0);
    Var policy_sum = tape.scalar(0.0);
    for (std::size_t t = 0; t < n; ++t) {
      const StepNodes& s = nodes[t];
      const double a = nstep_advantage(buf, head, t, hyper.gamma, opts.vis_bootstrap_exponent);
      const Var v = head == Head::kNatural ? s.v_nat : s.v_vis;
      // The return target is a constant; only V(s_t) carries gradient.
      const Var diff = tape.sub(tape.scalar(a + value_at(buf, head, t)), v);
      value_sum = tape.add(value_sum, tape.mul(diff, diff));
      const Var logp = head == Head::kNatural ? s.log_pi_nat : s.log_pi_vis;
      const Var ent = head == Head::kNatural ? s.entropy_nat : s.entropy_vis;
      policy_sum = tape.add(policy_sum, tape.add(tape.scale(logp, -adv[t]), tape.scale(ent, -hyper.beta)));
    }
    const Var value_loss = tape.scale(value_sum, 0.5);
    value_out = tape.scalar_value(value_loss);
    policy_out = tape.scalar_value(policy_sum);
    return tape.add(policy_sum, tape.scale(value_loss, opts.value_coef));
  };

  LossParts local;
  Var total = tape.scalar(0.0);
  if (heads.natural) total = tape.add(total, head_loss(Head::kNatural, local.value_nat, local.policy_nat));
  if (heads.vision) total = tape.add(total, head_loss(Head::kVision, local.value_vis, local.policy_vis));
  local.total = tape.scalar_value(total);
  if (parts) *parts = local;
  return total;
}

}  // namespace fovrl::adv
