#include <string>

#include "fovrl/env.hpp"
#include "fovrl/errors.hpp"

namespace fovrl::env {

BanditStub::BanditStub(std::uint64_t seed, int rewarded_action, int episode_length)
    : rng_(seed), rewarded_action_(rewarded_action), episode_length_(episode_length) {
  if (rewarded_action < 0 || rewarded_action >= natural_action_count()) {
    throw InvalidConfig("bandit rewarded action out of range");
  }
}

Frame BanditStub::observation() const { return Frame(kScreenWidth, kScreenHeight, state_ == 0 ? 0.25 : 0.75); }

Frame BanditStub::reset() {
  t_ = 0;
  score_ = 0;
  terminal_ = false;
  state_ = static_cast<int>(rng_() & 1u);
  return observation();
}

StepResult BanditStub::step(int action) {
  if (terminal_) throw ContractViolation("step() on a terminal bandit episode");
  if (action < 0 || action >= action_count()) throw InvalidInput("bandit action out of range");
  StepResult r;
  r.reward = action == rewarded_action_ ? 1.0 : 0.0;
  score_ += static_cast<int>(r.reward);
  state_ = static_cast<int>(rng_() & 1u);
  ++t_;
  r.terminal = terminal_ = t_ >= episode_length_;
  r.frame = observation();
  r.lives = 1;
  r.raw_score = score_;
  return r;
}

GazeStub::GazeStub(std::uint64_t /*seed*/, int episode_length) : episode_length_(episode_length) {}

bool GazeStub::in_target(fovea::FocalPoint fp) {
  return fp.x < kScreenWidth / 2 && fp.y < kScreenHeight / 2;
}

Frame GazeStub::observation() const {
  // A diagonal ramp, so the visible window reveals where the gaze is.
  Frame f(kScreenWidth, kScreenHeight);
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) f.at(x, y) = 0.2 + 0.6 * (x + y) / (f.width + f.height - 2.0);
  }
  return f;
}

Frame GazeStub::reset() {
  t_ = 0;
  score_ = 0;
  terminal_ = false;
  focus_ = fovea::screen_center();
  return observation();
}

StepResult GazeStub::step(int action) {
  if (terminal_) throw ContractViolation("step() on a terminal gaze episode");
  if (action < 0 || action >= action_count()) throw InvalidInput("gaze-stub action out of range");
  StepResult r;
  r.reward = in_target(focus_) ? 1.0 : 0.0;
  score_ += static_cast<int>(r.reward);
  ++t_;
  r.terminal = terminal_ = t_ >= episode_length_;
  r.frame = observation();
  r.lives = 1;
  r.raw_score = score_;
  return r;
}

}  // namespace fovrl::env
