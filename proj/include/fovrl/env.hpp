#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>

#include "fovrl/fovea.hpp"
#include "fovrl/frame.hpp"

namespace fovrl::env {

// Atari-style preprocessing. No frame stacking.
struct EnvConfig {
  int frame_skip = 4;
  bool max_pool_screens = true;
  int noop_min = 0;
  int noop_max = 30;
  bool clip_rewards = true;
  bool life_loss_terminal = true;
  bool fire_on_reset = true;
  int max_episode_steps = 10000;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const EnvConfig&) const = default;
};

struct StepResult {
  Frame frame;
  double reward = 0.0;  // clipped to {-1,0,+1} when clip_rewards is set
  bool terminal = false;
  int lives = 0;
  int raw_score = 0;  // unclipped score accumulated since reset
};

class Environment {
 public:
  virtual ~Environment() = default;

  virtual Frame reset() = 0;
  virtual StepResult step(int action) = 0;
  virtual int action_count() const = 0;

  // Called with the focal point used to observe the state the next step()
  // acts on. Only stub environments that reward gaze care.
  virtual void observe_focus(fovea::FocalPoint) {}
};

// ---- toy Breakout -----------------------------------------------------------

enum class BreakoutAction : int { kNoop = 0, kFire = 1, kLeft = 2, kRight = 3 };

int natural_action_count();

inline constexpr int kBrickRows = 6;
inline constexpr int kBrickCols = 10;
inline constexpr int kBrickTop = 12;
inline constexpr int kBrickHeight = 3;
inline constexpr int kBrickWidth = kScreenWidth / kBrickCols;
inline constexpr int kPaddleY = 74;
inline constexpr int kPaddleWidth = 14;
inline constexpr int kPaddleHeight = 2;
inline constexpr int kPaddleSpeed = 3;
inline constexpr int kBallSize = 2;
inline constexpr int kInitialLives = 3;
inline constexpr int kBallLaunchY = 34;

inline constexpr std::array<double, kBrickRows> kBrickShades = {0.95, 0.85, 0.75, 0.65, 0.55, 0.45};
inline constexpr std::array<int, kBrickRows> kBrickPoints = {7, 7, 4, 4, 1, 1};
inline constexpr double kPaddleShade = 0.35;
inline constexpr double kBallShade = 1.0;

struct GameState {
  int paddle_x = (kScreenWidth - kPaddleWidth) / 2;  // left edge
  int ball_x = -kBallSize;
  int ball_y = -kBallSize;
  int ball_dx = 0;
  int ball_dy = 0;
  std::array<std::array<bool, kBrickCols>, kBrickRows> bricks{};
  int lives = kInitialLives;
  int score = 0;
  bool awaiting_fire = true;

  bool ball_in_play() const { return !awaiting_fire; }
  int bricks_left() const;
  static GameState initial();

  bool operator==(const GameState&) const = default;
};

// Rasterises bricks (row-specific shades), paddle and ball onto a black
// 80x80 canvas. The toy game renders at network resolution, so the
// crop/grayscale/normalise pass is the identity.
Frame render_frame(const GameState& state);

class Breakout final : public Environment {
 public:
  explicit Breakout(EnvConfig cfg);

  Frame reset() override;
  StepResult step(int action) override;
  int action_count() const override { return natural_action_count(); }

  const GameState& state() const { return state_; }
  GameState& mutable_state() { return state_; }
  bool terminal() const { return terminal_; }
  int last_noops() const { return last_noops_; }
  const EnvConfig& config() const { return cfg_; }
  // The frames rendered after the last two ticks of the most recent step.
  const Frame& last_tick_frame() const { return last_tick_; }
  const Frame& previous_tick_frame() const { return prev_tick_; }

 private:
  // One emulator tick; returns the raw reward and reports life loss.
  int tick(BreakoutAction a, bool& life_lost);
  void launch_ball();
  StepResult repeat_action(BreakoutAction a);

  EnvConfig cfg_;
  std::mt19937_64 rng_;
  GameState state_;
  bool terminal_ = true;
  int episode_steps_ = 0;
  int last_noops_ = 0;
  Frame last_tick_;
  Frame prev_tick_;
};

// ---- learning-sanity stubs --------------------------------------------------

// Two alternating observation states; one natural action always pays +1.
class BanditStub final : public Environment {
 public:
  explicit BanditStub(std::uint64_t seed, int rewarded_action = 2, int episode_length = 20);

  Frame reset() override;
  StepResult step(int action) override;
  int action_count() const override { return natural_action_count(); }
  int rewarded_action() const { return rewarded_action_; }

 private:
  Frame observation() const;

  std::mt19937_64 rng_;
  int rewarded_action_;
  int episode_length_;
  int t_ = 0;
  int state_ = 0;
  int score_ = 0;
  bool terminal_ = true;
};

// Reward +1 whenever the focal point used to observe the acted-on state lies
// in the target quadrant (x < 40, y < 40). Natural actions are irrelevant.
class GazeStub final : public Environment {
 public:
  explicit GazeStub(std::uint64_t seed, int episode_length = 50);

  Frame reset() override;
  StepResult step(int action) override;
  int action_count() const override { return natural_action_count(); }
  void observe_focus(fovea::FocalPoint fp) override { focus_ = fp; }

  static bool in_target(fovea::FocalPoint fp);

 private:
  Frame observation() const;

  int episode_length_;
  int t_ = 0;
  int score_ = 0;
  bool terminal_ = true;
  fovea::FocalPoint focus_ = fovea::screen_center();
};

enum class EnvKind { kBreakout, kBandit, kGaze };

std::string env_kind_name(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

std::unique_ptr<Environment> make_environment(EnvKind kind, const EnvConfig& cfg);

}  // namespace fovrl::env
