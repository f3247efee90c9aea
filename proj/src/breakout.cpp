#include "fovrl/env.hpp"

#include <algorithm>
#include <string>

#include "fovrl/errors.hpp"

namespace fovrl::env {
namespace {

bool overlaps(int ax, int ay, int aw, int ah, int bx, int by, int bw, int bh) {
  return ax < bx + bw && bx < ax + aw && ay < by + bh && by < ay + ah;
}

void fill_rect(Frame& frame, int x0, int y0, int w, int h, double value) {
  const int xa = std::max(x0, 0), xb = std::min(x0 + w, frame.width);
  const int ya = std::max(y0, 0), yb = std::min(y0 + h, frame.height);
  for (int y = ya; y < yb; ++y) {
    for (int x = xa; x < xb; ++x) frame.at(x, y) = value;
  }
}

}  // namespace

void EnvConfig::validate() const {
  if (frame_skip < 1) throw InvalidConfig("frame_skip must be >= 1");
  if (noop_min < 0 || noop_max < noop_min) throw InvalidConfig("noop range must satisfy 0 <= min <= max");
  if (max_episode_steps < 1) throw InvalidConfig("max_episode_steps must be >= 1");
}

int natural_action_count() { return 4; }

int GameState::bricks_left() const {
  int n = 0;
  for (const auto& row : bricks) n += static_cast<int>(std::count(row.begin(), row.end(), true));
  return n;
}

GameState GameState::initial() {
  GameState s;
  for (auto& row : s.bricks) row.fill(true);
  return s;
}

Frame render_frame(const GameState& state) {
  Frame frame(kScreenWidth, kScreenHeight, 0.0);
  for (int r = 0; r < kBrickRows; ++r) {
    for (int c = 0; c < kBrickCols; ++c) {
      if (state.bricks[r][c]) {
        fill_rect(frame, c * kBrickWidth, kBrickTop + r * kBrickHeight, kBrickWidth, kBrickHeight,
                  kBrickShades[r]);
      }
    }
  }
  fill_rect(frame, state.paddle_x, kPaddleY, kPaddleWidth, kPaddleHeight, kPaddleShade);
  if (state.ball_in_play()) {
    fill_rect(frame, state.ball_x, state.ball_y, kBallSize, kBallSize, kBallShade);
  }
  return frame;
}

Breakout::Breakout(EnvConfig cfg) : cfg_(cfg), rng_(cfg.seed) { cfg_.validate(); }

void Breakout::launch_ball() {
  std::uniform_int_distribution<int> xs(8, kScreenWidth - 8 - kBallSize);
  std::bernoulli_distribution left(0.5);
  state_.ball_x = xs(rng_);
  state_.ball_y = kBallLaunchY;
  state_.ball_dx = left(rng_) ? -1 : 1;
  state_.ball_dy = 1;
  state_.awaiting_fire = false;
}

int Breakout::tick(BreakoutAction a, bool& life_lost) {
  GameState& s = state_;
  if (a == BreakoutAction::kLeft) s.paddle_x = std::max(0, s.paddle_x - kPaddleSpeed);
  if (a == BreakoutAction::kRight) s.paddle_x = std::min(kScreenWidth - kPaddleWidth, s.paddle_x + kPaddleSpeed);
  if (a == BreakoutAction::kFire && s.awaiting_fire && s.lives > 0) launch_ball();
  if (!s.ball_in_play()) return 0;

  s.ball_x += s.ball_dx;
  s.ball_y += s.ball_dy;
  if (s.ball_x < 0) {
    s.ball_x = -s.ball_x;
    s.ball_dx = -s.ball_dx;
  } else if (s.ball_x + kBallSize > kScreenWidth) {
    s.ball_x = 2 * (kScreenWidth - kBallSize) - s.ball_x;
    s.ball_dx = -s.ball_dx;
  }
  if (s.ball_y < 0) {
    s.ball_y = -s.ball_y;
    s.ball_dy = -s.ball_dy;
  }

  int reward = 0;
  // At most one brick per tick: nearest row in the direction of travel, then
  // the column under the ball centre.
  for (int i = 0; i < kBrickRows && reward == 0; ++i) {
    const int r = s.ball_dy < 0 ? kBrickRows - 1 - i : i;
    const int by = kBrickTop + r * kBrickHeight;
    const int centre_col = std::clamp((s.ball_x + kBallSize / 2) / kBrickWidth, 0, kBrickCols - 1);
    for (int c : {centre_col, centre_col - 1, centre_col + 1}) {
      if (c < 0 || c >= kBrickCols || !s.bricks[r][c]) continue;
      if (overlaps(s.ball_x, s.ball_y, kBallSize, kBallSize, c * kBrickWidth, by, kBrickWidth, kBrickHeight)) {
        s.bricks[r][c] = false;
        reward = kBrickPoints[r];
        s.ball_dy = -s.ball_dy;
        break;
      }
    }
  }

  if (s.ball_dy > 0 &&
      overlaps(s.ball_x, s.ball_y, kBallSize, kBallSize, s.paddle_x, kPaddleY, kPaddleWidth, kPaddleHeight)) {
    s.ball_dy = -s.ball_dy;
    s.ball_y = kPaddleY - kBallSize;
    const int ball_centre = 2 * s.ball_x + kBallSize;
    const int paddle_centre = 2 * s.paddle_x + kPaddleWidth;
    s.ball_dx = ball_centre < paddle_centre ? -1 : 1;
  }

  if (s.ball_y >= kPaddleY + kPaddleHeight) {
    life_lost = true;
    s.lives -= 1;
    s.awaiting_fire = true;
    s.ball_x = s.ball_y = -kBallSize;
    s.ball_dx = s.ball_dy = 0;
  }
  s.score += reward;
  return reward;
}

StepResult Breakout::repeat_action(BreakoutAction a) {
  int raw = 0;
  bool life_lost = false;
  int ticks = 0;
  for (int i = 0; i < cfg_.frame_skip; ++i) {
    raw += tick(a, life_lost);
    Frame f = render_frame(state_);
    prev_tick_ = ticks == 0 ? f : std::move(last_tick_);
    last_tick_ = std::move(f);
    ++ticks;
    if (life_lost || state_.bricks_left() == 0) break;
  }
  StepResult r;
  r.frame = cfg_.max_pool_screens ? pixelwise_max(prev_tick_, last_tick_) : last_tick_;
  r.reward = cfg_.clip_rewards ? static_cast<double>((raw > 0) - (raw < 0)) : static_cast<double>(raw);
  r.lives = state_.lives;
  r.raw_score = state_.score;
  r.terminal = (life_lost && cfg_.life_loss_terminal) || state_.lives == 0 || state_.bricks_left() == 0;
  return r;
}

Frame Breakout::reset() {
  state_ = GameState::initial();
  terminal_ = false;
  episode_steps_ = 0;
  std::uniform_int_distribution<int> noops(cfg_.noop_min, cfg_.noop_max);
  last_noops_ = noops(rng_);
  Frame frame = render_frame(state_);
  for (int i = 0; i < last_noops_; ++i) frame = repeat_action(BreakoutAction::kNoop).frame;
  if (cfg_.fire_on_reset) frame = repeat_action(BreakoutAction::kFire).frame;
  return frame;
}

StepResult Breakout::step(int action) {
  if (terminal_) throw ContractViolation("step() on a terminal Breakout episode; call reset()");
  if (action < 0 || action >= natural_action_count()) {
    throw InvalidInput("Breakout action out of range: " + std::to_string(action));
  }
  StepResult r = repeat_action(static_cast<BreakoutAction>(action));
  ++episode_steps_;
  if (episode_steps_ >= cfg_.max_episode_steps) r.terminal = true;
  terminal_ = r.terminal;
  return r;
}

std::string env_kind_name(EnvKind kind) {
  switch (kind) {
    case EnvKind::kBreakout: return "breakout";
    case EnvKind::kBandit: return "bandit";
    case EnvKind::kGaze: return "gaze";
  }
  return "?";
}

EnvKind parse_env_kind(const std::string& name) {
  if (name == "breakout") return EnvKind::kBreakout;
  if (name == "bandit") return EnvKind::kBandit;
  if (name == "gaze") return EnvKind::kGaze;
  throw InvalidConfig("unknown environment '" + name + "' (expected breakout, bandit or gaze)");
}

std::unique_ptr<Environment> make_environment(EnvKind kind, const EnvConfig& cfg) {
  switch (kind) {
    case EnvKind::kBreakout: return std::make_unique<Breakout>(cfg);
    case EnvKind::kBandit: return std::make_unique<BanditStub>(cfg.seed);
    case EnvKind::kGaze: return std::make_unique<GazeStub>(cfg.seed);
  }
  throw InvalidConfig("unknown environment kind");
}

}  // namespace fovrl::env
