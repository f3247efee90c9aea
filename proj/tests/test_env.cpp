#include <random>
#include <set>

#include "doctest.h"
#include "fovrl/env.hpp"
#include "fovrl/errors.hpp"

using namespace fovrl;
using namespace fovrl::env;

namespace {

EnvConfig seeded(std::uint64_t seed) {
  EnvConfig c;
  c.seed = seed;
  return c;
}

// Places a live ball so its next tick overlaps brick (row, col) moving up.
void aim_at_brick(Breakout& b, int row, int col) {
  GameState& s = b.mutable_state();
  s.awaiting_fire = false;
  s.ball_x = col * kBrickWidth + 3;
  s.ball_y = kBrickTop + row * kBrickHeight + kBrickHeight;  // just below, one step away
  s.ball_dx = 0;
  s.ball_dy = -1;
  for (int r = row + 1; r < kBrickRows; ++r) s.bricks[r][col] = false;
}

}  // namespace

TEST_CASE("natural action count") {
  CHECK(natural_action_count() == 4);
  Breakout b(seeded(1));
  CHECK(b.action_count() == 4);
}

TEST_CASE("reset is deterministic for a fixed seed") {
  Breakout a(seeded(42)), b(seeded(42));
  CHECK(a.reset() == b.reset());
  CHECK(a.state() == b.state());
  CHECK(a.last_noops() == b.last_noops());
}

TEST_CASE("fire on reset launches the ball") {
  Breakout b(seeded(3));
  b.reset();
  CHECK_FALSE(b.state().awaiting_fire);
  EnvConfig c = seeded(3);
  c.fire_on_reset = false;
  Breakout nofire(c);
  nofire.reset();
  CHECK(nofire.state().awaiting_fire);
}

TEST_CASE("no-op range") {
  EnvConfig c = seeded(5);
  c.noop_min = c.noop_max = 0;
  Breakout b(c);
  for (int i = 0; i < 5; ++i) {
    b.reset();
    CHECK(b.last_noops() == 0);
  }
  Breakout wide(seeded(5));
  std::set<int> seen;
  for (int i = 0; i < 300; ++i) {
    wide.reset();
    CHECK(wide.last_noops() >= 0);
    CHECK(wide.last_noops() <= 30);
    seen.insert(wide.last_noops());
  }
  CHECK(seen.size() > 20);
}

TEST_CASE("paddle is clamped at the left wall") {
  Breakout b(seeded(1));
  b.reset();
  b.mutable_state().paddle_x = 0;
  b.mutable_state().ball_y = 40;
  b.mutable_state().ball_dy = -1;
  b.step(static_cast<int>(BreakoutAction::kLeft));
  CHECK(b.state().paddle_x == 0);
}

TEST_CASE("brick reward is clipped to +1 while the raw score keeps points") {
  Breakout b(seeded(1));
  b.reset();
  aim_at_brick(b, 0, 4);
  const int before = b.state().score;
  const StepResult r = b.step(static_cast<int>(BreakoutAction::kNoop));
  CHECK(r.reward == 1.0);
  CHECK(r.raw_score - before == kBrickPoints[0]);
  CHECK_FALSE(b.state().bricks[0][4]);

  EnvConfig raw = seeded(1);
  raw.clip_rewards = false;
  Breakout u(raw);
  u.reset();
  aim_at_brick(u, 0, 4);
  CHECK(u.step(0).reward == kBrickPoints[0]);
}

TEST_CASE("ball below the paddle ends the episode and costs a life") {
  Breakout b(seeded(1));
  b.reset();
  GameState& s = b.mutable_state();
  s.paddle_x = 0;
  s.ball_x = 60;
  s.ball_y = 73;
  s.ball_dx = 0;
  s.ball_dy = 1;
  const StepResult r = b.step(0);
  CHECK(r.terminal);
  CHECK(r.lives == kInitialLives - 1);
  CHECK_THROWS_AS(b.step(0), ContractViolation);
}

TEST_CASE("life loss not terminal when disabled") {
  EnvConfig c = seeded(1);
  c.life_loss_terminal = false;
  Breakout b(c);
  b.reset();
  GameState& s = b.mutable_state();
  s.paddle_x = 0;
  s.ball_x = 60;
  s.ball_y = 73;
  s.ball_dy = 1;
  const StepResult r = b.step(0);
  CHECK_FALSE(r.terminal);
  CHECK(r.lives == kInitialLives - 1);
}

TEST_CASE("returned frame is the pixelwise max of the last two ticks") {
  Breakout b(seeded(9));
  b.reset();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200 && !b.terminal(); ++i) {
    const StepResult r = b.step(static_cast<int>(rng() % 4));
    const Frame& last = b.last_tick_frame();
    const Frame& prev = b.previous_tick_frame();
    for (std::size_t k = 0; k < r.frame.values.size(); ++k) {
      REQUIRE(r.frame.values[k] >= last.values[k]);
      REQUIRE(r.frame.values[k] >= prev.values[k]);
      REQUIRE(r.frame.values[k] == std::max(last.values[k], prev.values[k]));
    }
  }
}

TEST_CASE("trajectories are deterministic, rewards clipped, episodes bounded") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Breakout a(seeded(seed)), b(seeded(seed));
    std::mt19937_64 rng(seed);
    for (int ep = 0; ep < 5; ++ep) {
      REQUIRE(a.reset() == b.reset());
      int steps = 0;
      for (;;) {
        const int act = static_cast<int>(rng() % 4);
        const StepResult ra = a.step(act), rb = b.step(act);
        REQUIRE(ra.frame == rb.frame);
        REQUIRE(ra.reward == rb.reward);
        REQUIRE(ra.terminal == rb.terminal);
        REQUIRE((ra.reward == -1.0 || ra.reward == 0.0 || ra.reward == 1.0));
        ++steps;
        REQUIRE(steps <= a.config().max_episode_steps);
        if (ra.terminal) break;
      }
    }
  }
}

TEST_CASE("hard step cap terminates an episode") {
  EnvConfig c = seeded(1);
  c.max_episode_steps = 7;
  Breakout b(c);
  b.reset();
  // Keep the paddle under the ball so no life is lost.
  int n = 0;
  bool term = false;
  while (!term) {
    GameState& s = b.mutable_state();
    s.paddle_x = std::clamp(s.ball_x - kPaddleWidth / 2, 0, kScreenWidth - kPaddleWidth);
    term = b.step(0).terminal;
    ++n;
  }
  CHECK(n <= 7);
}

TEST_CASE("render_frame") {
  GameState empty;
  empty.paddle_x = -100;
  Frame f = render_frame(empty);
  for (double v : f.values) CHECK(v == 0.0);

  GameState s = GameState::initial();
  CHECK(render_frame(s) == render_frame(s));
  s.awaiting_fire = false;
  s.ball_x = 40;
  s.ball_y = 50;
  const Frame full = render_frame(s);
  int nonzero = 0;
  for (double v : full.values) nonzero += v != 0.0;
  const int analytic = kBrickRows * kBrickCols * kBrickWidth * kBrickHeight + kPaddleWidth * kPaddleHeight +
                       kBallSize * kBallSize;
  CHECK(nonzero == analytic);
  std::set<double> row_shades;
  for (int r = 0; r < kBrickRows; ++r) row_shades.insert(full.at(1, kBrickTop + r * kBrickHeight));
  CHECK(row_shades.size() == kBrickRows);
}

TEST_CASE("bandit stub pays only the rewarded action") {
  BanditStub b(1);
  b.reset();
  CHECK(b.step(b.rewarded_action()).reward == 1.0);
  CHECK(b.step((b.rewarded_action() + 1) % 4).reward == 0.0);
  int n = 2;
  while (!b.step(0).terminal) ++n;
  CHECK(n + 1 == 20);
  CHECK_THROWS_AS(b.step(0), ContractViolation);
}

TEST_CASE("gaze stub rewards the observed focus quadrant") {
  GazeStub g(1);
  g.reset();
  g.observe_focus({10, 10});
  CHECK(g.step(0).reward == 1.0);
  g.observe_focus({40, 40});
  CHECK(g.step(0).reward == 0.0);
  g.observe_focus({39, 60});
  CHECK(g.step(0).reward == 0.0);
}

TEST_CASE("env kind names and config validation") {
  for (auto k : {EnvKind::kBreakout, EnvKind::kBandit, EnvKind::kGaze}) CHECK(parse_env_kind(env_kind_name(k)) == k);
  CHECK_THROWS_AS(parse_env_kind("pong"), InvalidConfig);
  EnvConfig c;
  c.noop_min = 5;
  c.noop_max = 2;
  CHECK_THROWS_AS(c.validate(), InvalidConfig);
  Breakout b(seeded(1));
  b.reset();
  CHECK_THROWS_AS(b.step(4), InvalidInput);
}
