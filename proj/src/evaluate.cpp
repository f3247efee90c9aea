#include <algorithm>
#include <numeric>

#include "fovrl/errors.hpp"
#include "fovrl/trainer.hpp"

namespace fovrl::train {

double EvalResult::lower_half_fraction() const {
  const auto total = std::accumulate(heatmap.begin(), heatmap.end(), std::int64_t{0});
  if (total == 0) return 0.0;
  std::int64_t lower = 0;
  for (int y = height / 2; y < height; ++y) {
    for (int x = 0; x < width; ++x) lower += heatmap[static_cast<std::size_t>(y * width + x)];
  }
  return static_cast<double>(lower) / static_cast<double>(total);
}

double EvalResult::quadrant_fraction(bool left, bool top) const {
  const auto total = std::accumulate(heatmap.begin(), heatmap.end(), std::int64_t{0});
  if (total == 0) return 0.0;
  const int x0 = left ? 0 : width / 2, x1 = left ? width / 2 : width;
  const int y0 = top ? 0 : height / 2, y1 = top ? height / 2 : height;
  std::int64_t n = 0;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) n += heatmap[static_cast<std::size_t>(y * width + x)];
  }
  return static_cast<double>(n) / static_cast<double>(total);
}

namespace {

void finish(EvalResult& r) {
  if (r.episodes.empty()) return;
  double sum = 0.0;
  r.min_score = r.episodes.front().raw_score;
  r.max_score = r.episodes.front().raw_score;
  for (const auto& e : r.episodes) {
    sum += e.raw_score;
    r.min_score = std::min(r.min_score, e.raw_score);
    r.max_score = std::max(r.max_score, e.raw_score);
    r.total_steps += e.steps;
  }
  r.mean_score = sum / static_cast<double>(r.episodes.size());
}

}  // namespace

EvalResult evaluate(const tensor::ParamVector& params, const TrainConfig& cfg, int episodes, const EvalOptions& opts) {
  cfg.validate();
  if (episodes < 0) throw InvalidInput("episode count must be >= 0");
  const net::PolicyNet net(cfg.net);
  net.check_layout(params);
  if (opts.forced_visual_action && (*opts.forced_visual_action < 0 || *opts.forced_visual_action >= fovea::kVisualActionCount)) {
    throw InvalidInput("forced visual action out of range");
  }
  if (opts.forced_natural_action &&
      (*opts.forced_natural_action < 0 || *opts.forced_natural_action >= env::natural_action_count())) {
    throw InvalidInput("forced natural action out of range");
  }

  env::EnvConfig ec = cfg.env;
  ec.seed = derive_seed(opts.seed, 0);
  auto environment = env::make_environment(cfg.env_kind, ec);
  std::mt19937_64 rng(derive_seed(opts.seed, 1));

  EvalResult r;
  r.heatmap.assign(static_cast<std::size_t>(r.width * r.height), 0);
  for (int ep = 0; ep < episodes; ++ep) {
    Frame frame = environment->reset();
    fovea::FocalPoint fp = fovea::screen_center();
    net::LstmState state = net.initial_lstm_state();
    EpisodeScore score;
    for (;;) {
      ++r.heatmap[static_cast<std::size_t>(fp.y * r.width + fp.x)];
      environment->observe_focus(fp);
      const net::NetOutput out = net.forward(fovea::apply_roi(frame, cfg.roi, fp), state, params);
      int a_nat, a_vis;
      if (opts.greedy) {
        a_nat = net::argmax(out.pi_nat);
        a_vis = net::argmax(out.pi_vis);
      } else {
        std::tie(a_nat, a_vis) = net::sample_actions(out, rng);
      }
      if (opts.forced_natural_action) a_nat = *opts.forced_natural_action;
      if (opts.forced_visual_action) a_vis = *opts.forced_visual_action;

      const env::StepResult res = environment->step(a_nat);
      fp = fovea::move_focal_point(fp, fovea::visual_action_from_index(a_vis), cfg.gaze_step);
      state = out.lstm_state;
      frame = res.frame;
      ++score.steps;
      score.raw_score = res.raw_score;
      if (res.terminal) break;
    }
    r.episodes.push_back(score);
  }
  finish(r);
  return r;
}

EvalResult evaluate(const std::filesystem::path& checkpoint, const TrainConfig& cfg, int episodes,
                    const EvalOptions& opts) {
  return evaluate(tensor::load_checkpoint(checkpoint), cfg, episodes, opts);
}

double random_policy_baseline(const TrainConfig& cfg, int episodes, std::uint64_t seed) {
  if (episodes < 1) throw InvalidInput("episode count must be >= 1");
  env::EnvConfig ec = cfg.env;
  ec.seed = derive_seed(seed, 0);
  auto environment = env::make_environment(cfg.env_kind, ec);
  std::mt19937_64 rng(derive_seed(seed, 1));
  std::uniform_int_distribution<int> pick(0, environment->action_count() - 1);
  double total = 0.0;
  for (int ep = 0; ep < episodes; ++ep) {
    environment->reset();
    int score = 0;
    for (;;) {
      const env::StepResult res = environment->step(pick(rng));
      score = res.raw_score;
      if (res.terminal) break;
    }
    total += score;
  }
  return total / episodes;
}

}  // namespace fovrl::train
