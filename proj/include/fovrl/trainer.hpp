#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fovrl/advantage.hpp"
#include "fovrl/env.hpp"
#include "fovrl/fovea.hpp"
#include "fovrl/optimizer.hpp"
#include "fovrl/params.hpp"
#include "fovrl/policy_net.hpp"

// Asynchronous advantage actor-critic training with focus-of-attention:
// action-learners with private environments, network copies and gaze,
// pushing gradients into one shared parameter vector.
namespace fovrl::train {

enum class TrainMode { kAsyncLockFree, kAsyncMutex, kSequential };

std::string mode_name(TrainMode mode);
TrainMode parse_mode(const std::string& name);

struct TrainConfig {
  env::EnvKind env_kind = env::EnvKind::kBreakout;
  env::EnvConfig env;
  fovea::RoiConfig roi{{{kScreenWidth, kScreenHeight, 1}}, false, 5};
  int gaze_step = fovea::kDefaultGazeStep;
  net::NetConfig net;
  adv::Hyper hyper;
  adv::LossOptions loss;
  AmsGradConfig optimizer;
  int t_max = 20;
  std::int64_t T_max = 1'000'000;
  int workers = 8;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::kAsyncLockFree;
  double grad_clip = 0.0;  // global L2 norm limit; 0 disables
  std::int64_t checkpoint_every = 0;  // global steps between checkpoints; 0 = final only

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// Shared parameters Theta, shared optimizer moments and the global step
// counter T.
class GlobalState {
 public:
  GlobalState(tensor::ParamVector init, AmsGradConfig opt, TrainMode mode);

  // theta = Theta. Exact in sequential/mutex mode, possibly torn in
  // lock-free mode.
  void synchronize(tensor::ParamVector& local) const;
  void update(std::span<const double> grads);
  tensor::ParamVector snapshot() const;

  std::int64_t advance(std::int64_t steps) { return T_.fetch_add(steps, std::memory_order_relaxed) + steps; }
  std::int64_t steps() const { return T_.load(std::memory_order_relaxed); }
  TrainMode mode() const { return mode_; }
  const SharedAmsGrad& optimizer() const { return opt_; }
  std::int64_t updates() const { return opt_.steps(); }

 private:
  tensor::ParamVector theta_;
  SharedAmsGrad opt_;
  TrainMode mode_;
  mutable std::mutex mu_;
  std::atomic<std::int64_t> T_{0};
};

// Applies one shared AMSGrad step with the optimizer's learning rate.
void update_global(GlobalState& g, std::span<const double> grads);

// Scales `grads` so its L2 norm is at most `max_norm`; returns the
// pre-clip norm.
double clip_grad_norm(std::span<double> grads, double max_norm);

struct EpisodeRecord {
  std::int64_t episode = 0;
  int worker = 0;
  std::int64_t steps = 0;
  int raw_score = 0;
  double clipped_return = 0.0;
  std::int64_t wall_ms = 0;

  bool operator==(const EpisodeRecord&) const = default;
};

struct UpdateRecord {
  std::int64_t update = 0;
  std::int64_t T = 0;
  adv::LossParts loss;
};

inline constexpr const char* kEpisodeCsvHeader = "episode,worker,steps,raw_score,clipped_return,wall_ms";
inline constexpr const char* kUpdateCsvHeader = "update,T,L_total,L_policy_nat,L_value_nat,L_policy_vis,L_value_vis";

// Thread-safe sink for episode and update records; optionally mirrors them
// to CSV streams.
class RunLog {
 public:
  RunLog(std::ostream* episodes_csv, std::ostream* updates_csv);

  // Assigns the global episode index and returns the stored record.
  EpisodeRecord record_episode(EpisodeRecord rec);
  void record_update(const UpdateRecord& rec);

  std::vector<EpisodeRecord> episodes() const;
  std::int64_t update_count() const;
  bool all_losses_finite() const;
  std::optional<adv::LossParts> last_loss() const;

  // Evaluated after each episode; returning true asks workers to stop.
  void set_stop_predicate(std::function<bool(const std::vector<EpisodeRecord>&)> pred);
  bool stop_requested() const { return stop_.load(std::memory_order_relaxed); }
  void request_stop() { stop_.store(true, std::memory_order_relaxed); }

 private:
  mutable std::mutex mu_;
  std::ostream* episodes_csv_;
  std::ostream* updates_csv_;
  std::vector<EpisodeRecord> episodes_;
  std::int64_t updates_ = 0;
  bool finite_ = true;
  std::optional<adv::LossParts> last_loss_;
  std::function<bool(const std::vector<EpisodeRecord>&)> stop_pred_;
  std::atomic<bool> stop_{false};
};

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// One action-learner.
class Worker {
 public:
  Worker(int id, const TrainConfig& cfg, const net::PolicyNet& net, std::chrono::steady_clock::time_point start,
         bool record_wall_time);

  // Up to t_max transitions with the worker's current local parameters.
  // Every network step is recorded on `tape` against `params` (from
  // ParamVector::bind); `nodes` receives the per-step loss inputs.
  adv::RolloutBuffer collect_rollout(tensor::Tape& tape, std::span<const tensor::Var> params,
                                     std::vector<adv::StepNodes>& nodes, GlobalState& global, RunLog& log);

  // synchronise -> collect -> loss -> backward -> update.
  adv::LossParts run_once(GlobalState& global, RunLog& log);

  int id() const { return id_; }
  tensor::ParamVector& local_params() { return local_; }
  fovea::FocalPoint focal_point() const { return fp_; }
  const net::LstmState& lstm_state() const { return lstm_; }

 private:
  void begin_episode();

  int id_;
  const TrainConfig& cfg_;
  const net::PolicyNet& net_;
  std::unique_ptr<env::Environment> env_;
  tensor::ParamVector local_;
  std::vector<double> grad_;
  std::mt19937_64 rng_;
  std::chrono::steady_clock::time_point start_;
  bool record_wall_time_;

  bool needs_reset_ = true;
  Frame frame_;
  fovea::FocalPoint fp_;
  net::LstmState lstm_;
  std::int64_t episode_steps_ = 0;
  int episode_score_ = 0;
  double episode_return_ = 0.0;
};

struct RunOptions {
  // Directory for episodes.csv, updates.csv and checkpoint.bin; empty keeps
  // everything in memory.
  std::filesystem::path out_dir;
  std::function<bool(const std::vector<EpisodeRecord>&)> stop_when;
};

struct TrainResult {
  tensor::ParamVector params;
  std::int64_t T = 0;
  std::int64_t updates = 0;
  std::vector<EpisodeRecord> episodes;
  bool all_losses_finite = true;
  bool stopped_early = false;
  double wall_seconds = 0.0;
};

inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kEpisodeLogFile = "episodes.csv";
inline constexpr const char* kUpdateLogFile = "updates.csv";

TrainResult run_training(const TrainConfig& cfg, const RunOptions& opts = {});

// ---- evaluation -------------------------------------------------------------

struct EvalOptions {
  bool greedy = false;
  std::optional<int> forced_visual_action;
  std::optional<int> forced_natural_action;
  std::uint64_t seed = 12345;
};

struct EpisodeScore {
  std::int64_t steps = 0;
  int raw_score = 0;
};

struct EvalResult {
  std::vector<EpisodeScore> episodes;
  double mean_score = 0.0;
  int min_score = 0;
  int max_score = 0;
  std::int64_t total_steps = 0;
  // Focal-point visit counts, row-major [y * width + x].
  std::vector<std::int64_t> heatmap;
  int width = kScreenWidth;
  int height = kScreenHeight;

  double lower_half_fraction() const;
  double quadrant_fraction(bool left, bool top) const;
};

EvalResult evaluate(const tensor::ParamVector& params, const TrainConfig& cfg, int episodes,
                    const EvalOptions& opts = {});
EvalResult evaluate(const std::filesystem::path& checkpoint, const TrainConfig& cfg, int episodes,
                    const EvalOptions& opts = {});

// Mean raw score of uniformly random natural actions (no network).
double random_policy_baseline(const TrainConfig& cfg, int episodes, std::uint64_t seed);

}  // namespace fovrl::train
