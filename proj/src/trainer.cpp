#include "fovrl/trainer.hpp"

#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <thread>

#include "fovrl/errors.hpp"

namespace fovrl::train {

using tensor::ParamVector;
using tensor::Tape;
using tensor::Var;

std::string mode_name(TrainMode mode) {
  switch (mode) {
    case TrainMode::kAsyncLockFree: return "async-lockfree";
    case TrainMode::kAsyncMutex: return "async-mutex";
    case TrainMode::kSequential: return "sequential";
  }
  return "?";
}

TrainMode parse_mode(const std::string& name) {
  if (name == "async-lockfree") return TrainMode::kAsyncLockFree;
  if (name == "async-mutex") return TrainMode::kAsyncMutex;
  if (name == "sequential") return TrainMode::kSequential;
  throw InvalidConfig("unknown mode '" + name + "' (expected async-lockfree, async-mutex or sequential)");
}

void TrainConfig::validate() const {
  env.validate();
  roi.validate();
  net.validate();
  hyper.validate();
  if (net.n_nat_actions != env::natural_action_count()) {
    throw InvalidConfig("natural policy width must equal the environment's action count");
  }
  if (net.n_vis_actions != fovea::kVisualActionCount) throw InvalidConfig("the vision head needs 5 actions");
  if (net.input_width != kScreenWidth || net.input_height != kScreenHeight) {
    throw InvalidConfig("network input must be the 80x80 canvas");
  }
  if (roi.peripheral && (kScreenWidth % roi.peripheral_grid != 0 || kScreenHeight % roi.peripheral_grid != 0)) {
    throw InvalidConfig("peripheral grid must divide 80");
  }
  if (gaze_step < 1) throw InvalidConfig("gaze step must be >= 1");
  if (t_max < 1) throw InvalidConfig("t_max must be >= 1");
  if (T_max < 0) throw InvalidConfig("T_max must be >= 0");
  if (workers < 1) throw InvalidConfig("need at least one worker");
  if (grad_clip < 0.0) throw InvalidConfig("grad_clip must be >= 0");
  if (!(loss.value_coef >= 0.0)) throw InvalidConfig("value_coef must be >= 0");
  if (checkpoint_every < 0) throw InvalidConfig("checkpoint_every must be >= 0");
}

// ---- global state -------------------------------------------------------------

GlobalState::GlobalState(ParamVector init, AmsGradConfig opt, TrainMode mode)
    : theta_(std::move(init)), opt_(theta_.size(), opt), mode_(mode) {}

void GlobalState::synchronize(ParamVector& local) const {
  if (!local.same_layout(theta_)) throw ContractViolation("local parameters do not match the global layout");
  auto dst = local.values();
  if (mode_ == TrainMode::kAsyncLockFree) {
    auto& src = const_cast<ParamVector&>(theta_);
    auto sv = src.values();
    for (std::size_t i = 0; i < sv.size(); ++i) dst[i] = std::atomic_ref<double>(sv[i]).load(std::memory_order_relaxed);
  } else {
    std::unique_lock lock(mu_, std::defer_lock);
    if (mode_ == TrainMode::kAsyncMutex) lock.lock();
    const auto sv = theta_.values();
    std::copy(sv.begin(), sv.end(), dst.begin());
  }
  local.bump_version();
}

void GlobalState::update(std::span<const double> grads) {
  switch (mode_) {
    case TrainMode::kAsyncLockFree:
      opt_.apply(theta_.values(), grads, true);
      break;
    case TrainMode::kAsyncMutex: {
      std::lock_guard lock(mu_);
      opt_.apply(theta_.values(), grads, false);
      break;
    }
    case TrainMode::kSequential:
      opt_.apply(theta_.values(), grads, false);
      break;
  }
}

ParamVector GlobalState::snapshot() const {
  ParamVector copy(theta_.specs());
  synchronize(copy);
  return copy;
}

void update_global(GlobalState& g, std::span<const double> grads) { g.update(grads); }

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (double& g : grads) g *= s;
  }
  return norm;
}

// ---- run log ------------------------------------------------------------------

RunLog::RunLog(std::ostream* episodes_csv, std::ostream* updates_csv)
    : episodes_csv_(episodes_csv), updates_csv_(updates_csv) {
  if (episodes_csv_) *episodes_csv_ << kEpisodeCsvHeader << '\n';
  if (updates_csv_) *updates_csv_ << kUpdateCsvHeader << '\n';
}

EpisodeRecord RunLog::record_episode(EpisodeRecord rec) {
  std::lock_guard lock(mu_);
  rec.episode = static_cast<std::int64_t>(episodes_.size());
  episodes_.push_back(rec);
  if (episodes_csv_) {
    *episodes_csv_ << rec.episode << ',' << rec.worker << ',' << rec.steps << ',' << rec.raw_score << ','
                   << rec.clipped_return << ',' << rec.wall_ms << '\n';
  }
  if (stop_pred_ && stop_pred_(episodes_)) stop_.store(true, std::memory_order_relaxed);
  return rec;
}

void RunLog::record_update(const UpdateRecord& rec) {
  std::lock_guard lock(mu_);
  ++updates_;
  const adv::LossParts& l = rec.loss;
  if (!std::isfinite(l.total) || !std::isfinite(l.policy_nat) || !std::isfinite(l.value_nat) ||
      !std::isfinite(l.policy_vis) || !std::isfinite(l.value_vis)) {
    finite_ = false;
  }
  last_loss_ = l;
  if (updates_csv_) {
    *updates_csv_ << rec.update << ',' << rec.T << ',' << std::setprecision(10) << l.total << ',' << l.policy_nat
                  << ',' << l.value_nat << ',' << l.policy_vis << ',' << l.value_vis << '\n';
  }
}

std::vector<EpisodeRecord> RunLog::episodes() const {
  std::lock_guard lock(mu_);
  return episodes_;
}

std::int64_t RunLog::update_count() const {
  std::lock_guard lock(mu_);
  return updates_;
}

bool RunLog::all_losses_finite() const {
  std::lock_guard lock(mu_);
  return finite_;
}

std::optional<adv::LossParts> RunLog::last_loss() const {
  std::lock_guard lock(mu_);
  return last_loss_;
}

void RunLog::set_stop_predicate(std::function<bool(const std::vector<EpisodeRecord>&)> pred) {
  std::lock_guard lock(mu_);
  stop_pred_ = std::move(pred);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over (base, stream)
  std::uint64_t z = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// ---- worker -------------------------------------------------------------------

Worker::Worker(int id, const TrainConfig& cfg, const net::PolicyNet& net, std::chrono::steady_clock::time_point start,
               bool record_wall_time)
    : id_(id),
      cfg_(cfg),
      net_(net),
      local_(net.param_specs()),
      grad_(local_.size(), 0.0),
      rng_(derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(id) + 1)),
      start_(start),
      record_wall_time_(record_wall_time) {
  env::EnvConfig ec = cfg.env;
  ec.seed = derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(id) + 2);
  env_ = env::make_environment(cfg.env_kind, ec);
  lstm_ = net.initial_lstm_state();
}

void Worker::begin_episode() {
  frame_ = env_->reset();
  fp_ = fovea::screen_center();
  lstm_ = net_.initial_lstm_state();
  episode_steps_ = 0;
  episode_score_ = 0;
  episode_return_ = 0.0;
  needs_reset_ = false;
}

adv::RolloutBuffer Worker::collect_rollout(Tape& tape, std::span<const Var> params, std::vector<adv::StepNodes>& nodes,
                                           GlobalState& global, RunLog& log) {
  if (needs_reset_) begin_episode();
  const std::size_t H = lstm_.h.size();
  Var h = tape.constant(lstm_.h, {H});
  Var c = tape.constant(lstm_.c, {H});

  adv::RolloutBuffer buf;
  nodes.clear();
  for (int t = 0; t < cfg_.t_max; ++t) {
    const Frame obs = fovea::apply_roi(frame_, cfg_.roi, fp_);
    env_->observe_focus(fp_);
    const net::StepVars sv = net_.step(tape, params, obs, h, c);
    const int a_nat = net::sample_categorical(tape.value(sv.pi_nat), rng_);
    const int a_vis = net::sample_categorical(tape.value(sv.pi_vis), rng_);

    const env::StepResult res = env_->step(a_nat);
    fp_ = fovea::move_focal_point(fp_, fovea::visual_action_from_index(a_vis), cfg_.gaze_step);

    adv::StepNodes sn;
    sn.v_nat = sv.v_nat;
    sn.v_vis = sv.v_vis;
    sn.log_pi_nat = tape.select(sv.log_pi_nat, static_cast<std::size_t>(a_nat));
    sn.log_pi_vis = tape.select(sv.log_pi_vis, static_cast<std::size_t>(a_vis));
    sn.entropy_nat = adv::entropy_node(tape, sv.pi_nat, sv.log_pi_nat);
    sn.entropy_vis = adv::entropy_node(tape, sv.pi_vis, sv.log_pi_vis);
    nodes.push_back(sn);

    adv::Transition tr;
    tr.a_nat = a_nat;
    tr.a_vis = a_vis;
    tr.reward_next = res.reward;
    tr.v_nat = tape.scalar_value(sv.v_nat);
    tr.v_vis = tape.scalar_value(sv.v_vis);
    tr.log_pi_nat = tape.scalar_value(sn.log_pi_nat);
    tr.log_pi_vis = tape.scalar_value(sn.log_pi_vis);
    tr.entropy_nat = tape.scalar_value(sn.entropy_nat);
    tr.entropy_vis = tape.scalar_value(sn.entropy_vis);
    buf.steps.push_back(tr);

    h = sv.h;
    c = sv.c;
    frame_ = res.frame;
    global.advance(1);
    ++episode_steps_;
    episode_score_ = res.raw_score;
    episode_return_ += res.reward;

    if (res.terminal) {
      buf.terminal = true;
      EpisodeRecord rec;
      rec.worker = id_;
      rec.steps = episode_steps_;
      rec.raw_score = episode_score_;
      rec.clipped_return = episode_return_;
      if (record_wall_time_) {
        rec.wall_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_)
                          .count();
      }
      log.record_episode(rec);
      needs_reset_ = true;
      break;
    }
  }
  buf.link_rewards();

  if (buf.terminal) {
    buf.bootstrap_nat = buf.bootstrap_vis = 0.0;
  } else {
    const auto hv = tape.value(h);
    const auto cv = tape.value(c);
    lstm_.h.assign(hv.begin(), hv.end());
    lstm_.c.assign(cv.begin(), cv.end());
    const net::NetOutput boot = net_.forward(fovea::apply_roi(frame_, cfg_.roi, fp_), lstm_, local_);
    buf.bootstrap_nat = boot.v_nat;
    buf.bootstrap_vis = boot.v_vis;
  }
  return buf;
}

adv::LossParts Worker::run_once(GlobalState& global, RunLog& log) {
  global.synchronize(local_);
  std::fill(grad_.begin(), grad_.end(), 0.0);
  Tape tape;
  const auto params = local_.bind(tape, grad_);
  std::vector<adv::StepNodes> nodes;
  const adv::RolloutBuffer buf = collect_rollout(tape, params, nodes, global, log);
  adv::LossParts parts;
  const Var loss = adv::build_loss(tape, buf, nodes, cfg_.hyper, cfg_.loss, {}, &parts);
  tape.backward(loss);
  if (cfg_.grad_clip > 0.0) clip_grad_norm(grad_, cfg_.grad_clip);
  update_global(global, grad_);
  log.record_update({global.updates(), global.steps(), parts});
  return parts;
}

// ---- training loop ------------------------------------------------------------

namespace {

void checkpoint_to(const std::filesystem::path& dir, const ParamVector& params) {
  if (!dir.empty()) tensor::save_checkpoint(dir / kCheckpointFile, params);
}

}  // namespace

TrainResult run_training(const TrainConfig& cfg, const RunOptions& opts) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const net::PolicyNet net(cfg.net);
  GlobalState global(net.init_params(cfg.seed), cfg.optimizer, cfg.mode);

  std::ofstream episodes_csv, updates_csv;
  if (!opts.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(opts.out_dir, ec);
    if (ec || !std::filesystem::is_directory(opts.out_dir)) {
      throw IoError("cannot create output directory " + opts.out_dir.string());
    }
    episodes_csv.open(opts.out_dir / kEpisodeLogFile);
    updates_csv.open(opts.out_dir / kUpdateLogFile);
    if (!episodes_csv || !updates_csv) throw IoError("cannot write logs in " + opts.out_dir.string());
  }
  RunLog log(opts.out_dir.empty() ? nullptr : &episodes_csv, opts.out_dir.empty() ? nullptr : &updates_csv);
  if (opts.stop_when) log.set_stop_predicate(opts.stop_when);

  // Sequential runs are reproducibility runs: no wall-clock data in the logs.
  const bool wall_time = cfg.mode != TrainMode::kSequential;
  std::vector<std::unique_ptr<Worker>> workers;
  for (int i = 0; i < cfg.workers; ++i) workers.push_back(std::make_unique<Worker>(i, cfg, net, start, wall_time));

  std::mutex checkpoint_mu;
  std::int64_t next_checkpoint = cfg.checkpoint_every;
  auto maybe_checkpoint = [&]() {
    if (cfg.checkpoint_every <= 0 || opts.out_dir.empty()) return;
    std::lock_guard lock(checkpoint_mu);
    if (global.steps() >= next_checkpoint) {
      checkpoint_to(opts.out_dir, global.snapshot());
      while (next_checkpoint <= global.steps()) next_checkpoint += cfg.checkpoint_every;
    }
  };

  std::exception_ptr failure;
  if (cfg.mode == TrainMode::kSequential) {
    try {
      while (global.steps() < cfg.T_max && !log.stop_requested()) {
        for (auto& w : workers) {
          if (global.steps() >= cfg.T_max || log.stop_requested()) break;
          w->run_once(global, log);
          maybe_checkpoint();
        }
      }
    } catch (...) {
      failure = std::current_exception();
    }
  } else {
    std::mutex failure_mu;
    std::vector<std::jthread> threads;
    for (auto& w : workers) {
      threads.emplace_back([&, worker = w.get()]() {
        try {
          while (global.steps() < cfg.T_max && !log.stop_requested()) {
            worker->run_once(global, log);
            maybe_checkpoint();
          }
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
          log.request_stop();
        }
      });
    }
    threads.clear();
  }

  TrainResult result;
  result.params = global.snapshot();
  checkpoint_to(opts.out_dir, result.params);
  if (failure) std::rethrow_exception(failure);

  result.T = global.steps();
  result.updates = global.updates();
  result.episodes = log.episodes();
  result.all_losses_finite = log.all_losses_finite();
  result.stopped_early = log.stop_requested() && result.T < cfg.T_max;
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace fovrl::train
