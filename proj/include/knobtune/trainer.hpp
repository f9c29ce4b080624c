// REINFORCE training loop: batched episode rollouts against a surrogate
// objective, improvement-based rewards, and clipped gradient-ascent updates
// of the policy.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "knobtune/agent.hpp"
#include "knobtune/parallel.hpp"
#include "knobtune/rng.hpp"
#include "knobtune/search_space.hpp"
#include "knobtune/surrogate.hpp"

namespace knobtune {

enum class RewardMode { kTelescoping, kBestImprovement };

struct TrainConfig {
  std::uint64_t episode_length = 50;     // T
  std::uint64_t episodes_per_update = 16;  // B
  std::uint64_t total_updates = 2000;
  double learning_rate = 3e-3;
  double discount = 1.0;  // gamma over inner-loop steps
  RewardMode reward_mode = RewardMode::kTelescoping;
  double baseline_decay = 0.9;
  double entropy_weight = 0.01;  // linearly decayed to 0 over training
  double grad_clip = 5.0;
  int hidden_size = 32;
  StateVariant variant = StateVariant::kRecurrent;
  std::uint64_t seed = 0;
  int jobs = 1;

  void check() const {
    if (episode_length < 1)
      throw std::invalid_argument("train config: episode length must be >= 1");
    if (episodes_per_update < 1)
      throw std::invalid_argument("train config: episodes per update must be >= 1");
    if (learning_rate < 0.0 || !std::isfinite(learning_rate))
      throw std::invalid_argument("train config: bad learning rate");
    if (discount <= 0.0 || discount > 1.0)
      throw std::invalid_argument("train config: discount must be in (0, 1]");
    if (baseline_decay < 0.0 || baseline_decay >= 1.0)
      throw std::invalid_argument("train config: baseline decay must be in [0, 1)");
    if (entropy_weight < 0.0)
      throw std::invalid_argument("train config: entropy weight must be >= 0");
    if (grad_clip <= 0.0)
      throw std::invalid_argument("train config: grad clip must be > 0");
    if (hidden_size < 1)
      throw std::invalid_argument("train config: hidden size must be >= 1");
    if (jobs < 1) throw std::invalid_argument("train config: jobs must be >= 1");
  }
};

struct CurvePoint {
  std::uint64_t update = 0;
  double mean_return = 0.0;
  double mean_best_f = 0.0;
  double seconds = 0.0;
};

using LearningCurve = std::vector<CurvePoint>;

inline double reward(RewardMode mode, double f_t, double f_prev,
                     double best_before_t) {
  if (mode == RewardMode::kTelescoping) return f_t - f_prev;
  return std::max(0.0, f_t - best_before_t);
}

// One episode: T policy steps, T+1 objective evaluations (the initial point
// plus one per step).
inline Trajectory rollout(const PolicyParams& params,
                          const MeteredObjective& obj, std::uint64_t T,
                          const TuningVector& x0, Rng& rng,
                          RewardMode mode = RewardMode::kTelescoping) {
  if (T < 1) throw std::invalid_argument("rollout: episode length must be >= 1");
  const SearchSpace& space = obj.space();
  require_valid(space, x0);

  Trajectory traj;
  traj.initial_x = x0;
  traj.initial_f = obj.eval(x0);
  if (!std::isfinite(traj.initial_f))
    throw std::runtime_error("rollout: non-finite objective value");
  traj.steps.reserve(T);

  AgentState state = AgentState::zero(params.hidden_size);
  TuningVector prev_x = x0;
  double prev_f = traj.initial_f;
  double best = traj.initial_f;

  for (std::uint64_t t = 0; t < T; ++t) {
    Observation obs;
    obs.prev_x_normalized = normalize(space, prev_x);
    obs.prev_f_standardized = params.f_stat.standardize(prev_f);
    auto [dist, next_state] = policy_step(params, state, obs);
    state = std::move(next_state);
    SampledAction act = sample_action(dist, space, rng);

    TrajectoryStep step;
    step.obs = std::move(obs);
    step.raw = std::move(act.raw);
    step.x = act.x;
    step.f = obj.eval(act.x);
    if (!std::isfinite(step.f))
      throw std::runtime_error("rollout: non-finite objective value");
    step.log_prob = act.log_prob;
    step.reward = reward(mode, step.f, prev_f, best);
    prev_x = act.x;
    prev_f = step.f;
    best = std::max(best, step.f);
    traj.steps.push_back(std::move(step));
  }
  return traj;
}

inline std::vector<double> returns_and_advantages(const Trajectory& traj,
                                                  double gamma,
                                                  double baseline) {
  if (traj.steps.empty())
    throw std::invalid_argument("returns_and_advantages: empty trajectory");
  std::vector<double> adv(traj.steps.size());
  double running = 0.0;
  for (std::size_t i = traj.steps.size(); i-- > 0;) {
    running = traj.steps[i].reward + gamma * running;
    adv[i] = running - baseline;
  }
  return adv;
}

inline double episode_return(const Trajectory& traj, double gamma) {
  double running = 0.0;
  for (std::size_t i = traj.steps.size(); i-- > 0;)
    running = traj.steps[i].reward + gamma * running;
  return running;
}

inline double episode_best_f(const Trajectory& traj) {
  double best = traj.initial_f;
  for (const TrajectoryStep& s : traj.steps) best = std::max(best, s.f);
  return best;
}

struct UpdateStats {
  double mean_return = 0.0;
  double mean_best_f = 0.0;
  double grad_norm = 0.0;  // before clipping
  double baseline_used = 0.0;
  double entropy_weight_used = 0.0;
};

// One REINFORCE step over a batch of trajectories. `baseline` is the
// exponentially-weighted moving average of batch mean returns: it is read
// for this batch's advantages, then updated in place. Ascends in place.
inline UpdateStats reinforce_update(PolicyParams& params,
                                    const std::vector<Trajectory>& batch,
                                    const TrainConfig& config,
                                    double entropy_weight, double& baseline) {
  if (batch.empty())
    throw std::invalid_argument("reinforce_update: empty batch");

  UpdateStats stats;
  stats.baseline_used = baseline;
  stats.entropy_weight_used = entropy_weight;

  PolicyParams grad = zeros_like(params);
  double sum_return = 0.0;
  double sum_best = 0.0;
  for (const Trajectory& traj : batch) {
    const std::vector<double> adv =
        returns_and_advantages(traj, config.discount, baseline);
    axpy_params(1.0, trajectory_grad(params, traj, adv, entropy_weight), grad);
    sum_return += episode_return(traj, config.discount);
    sum_best += episode_best_f(traj);
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  scale_params(grad, inv_b);
  stats.mean_return = sum_return * inv_b;
  stats.mean_best_f = sum_best * inv_b;

  const double norm = global_norm(grad);
  if (!std::isfinite(norm))
    throw std::runtime_error("reinforce_update: non-finite gradient (norm=" +
                             std::to_string(norm) + ")");
  stats.grad_norm = norm;
  if (norm > config.grad_clip) scale_params(grad, config.grad_clip / norm);

  axpy_params(config.learning_rate, grad, params);
  baseline = config.baseline_decay * baseline +
             (1.0 - config.baseline_decay) * stats.mean_return;
  return stats;
}

struct TrainResult {
  PolicyParams best_params;   // checkpoint with the highest mean best-f
  PolicyParams final_params;  // parameters after the last update
  LearningCurve curve;
};

// The outer loop: per update, B episodes from fresh uniform starting points
// (concurrently, with per-episode RNG streams derived from the master seed so
// results are independent of scheduling), then one REINFORCE step. The
// objective-value standardizer is frozen while a batch runs and folds the
// batch's observations in at the barrier.
inline TrainResult train(const SearchSpace& space, const MeteredObjective& metered,
                         const TrainConfig& config) {
  config.check();
  if (space.dimension() != metered.space().dimension())
    throw std::invalid_argument("train: space/objective dimension mismatch");

  Rng init_rng(derive_seed(config.seed, stream::kAgentInit, 0, 0));
  PolicyParams params = init_policy(space, config.hidden_size, config.variant,
                                    init_rng);

  TrainResult result;
  result.best_params = params;
  double best_score = -std::numeric_limits<double>::infinity();
  double baseline = 0.0;

  const std::uint64_t B = config.episodes_per_update;
  for (std::uint64_t u = 0; u < config.total_updates; ++u) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<Trajectory> batch(B);
    parallel_for(B, config.jobs, [&](std::size_t i) {
      Rng rng(derive_seed(config.seed, stream::kRollout, u, i));
      const TuningVector x0 = sample_uniform(space, rng);
      batch[i] = rollout(params, metered, config.episode_length, x0, rng,
                         config.reward_mode);
    });

    // The batch scores the parameters that generated it, so the best-so-far
    // checkpoint snapshots before the update step (standardizer included).
    double mean_best = 0.0;
    for (const Trajectory& traj : batch) mean_best += episode_best_f(traj);
    mean_best /= static_cast<double>(B);
    if (mean_best > best_score) {
      best_score = mean_best;
      result.best_params = params;
    }

    const double frac =
        static_cast<double>(u) / static_cast<double>(config.total_updates);
    const double entropy_weight = config.entropy_weight * (1.0 - frac);
    const UpdateStats stats =
        reinforce_update(params, batch, config, entropy_weight, baseline);

    for (const Trajectory& traj : batch) {
      params.f_stat.add(traj.initial_f);
      for (const TrajectoryStep& s : traj.steps) params.f_stat.add(s.f);
    }

    const std::chrono::duration<double> dt =
        std::chrono::steady_clock::now() - t0;
    result.curve.push_back(CurvePoint{u, stats.mean_return, stats.mean_best_f,
                                      dt.count()});
  }
  result.final_params = std::move(params);
  return result;
}

inline TrainResult train(const SearchSpace& space, const SurrogateObjective& obj,
                         const TrainConfig& config) {
  obj.check();
  if (&space != &obj.space && space.dimension() != obj.space.dimension())
    throw std::invalid_argument("train: space/objective dimension mismatch");
  const MeteredObjective metered(obj);
  return train(space, metered, config);
}

}  // namespace knobtune
