// The learned optimizer: a two-layer LSTM policy over the knob space with
// per-knob heads (categorical over integer ranges, bounded Gaussian for
// continuous knobs) and exact reverse-mode gradients of action
// log-probabilities through time.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "knobtune/rng.hpp"
#include "knobtune/search_space.hpp"

namespace knobtune {

constexpr double kLogStdMin = -5.0;
constexpr double kLogStdMax = 2.0;

// One LSTM layer. Gate order everywhere: input, forget, cell candidate,
// output.
struct LstmLayerParams {
  Eigen::MatrixXd w_in, w_forget, w_cell, w_out;  // [H x in]
  Eigen::MatrixXd u_in, u_forget, u_cell, u_out;  // [H x H]
  Eigen::VectorXd b_in, b_forget, b_cell, b_out;  // [H]
};

struct HeadParams {
  KnobKind kind = KnobKind::kInteger;
  Eigen::MatrixXd weight;  // [out x H]; out = range size or 2 (mean, log-std)
  Eigen::VectorXd bias;
};

enum class StateVariant { kRecurrent, kMemoryless };

// Welford running statistics for standardizing objective values fed to the
// policy. Updated during training, frozen at deployment.
struct RunningStat {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    count += 1.0;
    const double delta = v - mean;
    mean += delta / count;
    m2 += delta * (v - mean);
  }
  double stddev() const {
    if (count < 2.0) return 1.0;
    return std::max(std::sqrt(m2 / count), 1e-8);
  }
  double standardize(double v) const { return (v - mean) / stddev(); }
};

struct PolicyParams {
  int hidden_size = 0;
  int obs_dim = 0;  // D + 1
  StateVariant variant = StateVariant::kRecurrent;
  LstmLayerParams lstm1, lstm2;
  std::vector<HeadParams> heads;
  RunningStat f_stat;
};

struct AgentState {
  Eigen::VectorXd h1, c1, h2, c2;

  static AgentState zero(int hidden_size) {
    AgentState s;
    s.h1 = Eigen::VectorXd::Zero(hidden_size);
    s.c1 = Eigen::VectorXd::Zero(hidden_size);
    s.h2 = Eigen::VectorXd::Zero(hidden_size);
    s.c2 = Eigen::VectorXd::Zero(hidden_size);
    return s;
  }
};

struct Observation {
  std::vector<double> prev_x_normalized;
  double prev_f_standardized = 0.0;
};

struct KnobDistribution {
  KnobKind kind = KnobKind::kInteger;
  Eigen::VectorXd logits;  // integer knobs
  double mean = 0.0;       // continuous knobs, pre-squash
  double log_std = 0.0;    // already clamped to [kLogStdMin, kLogStdMax]
};

struct ActionDistribution {
  std::vector<KnobDistribution> knobs;
};

// Parameter traversal in a fixed order; the basis for updates, clipping,
// serialization, and the finite-difference oracle in the tests.
template <class Params, class F>
void visit_params(Params& p, F&& f) {
  auto layer = [&f](auto& l) {
    f(l.w_in);
    f(l.w_forget);
    f(l.w_cell);
    f(l.w_out);
    f(l.u_in);
    f(l.u_forget);
    f(l.u_cell);
    f(l.u_out);
    f(l.b_in);
    f(l.b_forget);
    f(l.b_cell);
    f(l.b_out);
  };
  layer(p.lstm1);
  layer(p.lstm2);
  for (auto& head : p.heads) {
    f(head.weight);
    f(head.bias);
  }
}

inline std::size_t param_count(const PolicyParams& p) {
  std::size_t n = 0;
  visit_params(p, [&n](const auto& block) { n += static_cast<std::size_t>(block.size()); });
  return n;
}

inline std::vector<double*> param_blocks_flat(PolicyParams& p) {
  std::vector<double*> ptrs;
  visit_params(p, [&ptrs](auto& block) {
    for (long i = 0; i < block.size(); ++i) ptrs.push_back(block.data() + i);
  });
  return ptrs;
}

// grad structure shaped like PolicyParams, all zeros.
inline PolicyParams zeros_like(const PolicyParams& p) {
  PolicyParams g = p;
  visit_params(g, [](auto& block) { block.setZero(); });
  g.f_stat = RunningStat{};
  return g;
}

inline void axpy_params(double alpha, const PolicyParams& x, PolicyParams& y) {
  auto add = [alpha](const auto& src, auto& dst) { dst += alpha * src; };
  // Walk both structures in lockstep.
  add(x.lstm1.w_in, y.lstm1.w_in);
  add(x.lstm1.w_forget, y.lstm1.w_forget);
  add(x.lstm1.w_cell, y.lstm1.w_cell);
  add(x.lstm1.w_out, y.lstm1.w_out);
  add(x.lstm1.u_in, y.lstm1.u_in);
  add(x.lstm1.u_forget, y.lstm1.u_forget);
  add(x.lstm1.u_cell, y.lstm1.u_cell);
  add(x.lstm1.u_out, y.lstm1.u_out);
  add(x.lstm1.b_in, y.lstm1.b_in);
  add(x.lstm1.b_forget, y.lstm1.b_forget);
  add(x.lstm1.b_cell, y.lstm1.b_cell);
  add(x.lstm1.b_out, y.lstm1.b_out);
  add(x.lstm2.w_in, y.lstm2.w_in);
  add(x.lstm2.w_forget, y.lstm2.w_forget);
  add(x.lstm2.w_cell, y.lstm2.w_cell);
  add(x.lstm2.w_out, y.lstm2.w_out);
  add(x.lstm2.u_in, y.lstm2.u_in);
  add(x.lstm2.u_forget, y.lstm2.u_forget);
  add(x.lstm2.u_cell, y.lstm2.u_cell);
  add(x.lstm2.u_out, y.lstm2.u_out);
  add(x.lstm2.b_in, y.lstm2.b_in);
  add(x.lstm2.b_forget, y.lstm2.b_forget);
  add(x.lstm2.b_cell, y.lstm2.b_cell);
  add(x.lstm2.b_out, y.lstm2.b_out);
  for (std::size_t i = 0; i < x.heads.size(); ++i) {
    add(x.heads[i].weight, y.heads[i].weight);
    add(x.heads[i].bias, y.heads[i].bias);
  }
}

inline void scale_params(PolicyParams& p, double alpha) {
  visit_params(p, [alpha](auto& block) { block *= alpha; });
}

inline double global_norm(const PolicyParams& p) {
  double sq = 0.0;
  visit_params(p, [&sq](const auto& block) { sq += block.squaredNorm(); });
  return std::sqrt(sq);
}

// Weights uniform in [-1/sqrt(H), +1/sqrt(H)], forget-gate bias 1, all
// other biases 0. Fill order is fixed so the result is seed-reproducible.
inline PolicyParams init_policy(const SearchSpace& space, int hidden_size,
                                StateVariant variant, Rng& rng) {
  if (hidden_size < 1)
    throw std::invalid_argument("init_policy: hidden size must be >= 1");
  PolicyParams p;
  p.hidden_size = hidden_size;
  p.obs_dim = static_cast<int>(space.dimension()) + 1;
  p.variant = variant;

  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden_size));
  auto fill = [&rng, bound](Eigen::MatrixXd& m, int rows, int cols) {
    m.resize(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-bound, bound);
  };
  auto init_layer = [&](LstmLayerParams& l, int in_dim) {
    fill(l.w_in, hidden_size, in_dim);
    fill(l.w_forget, hidden_size, in_dim);
    fill(l.w_cell, hidden_size, in_dim);
    fill(l.w_out, hidden_size, in_dim);
    fill(l.u_in, hidden_size, hidden_size);
    fill(l.u_forget, hidden_size, hidden_size);
    fill(l.u_cell, hidden_size, hidden_size);
    fill(l.u_out, hidden_size, hidden_size);
    l.b_in = Eigen::VectorXd::Zero(hidden_size);
    l.b_forget = Eigen::VectorXd::Constant(hidden_size, 1.0);
    l.b_cell = Eigen::VectorXd::Zero(hidden_size);
    l.b_out = Eigen::VectorXd::Zero(hidden_size);
  };
  init_layer(p.lstm1, p.obs_dim);
  init_layer(p.lstm2, hidden_size);

  for (const KnobSpec& knob : space.knobs()) {
    HeadParams head;
    head.kind = knob.kind;
    const int out = knob.kind == KnobKind::kInteger
                        ? static_cast<int>(knob.range_size())
                        : 2;
    fill(head.weight, out, hidden_size);
    head.bias = Eigen::VectorXd::Zero(out);
    p.heads.push_back(std::move(head));
  }
  return p;
}

namespace detail {

template <typename Derived>
Eigen::ArrayXd sigmoid(const Eigen::ArrayBase<Derived>& a) {
  return 1.0 / (1.0 + (-a).exp());
}

// Gate activations and state for one cell step; enough to run the policy.
struct LstmCore {
  Eigen::ArrayXd gi, gf, gc, go;  // post-activation gates
  Eigen::ArrayXd c, tanh_c;
  Eigen::VectorXd h;
};

inline LstmCore lstm_core(const LstmLayerParams& p, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& h_prev,
                          const Eigen::VectorXd& c_prev) {
  LstmCore s;
  Eigen::VectorXd a = p.b_in;
  a.noalias() += p.w_in * x;
  a.noalias() += p.u_in * h_prev;
  s.gi = sigmoid(a.array());
  a = p.b_forget;
  a.noalias() += p.w_forget * x;
  a.noalias() += p.u_forget * h_prev;
  s.gf = sigmoid(a.array());
  a = p.b_cell;
  a.noalias() += p.w_cell * x;
  a.noalias() += p.u_cell * h_prev;
  s.gc = a.array().tanh();
  a = p.b_out;
  a.noalias() += p.w_out * x;
  a.noalias() += p.u_out * h_prev;
  s.go = sigmoid(a.array());
  s.c = s.gf * c_prev.array() + s.gi * s.gc;
  s.tanh_c = s.c.tanh();
  s.h = (s.go * s.tanh_c).matrix();
  return s;
}

// Core plus the step inputs, kept only where a backward pass will need them.
struct LstmStepCache {
  Eigen::VectorXd x, h_prev, c_prev;
  Eigen::ArrayXd gi, gf, gc, go;  // post-activation gates
  Eigen::ArrayXd c, tanh_c;
  Eigen::VectorXd h;
};

inline LstmStepCache lstm_step(const LstmLayerParams& p,
                               const Eigen::VectorXd& x,
                               const Eigen::VectorXd& h_prev,
                               const Eigen::VectorXd& c_prev) {
  LstmCore core = lstm_core(p, x, h_prev, c_prev);
  LstmStepCache s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  s.gi = std::move(core.gi);
  s.gf = std::move(core.gf);
  s.gc = std::move(core.gc);
  s.go = std::move(core.go);
  s.c = std::move(core.c);
  s.tanh_c = std::move(core.tanh_c);
  s.h = std::move(core.h);
  return s;
}

// Reverse of one lstm_step. dh/dc_in arrive from the step's consumers and
// from step t+1; returns adjoints for the step inputs and accumulates
// parameter gradients into `grad`.
struct LstmBackResult {
  Eigen::VectorXd dx, dh_prev, dc_prev;
};

inline LstmBackResult lstm_backward(const LstmLayerParams& p,
                                    const LstmStepCache& s,
                                    const Eigen::VectorXd& dh,
                                    const Eigen::VectorXd& dc_in,
                                    LstmLayerParams& grad) {
  const Eigen::ArrayXd d_go = dh.array() * s.tanh_c;
  const Eigen::ArrayXd dc =
      dc_in.array() + dh.array() * s.go * (1.0 - s.tanh_c.square());
  const Eigen::ArrayXd d_gi = dc * s.gc;
  const Eigen::ArrayXd d_gc = dc * s.gi;
  const Eigen::ArrayXd d_gf = dc * s.c_prev.array();

  const Eigen::VectorXd da_i = (d_gi * s.gi * (1.0 - s.gi)).matrix();
  const Eigen::VectorXd da_f = (d_gf * s.gf * (1.0 - s.gf)).matrix();
  const Eigen::VectorXd da_c = (d_gc * (1.0 - s.gc.square())).matrix();
  const Eigen::VectorXd da_o = (d_go * s.go * (1.0 - s.go)).matrix();

  grad.w_in.noalias() += da_i * s.x.transpose();
  grad.w_forget.noalias() += da_f * s.x.transpose();
  grad.w_cell.noalias() += da_c * s.x.transpose();
  grad.w_out.noalias() += da_o * s.x.transpose();
  grad.u_in.noalias() += da_i * s.h_prev.transpose();
  grad.u_forget.noalias() += da_f * s.h_prev.transpose();
  grad.u_cell.noalias() += da_c * s.h_prev.transpose();
  grad.u_out.noalias() += da_o * s.h_prev.transpose();
  grad.b_in += da_i;
  grad.b_forget += da_f;
  grad.b_cell += da_c;
  grad.b_out += da_o;

  LstmBackResult r;
  r.dx = p.w_in.transpose() * da_i + p.w_forget.transpose() * da_f +
         p.w_cell.transpose() * da_c + p.w_out.transpose() * da_o;
  r.dh_prev = p.u_in.transpose() * da_i + p.u_forget.transpose() * da_f +
              p.u_cell.transpose() * da_c + p.u_out.transpose() * da_o;
  r.dc_prev = (dc * s.gf).matrix();
  return r;
}

inline Eigen::VectorXd observation_input(const PolicyParams& p,
                                         const Observation& obs) {
  if (static_cast<int>(obs.prev_x_normalized.size()) + 1 != p.obs_dim)
    throw std::invalid_argument("observation dimension mismatch");
  Eigen::VectorXd x(p.obs_dim);
  for (std::size_t i = 0; i < obs.prev_x_normalized.size(); ++i)
    x(static_cast<long>(i)) = obs.prev_x_normalized[i];
  x(p.obs_dim - 1) = obs.prev_f_standardized;
  return x;
}

inline ActionDistribution heads_forward(const PolicyParams& p,
                                        const Eigen::VectorXd& h2) {
  ActionDistribution dist;
  dist.knobs.reserve(p.heads.size());
  for (const HeadParams& head : p.heads) {
    KnobDistribution kd;
    kd.kind = head.kind;
    Eigen::VectorXd out = head.bias;
    out.noalias() += head.weight * h2;
    if (head.kind == KnobKind::kInteger) {
      kd.logits = out;
    } else {
      kd.mean = out(0);
      kd.log_std = std::clamp(out(1), kLogStdMin, kLogStdMax);
    }
    dist.knobs.push_back(std::move(kd));
  }
  return dist;
}

inline Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

struct EpisodeForward {
  std::vector<LstmStepCache> layer1, layer2;
  std::vector<ActionDistribution> dists;
  // pre-clamp log-std per (step, knob); empty vectors for integer knobs
  std::vector<std::vector<double>> raw_log_std;
};

}  // namespace detail

// One policy evaluation: observation through both LSTM layers, then the
// per-knob heads on the top hidden vector. In the memoryless variant the
// incoming recurrent state is ignored (treated as zero).
inline std::pair<ActionDistribution, AgentState> policy_step(
    const PolicyParams& params, const AgentState& state,
    const Observation& obs) {
  const Eigen::VectorXd x = detail::observation_input(params, obs);
  const bool memoryless = params.variant == StateVariant::kMemoryless;
  Eigen::VectorXd zero;
  if (memoryless) zero = Eigen::VectorXd::Zero(params.hidden_size);

  const detail::LstmCore s1 = detail::lstm_core(
      params.lstm1, x, memoryless ? zero : state.h1, memoryless ? zero : state.c1);
  const detail::LstmCore s2 = detail::lstm_core(
      params.lstm2, s1.h, memoryless ? zero : state.h2,
      memoryless ? zero : state.c2);

  if (!s1.h.allFinite() || !s2.h.allFinite())
    throw std::runtime_error("policy_step: non-finite hidden state");
  ActionDistribution dist = detail::heads_forward(params, s2.h);
  for (const auto& kd : dist.knobs) {
    const bool finite = kd.kind == KnobKind::kInteger
                            ? kd.logits.allFinite()
                            : (std::isfinite(kd.mean) && std::isfinite(kd.log_std));
    if (!finite) throw std::runtime_error("policy_step: non-finite distribution");
  }

  AgentState next;
  next.h1 = s1.h;
  next.c1 = s1.c.matrix();
  next.h2 = s2.h;
  next.c2 = s2.c.matrix();
  return {std::move(dist), std::move(next)};
}

struct SampledAction {
  TuningVector x;
  std::vector<double> raw;  // categorical index / pre-squash Gaussian draw
  double log_prob = 0.0;
};

// Log mass (integer knobs) or log density of the raw Gaussian draw
// (continuous knobs) for a stored raw action.
inline double log_prob_of(const ActionDistribution& dist,
                          const std::vector<double>& raw) {
  if (raw.size() != dist.knobs.size())
    throw std::invalid_argument("log_prob_of: raw action size mismatch");
  double lp = 0.0;
  for (std::size_t i = 0; i < dist.knobs.size(); ++i) {
    const KnobDistribution& kd = dist.knobs[i];
    if (kd.kind == KnobKind::kInteger) {
      const Eigen::VectorXd ls = detail::log_softmax(kd.logits);
      lp += ls(static_cast<long>(raw[i]));
    } else {
      const double sd = std::exp(kd.log_std);
      const double z = (raw[i] - kd.mean) / sd;
      lp += -0.5 * z * z - kd.log_std - 0.5 * std::log(2.0 * std::numbers::pi);
    }
  }
  return lp;
}

inline SampledAction sample_action(const ActionDistribution& dist,
                                   const SearchSpace& space, Rng& rng) {
  if (dist.knobs.size() != space.dimension())
    throw std::invalid_argument("sample_action: distribution/space mismatch");
  SampledAction act;
  act.raw.resize(dist.knobs.size());
  std::vector<double> y(dist.knobs.size(), 0.0);
  for (std::size_t i = 0; i < dist.knobs.size(); ++i) {
    const KnobDistribution& kd = dist.knobs[i];
    const KnobSpec& knob = space.knob(i);
    if (kd.kind == KnobKind::kInteger) {
      const Eigen::VectorXd ls = detail::log_softmax(kd.logits);
      const double u = rng.uniform01();
      double cum = 0.0;
      long k = ls.size() - 1;
      for (long j = 0; j < ls.size(); ++j) {
        cum += std::exp(ls(j));
        if (u < cum) {
          k = j;
          break;
        }
      }
      act.raw[i] = static_cast<double>(k);
      // map through the normalized representation so bounds handling is
      // uniform across knob kinds
      y[i] = 2.0 * static_cast<double>(k) / (knob.upper - knob.lower) - 1.0;
    } else {
      const double u = rng.normal(kd.mean, std::exp(kd.log_std));
      act.raw[i] = u;
      y[i] = std::tanh(u);
    }
  }
  act.x = denormalize(space, y);
  act.log_prob = log_prob_of(dist, act.raw);
  return act;
}

// Deterministic deployment action: argmax per categorical knob (ties to the
// lower index), squashed mean per continuous knob.
inline TuningVector greedy_action(const ActionDistribution& dist,
                                  const SearchSpace& space) {
  if (dist.knobs.size() != space.dimension())
    throw std::invalid_argument("greedy_action: distribution/space mismatch");
  std::vector<double> y(dist.knobs.size(), 0.0);
  for (std::size_t i = 0; i < dist.knobs.size(); ++i) {
    const KnobDistribution& kd = dist.knobs[i];
    const KnobSpec& knob = space.knob(i);
    if (kd.kind == KnobKind::kInteger) {
      long best = 0;
      for (long j = 1; j < kd.logits.size(); ++j)
        if (kd.logits(j) > kd.logits(best)) best = j;
      y[i] = 2.0 * static_cast<double>(best) / (knob.upper - knob.lower) - 1.0;
    } else {
      y[i] = std::tanh(kd.mean);
    }
  }
  return denormalize(space, y);
}

// One inner-loop episode. Stored observations and raw samples are enough to
// replay the forward pass exactly, which is what the gradient needs.
struct TrajectoryStep {
  Observation obs;
  std::vector<double> raw;
  TuningVector x;
  double f = 0.0;
  double log_prob = 0.0;
  double reward = 0.0;
};

struct Trajectory {
  TuningVector initial_x;
  double initial_f = 0.0;
  std::vector<TrajectoryStep> steps;
};

namespace detail {

inline EpisodeForward replay_forward(const PolicyParams& params,
                                     const Trajectory& traj) {
  EpisodeForward fwd;
  const bool memoryless = params.variant == StateVariant::kMemoryless;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(params.hidden_size);
  Eigen::VectorXd h1 = zero, c1 = zero, h2 = zero, c2 = zero;
  for (const TrajectoryStep& step : traj.steps) {
    const Eigen::VectorXd x = observation_input(params, step.obs);
    LstmStepCache s1 =
        lstm_step(params.lstm1, x, memoryless ? zero : h1, memoryless ? zero : c1);
    LstmStepCache s2 = lstm_step(params.lstm2, s1.h, memoryless ? zero : h2,
                                 memoryless ? zero : c2);
    h1 = s1.h;
    c1 = s1.c.matrix();
    h2 = s2.h;
    c2 = s2.c.matrix();

    ActionDistribution dist;
    std::vector<double> raw_ls;
    dist.knobs.reserve(params.heads.size());
    for (const HeadParams& head : params.heads) {
      KnobDistribution kd;
      kd.kind = head.kind;
      const Eigen::VectorXd out = head.weight * h2 + head.bias;
      if (head.kind == KnobKind::kInteger) {
        kd.logits = out;
        raw_ls.push_back(0.0);
      } else {
        kd.mean = out(0);
        kd.log_std = std::clamp(out(1), kLogStdMin, kLogStdMax);
        raw_ls.push_back(out(1));
      }
      dist.knobs.push_back(std::move(kd));
    }
    fwd.layer1.push_back(std::move(s1));
    fwd.layer2.push_back(std::move(s2));
    fwd.dists.push_back(std::move(dist));
    fwd.raw_log_std.push_back(std::move(raw_ls));
  }
  return fwd;
}

inline double knob_entropy(const KnobDistribution& kd) {
  if (kd.kind == KnobKind::kInteger) {
    const Eigen::VectorXd ls = log_softmax(kd.logits);
    const Eigen::ArrayXd p = ls.array().exp();
    return -(p * ls.array()).sum();
  }
  return kd.log_std + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
}

}  // namespace detail

// Scalar objective the policy gradient ascends for one episode:
//   sum_t advantage_t * log pi(a_t | s_t) + entropy_weight * H(pi(.|s_t)).
// Shared by the analytic gradient below and the finite-difference checks.
inline double trajectory_objective(const PolicyParams& params,
                                   const Trajectory& traj,
                                   const std::vector<double>& advantages,
                                   double entropy_weight = 0.0) {
  if (advantages.size() != traj.steps.size())
    throw std::invalid_argument("trajectory_objective: advantage count mismatch");
  const detail::EpisodeForward fwd = detail::replay_forward(params, traj);
  double total = 0.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    total += advantages[t] * log_prob_of(fwd.dists[t], traj.steps[t].raw);
    if (entropy_weight != 0.0) {
      for (const auto& kd : fwd.dists[t].knobs)
        total += entropy_weight * detail::knob_entropy(kd);
    }
  }
  return total;
}

// Exact gradient of trajectory_objective with respect to params:
// backpropagation through time across both layers and all heads.
inline PolicyParams trajectory_grad(const PolicyParams& params,
                                    const Trajectory& traj,
                                    const std::vector<double>& advantages,
                                    double entropy_weight = 0.0) {
  if (advantages.size() != traj.steps.size())
    throw std::invalid_argument("trajectory_grad: advantage count mismatch");
  PolicyParams grad = zeros_like(params);
  if (traj.steps.empty()) return grad;
  for (const TrajectoryStep& step : traj.steps)
    if (step.raw.size() != params.heads.size())
      throw std::invalid_argument("trajectory_grad: trajectory/params mismatch");

  const detail::EpisodeForward fwd = detail::replay_forward(params, traj);
  const bool memoryless = params.variant == StateVariant::kMemoryless;
  const long T = static_cast<long>(traj.steps.size());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(params.hidden_size);

  Eigen::VectorXd dh1_next = zero, dc1_next = zero;
  Eigen::VectorXd dh2_next = zero, dc2_next = zero;

  for (long t = T - 1; t >= 0; --t) {
    const ActionDistribution& dist = fwd.dists[t];
    const double adv = advantages[t];
    Eigen::VectorXd dh2 = dh2_next;

    for (std::size_t k = 0; k < params.heads.size(); ++k) {
      const HeadParams& head = params.heads[k];
      HeadParams& ghead = grad.heads[k];
      const KnobDistribution& kd = dist.knobs[k];
      Eigen::VectorXd dout;
      if (kd.kind == KnobKind::kInteger) {
        const Eigen::VectorXd ls = detail::log_softmax(kd.logits);
        const Eigen::ArrayXd p = ls.array().exp();
        const long sampled = static_cast<long>(traj.steps[t].raw[k]);
        // d log p(sampled) / d logits = onehot - p
        dout = (-adv * p).matrix();
        dout(sampled) += adv;
        if (entropy_weight != 0.0) {
          const double ent = -(p * ls.array()).sum();
          dout -= (entropy_weight * (p * (ls.array() + ent))).matrix();
        }
      } else {
        const double raw_ls = fwd.raw_log_std[t][k];
        const bool pass = raw_ls > kLogStdMin && raw_ls < kLogStdMax;
        const double sd = std::exp(kd.log_std);
        const double z = (traj.steps[t].raw[k] - kd.mean) / sd;
        dout.resize(2);
        dout(0) = adv * z / sd;
        dout(1) = pass ? adv * (z * z - 1.0) + entropy_weight : 0.0;
      }
      ghead.weight.noalias() += dout * fwd.layer2[t].h.transpose();
      ghead.bias += dout;
      dh2.noalias() += head.weight.transpose() * dout;
    }

    const detail::LstmBackResult back2 = detail::lstm_backward(
        params.lstm2, fwd.layer2[t], dh2, dc2_next, grad.lstm2);
    const Eigen::VectorXd dh1 = dh1_next + back2.dx;
    const detail::LstmBackResult back1 = detail::lstm_backward(
        params.lstm1, fwd.layer1[t], dh1, dc1_next, grad.lstm1);

    if (memoryless) {
      dh1_next = zero;
      dc1_next = zero;
      dh2_next = zero;
      dc2_next = zero;
    } else {
      dh1_next = back1.dh_prev;
      dc1_next = back1.dc_prev;
      dh2_next = back2.dh_prev;
      dc2_next = back2.dc_prev;
    }
  }
  return grad;
}

}  // namespace knobtune
