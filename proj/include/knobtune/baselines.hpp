// Classical optimizers the learned tuner is compared against: Powell's
// direction-set method, a per-knob Tree-structured Parzen Estimator, and
// uniform random search. All observe the objective through MeteredObjective
// and record a full evaluation trace.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "knobtune/rng.hpp"
#include "knobtune/search_space.hpp"
#include "knobtune/surrogate.hpp"

namespace knobtune {

// Evaluation cap for the tolerance-stopped Powell variant.
constexpr std::uint64_t kPowellSafetyLimit = 10000;

struct TracePoint {
  std::uint64_t index = 0;  // 0-based evaluation index within the run
  double f = 0.0;
};

struct OptimizationResult {
  TuningVector best_x;
  double best_f = -std::numeric_limits<double>::infinity();
  std::uint64_t evaluations = 0;
  double seconds = 0.0;  // filled by callers that time the run
  std::vector<TracePoint> trace;
};

struct BaselineBudget {
  std::uint64_t max_evaluations = 1;
  double tolerance = 1e-8;

  void check() const {
    if (max_evaluations < 1)
      throw std::invalid_argument("budget: max evaluations must be >= 1");
    if (!(tolerance >= 0.0))
      throw std::invalid_argument("budget: tolerance must be >= 0");
  }
};

namespace detail {

// Thrown internally when a run has spent its evaluation budget; optimizers
// catch it and return the incumbent.
struct BudgetSpent {};

class BudgetedEval {
 public:
  BudgetedEval(const MeteredObjective& obj, std::uint64_t max_evals,
               OptimizationResult& result)
      : obj_(obj), max_evals_(max_evals), result_(result) {}

  double operator()(const TuningVector& x) {
    if (result_.evaluations >= max_evals_) throw BudgetSpent{};
    const double f = obj_.eval(x);
    result_.trace.push_back(TracePoint{result_.evaluations, f});
    ++result_.evaluations;
    if (f > result_.best_f) {
      result_.best_f = f;
      result_.best_x = x;
    }
    return f;
  }

  std::uint64_t remaining() const { return max_evals_ - result_.evaluations; }

 private:
  const MeteredObjective& obj_;
  std::uint64_t max_evals_;
  OptimizationResult& result_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Powell's method
// ---------------------------------------------------------------------------
//
// Maximizes f by minimizing -f over the continuous relaxation of the
// normalized cube [-1,1]^D; integer knobs are rounded when each point is
// denormalized for evaluation. Line minimization is bounded golden-section;
// after each sweep the direction of largest decrease is replaced by the net
// displacement.
inline OptimizationResult powell(const MeteredObjective& obj,
                                 const TuningVector& x0,
                                 const BaselineBudget& budget) {
  budget.check();
  const SearchSpace& space = obj.space();
  require_valid(space, x0);
  const std::size_t D = space.dimension();

  OptimizationResult result;
  detail::BudgetedEval eval(obj, budget.max_evaluations, result);
  auto phi = [&](const std::vector<double>& y) {
    return -eval(denormalize(space, y));
  };

  // Golden-section minimization of phi along y + t*d, t in [t_lo, t_hi].
  // Returns the best evaluated (t, phi) pair; never interpolates, so the
  // value at the returned point is known without a re-evaluation.
  constexpr double kInvPhi = 0.6180339887498949;   // (sqrt(5)-1)/2
  constexpr double kInvPhi2 = 0.3819660112501051;  // 1 - kInvPhi
  constexpr double kLineTol = 1e-8;
  auto line_search = [&](const std::vector<double>& y,
                         const std::vector<double>& d, double& best_t,
                         double& best_phi) {
    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < D; ++i) {
      if (d[i] == 0.0) continue;
      const double a = (-1.0 - y[i]) / d[i];
      const double b = (1.0 - y[i]) / d[i];
      t_lo = std::max(t_lo, std::min(a, b));
      t_hi = std::min(t_hi, std::max(a, b));
    }
    best_t = 0.0;
    best_phi = std::numeric_limits<double>::infinity();
    if (!std::isfinite(t_lo) || !std::isfinite(t_hi) || t_hi - t_lo < kLineTol)
      return;
    auto at = [&](double t) {
      std::vector<double> p(D);
      for (std::size_t i = 0; i < D; ++i)
        p[i] = std::clamp(y[i] + t * d[i], -1.0, 1.0);
      return phi(p);
    };
    double a = t_lo, b = t_hi;
    double c = a + kInvPhi2 * (b - a);
    double e = a + kInvPhi * (b - a);
    double fc = at(c), fe = at(e);
    auto consider = [&](double t, double v) {
      if (v < best_phi) {
        best_phi = v;
        best_t = t;
      }
    };
    consider(c, fc);
    consider(e, fe);
    while (b - a > kLineTol) {
      if (fc < fe) {
        b = e;
        e = c;
        fe = fc;
        c = a + kInvPhi2 * (b - a);
        fc = at(c);
        consider(c, fc);
      } else {
        a = c;
        c = e;
        fc = fe;
        e = a + kInvPhi * (b - a);
        fe = at(e);
        consider(e, fe);
      }
    }
  };

  std::vector<double> y = normalize(space, x0);
  try {
    double phi_y = phi(y);

    std::vector<std::vector<double>> directions(D, std::vector<double>(D, 0.0));
    for (std::size_t i = 0; i < D; ++i) directions[i][i] = 1.0;

    constexpr int kMaxOuterIterations = 1000;
    for (int outer = 0; outer < kMaxOuterIterations; ++outer) {
      const std::vector<double> y_start = y;
      const double phi_start = phi_y;
      double largest_decrease = 0.0;
      std::size_t largest_idx = 0;

      for (std::size_t i = 0; i < D; ++i) {
        double t = 0.0, phi_t = 0.0;
        line_search(y, directions[i], t, phi_t);
        if (phi_t < phi_y) {
          const double decrease = phi_y - phi_t;
          for (std::size_t j = 0; j < D; ++j)
            y[j] = std::clamp(y[j] + t * directions[i][j], -1.0, 1.0);
          phi_y = phi_t;
          if (decrease > largest_decrease) {
            largest_decrease = decrease;
            largest_idx = i;
          }
        }
      }

      std::vector<double> displacement(D);
      double disp_norm = 0.0;
      for (std::size_t j = 0; j < D; ++j) {
        displacement[j] = y[j] - y_start[j];
        disp_norm += displacement[j] * displacement[j];
      }
      if (disp_norm > 0.0) directions[largest_idx] = displacement;

      if (phi_start - phi_y < budget.tolerance) break;
    }
  } catch (const detail::BudgetSpent&) {
    // Budget exhausted mid-search: the incumbent in `result` stands.
  }
  return result;
}

// ---------------------------------------------------------------------------
// Tree-structured Parzen Estimator
// ---------------------------------------------------------------------------

struct TpeConfig {
  double quantile = 0.25;  // fraction of history treated as "good"
  std::uint64_t n_startup = 10;
  std::uint64_t n_candidates = 24;
  std::uint64_t seed = 0;

  void check() const {
    if (!(quantile > 0.0 && quantile < 1.0))
      throw std::invalid_argument("tpe config: quantile must be in (0, 1)");
    if (n_startup < 1)
      throw std::invalid_argument("tpe config: n_startup must be >= 1");
    if (n_candidates < 1)
      throw std::invalid_argument("tpe config: n_candidates must be >= 1");
  }
};

// One-dimensional Parzen mixture of truncated Gaussians over a single knob.
// Exposed so densities can be checked directly in tests.
struct ParzenMixture {
  KnobKind kind = KnobKind::kContinuous;
  double lower = 0.0, upper = 1.0;  // knob bounds
  std::vector<double> centers;
  double bandwidth = 1.0;

  // Truncation interval: integer knobs get half-cell margins so every cell
  // carries the mass of its rounding interval.
  double trunc_lo() const {
    return kind == KnobKind::kInteger ? lower - 0.5 : lower;
  }
  double trunc_hi() const {
    return kind == KnobKind::kInteger ? upper + 0.5 : upper;
  }

  static double normal_cdf(double z) {
    return 0.5 * (1.0 + std::erf(z / std::numbers::sqrt2));
  }

  // Continuous density at v within the truncation interval.
  double pdf(double v) const {
    if (v < trunc_lo() || v > trunc_hi()) return 0.0;
    double acc = 0.0;
    for (const double c : centers) {
      const double mass = normal_cdf((trunc_hi() - c) / bandwidth) -
                          normal_cdf((trunc_lo() - c) / bandwidth);
      const double z = (v - c) / bandwidth;
      const double density = std::exp(-0.5 * z * z) /
                             (bandwidth * std::sqrt(2.0 * std::numbers::pi));
      acc += density / mass;
    }
    return acc / static_cast<double>(centers.size());
  }

  // Mass of the integer cell [k-0.5, k+0.5] under the truncated mixture.
  double pmf(double k) const {
    double acc = 0.0;
    for (const double c : centers) {
      const double mass = normal_cdf((trunc_hi() - c) / bandwidth) -
                          normal_cdf((trunc_lo() - c) / bandwidth);
      const double cell = normal_cdf((k + 0.5 - c) / bandwidth) -
                          normal_cdf((k - 0.5 - c) / bandwidth);
      acc += cell / mass;
    }
    return acc / static_cast<double>(centers.size());
  }

  double log_density(double v) const {
    const double d = kind == KnobKind::kInteger ? pmf(std::round(v)) : pdf(v);
    return std::log(std::max(d, 1e-300));
  }

  double sample(Rng& rng) const {
    const std::size_t i =
        static_cast<std::size_t>(rng.uniform_int(0, static_cast<long long>(centers.size()) - 1));
    const double c = centers[i];
    double v = 0.0;
    bool inside = false;
    for (int tries = 0; tries < 100; ++tries) {
      v = rng.normal(c, bandwidth);
      if (v >= trunc_lo() && v <= trunc_hi()) {
        inside = true;
        break;
      }
    }
    if (!inside) v = std::clamp(c, trunc_lo(), trunc_hi());
    if (kind == KnobKind::kInteger)
      v = std::clamp(std::round(v), lower, upper);
    return v;
  }
};

inline ParzenMixture make_parzen(const KnobSpec& knob,
                                 const std::vector<double>& values) {
  if (values.empty())
    throw std::invalid_argument("make_parzen: need at least one observation");
  ParzenMixture m;
  m.kind = knob.kind;
  m.lower = knob.lower;
  m.upper = knob.upper;
  m.centers = values;
  m.bandwidth =
      (knob.upper - knob.lower) / std::sqrt(static_cast<double>(values.size()));
  if (knob.kind == KnobKind::kInteger) m.bandwidth = std::max(m.bandwidth, 1.0);
  return m;
}

inline OptimizationResult tpe(const MeteredObjective& obj,
                              const BaselineBudget& budget,
                              const TpeConfig& config) {
  budget.check();
  config.check();
  if (budget.max_evaluations < config.n_startup)
    throw std::invalid_argument("tpe: budget smaller than startup trials");
  const SearchSpace& space = obj.space();
  const std::size_t D = space.dimension();

  OptimizationResult result;
  detail::BudgetedEval eval(obj, budget.max_evaluations, result);
  Rng rng(config.seed);

  std::vector<TuningVector> xs;
  std::vector<double> fs;
  auto observe = [&](const TuningVector& x) {
    const double f = eval(x);
    xs.push_back(x);
    fs.push_back(f);
  };

  try {
    // Startup phase: plain uniform sampling, draw-for-draw identical to
    // random_search on the same stream.
    for (std::uint64_t i = 0; i < config.n_startup; ++i)
      observe(sample_uniform(space, rng));

    while (eval.remaining() > 0) {
      const std::size_t n = fs.size();
      const std::size_t n_good = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::ceil(config.quantile * static_cast<double>(n))));

      // Indices by objective value, best first; stable so ties keep
      // insertion order and the split is deterministic.
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&fs](std::size_t a, std::size_t b) { return fs[a] > fs[b]; });

      if (n_good >= n) {
        // Degenerate split (tiny history): nothing to contrast against.
        observe(sample_uniform(space, rng));
        continue;
      }

      std::vector<ParzenMixture> good(D), bad(D);
      for (std::size_t k = 0; k < D; ++k) {
        std::vector<double> gv, bv;
        gv.reserve(n_good);
        bv.reserve(n - n_good);
        for (std::size_t r = 0; r < n; ++r) {
          const double v = xs[order[r]].values[k];
          if (r < n_good)
            gv.push_back(v);
          else
            bv.push_back(v);
        }
        good[k] = make_parzen(space.knob(k), gv);
        bad[k] = make_parzen(space.knob(k), bv);
      }

      TuningVector proposal;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::uint64_t c = 0; c < config.n_candidates; ++c) {
        TuningVector cand;
        cand.values.resize(D);
        double score = 0.0;
        for (std::size_t k = 0; k < D; ++k) {
          const double v = good[k].sample(rng);
          cand.values[k] = v;
          score += good[k].log_density(v) - bad[k].log_density(v);
        }
        if (score > best_score) {
          best_score = score;
          proposal = std::move(cand);
        }
      }
      observe(proposal);
    }
  } catch (const detail::BudgetSpent&) {
  }
  return result;
}

// ---------------------------------------------------------------------------
// Random search
// ---------------------------------------------------------------------------

inline OptimizationResult random_search(const MeteredObjective& obj,
                                        const BaselineBudget& budget,
                                        Rng& rng) {
  budget.check();
  const SearchSpace& space = obj.space();
  OptimizationResult result;
  detail::BudgetedEval eval(obj, budget.max_evaluations, result);
  try {
    for (std::uint64_t i = 0; i < budget.max_evaluations; ++i)
      eval(sample_uniform(space, rng));
  } catch (const detail::BudgetSpent&) {
  }
  return result;
}

}  // namespace knobtune
