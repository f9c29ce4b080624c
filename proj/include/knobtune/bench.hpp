// Budget-matched comparison harness: runs the learned optimizer and the
// classical baselines from shared random starting points and aggregates
// best-f distributions, evaluation counts, and per-run wall-clock times.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "knobtune/agent.hpp"
#include "knobtune/baselines.hpp"
#include "knobtune/parallel.hpp"
#include "knobtune/rng.hpp"
#include "knobtune/search_space.hpp"
#include "knobtune/surrogate.hpp"
#include "knobtune/trainer.hpp"

namespace knobtune {

enum class Method { kL2o, kPowellDefault, kPowellBudget, kTpe, kRandom };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::kL2o: return "l2o";
    case Method::kPowellDefault: return "powell_default";
    case Method::kPowellBudget: return "powell_budget";
    case Method::kTpe: return "tpe";
    case Method::kRandom: return "random";
  }
  throw std::invalid_argument("unknown method");
}

inline Method parse_method(const std::string& name) {
  if (name == "l2o") return Method::kL2o;
  if (name == "powell_default") return Method::kPowellDefault;
  if (name == "powell_budget") return Method::kPowellBudget;
  if (name == "tpe") return Method::kTpe;
  if (name == "random") return Method::kRandom;
  throw std::invalid_argument("unknown method: " + name);
}

// Evaluation budgets per method for a deployment episode of length T: the
// learned optimizer consumes exactly T+1 evaluations, so every budgeted
// baseline gets the same T+1; only powell_default runs to tolerance under
// the safety cap.
struct MethodBudgets {
  std::uint64_t l2o = 0;
  std::uint64_t powell_default = kPowellSafetyLimit;
  std::uint64_t powell_budget = 0;
  std::uint64_t tpe = 0;
  std::uint64_t random = 0;

  std::uint64_t of(Method m) const {
    switch (m) {
      case Method::kL2o: return l2o;
      case Method::kPowellDefault: return powell_default;
      case Method::kPowellBudget: return powell_budget;
      case Method::kTpe: return tpe;
      case Method::kRandom: return random;
    }
    throw std::invalid_argument("unknown method");
  }
};

inline MethodBudgets budget_match(std::uint64_t T) {
  if (T < 1) throw std::invalid_argument("budget_match: T must be >= 1");
  MethodBudgets b;
  b.l2o = T + 1;
  b.powell_budget = T + 1;
  b.tpe = T + 1;
  b.random = T + 1;
  b.powell_default = kPowellSafetyLimit;
  return b;
}

struct BoxStats {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Quartiles by inclusive linear interpolation between order statistics.
inline BoxStats box_stats(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("box_stats: empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  auto quantile = [&](double p) {
    const double h = static_cast<double>(n - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    const double frac = h - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
  };
  BoxStats s;
  s.min = values.front();
  s.q1 = quantile(0.25);
  s.median = quantile(0.5);
  s.q3 = quantile(0.75);
  s.max = values.back();
  return s;
}

struct BenchmarkConfig {
  std::vector<Method> methods;
  std::uint64_t n_inits = 16;
  std::uint64_t episode_length = 50;  // deployment T
  std::uint64_t seed = 0;
  TpeConfig tpe;
  double powell_tolerance = 1e-8;
  int jobs = 1;

  void check() const {
    if (methods.empty())
      throw std::invalid_argument("bench config: methods must be non-empty");
    if (n_inits < 1)
      throw std::invalid_argument("bench config: n_inits must be >= 1");
    if (episode_length < 1)
      throw std::invalid_argument("bench config: episode length must be >= 1");
    if (jobs < 1) throw std::invalid_argument("bench config: jobs must be >= 1");
  }
};

struct MethodReport {
  Method method = Method::kRandom;
  std::vector<double> raw;            // best_f per init
  std::vector<std::uint64_t> evals;   // evaluations per init
  std::vector<double> seconds;        // optimize wall-clock per init
  BoxStats box;
  double mean_seconds = 0.0;
  double mean_evals = 0.0;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::vector<MethodReport> methods;
};

namespace detail {

struct CellResult {
  double best_f = 0.0;
  std::uint64_t evals = 0;
  double seconds = 0.0;
};

// One (method, init) cell. Every method at a given init index starts its RNG
// from the same derived seed, so the first uniform draw — the initial point —
// is shared across methods (paired comparison). Timing wraps only the
// optimize call.
inline CellResult run_cell(Method method, const SurrogateObjective& obj,
                           const PolicyParams* checkpoint,
                           const BenchmarkConfig& config,
                           const MethodBudgets& budgets, std::uint64_t init) {
  const MeteredObjective metered(obj);
  const SearchSpace& space = obj.space;
  const std::uint64_t cell_seed = derive_seed(config.seed, stream::kBenchInit, init, 0);
  Rng rng(cell_seed);

  CellResult cell;
  const auto t0 = std::chrono::steady_clock::now();
  switch (method) {
    case Method::kL2o: {
      if (checkpoint == nullptr)
        throw std::invalid_argument("benchmark: l2o requested without checkpoint");
      const TuningVector x0 = sample_uniform(space, rng);
      const Trajectory traj =
          rollout(*checkpoint, metered, config.episode_length, x0, rng);
      cell.best_f = episode_best_f(traj);
      break;
    }
    case Method::kPowellDefault:
    case Method::kPowellBudget: {
      const TuningVector x0 = sample_uniform(space, rng);
      BaselineBudget budget;
      budget.max_evaluations = budgets.of(method);
      budget.tolerance = config.powell_tolerance;
      cell.best_f = powell(metered, x0, budget).best_f;
      break;
    }
    case Method::kTpe: {
      BaselineBudget budget;
      budget.max_evaluations = budgets.of(method);
      TpeConfig tc = config.tpe;
      tc.seed = cell_seed;
      cell.best_f = tpe(metered, budget, tc).best_f;
      break;
    }
    case Method::kRandom: {
      BaselineBudget budget;
      budget.max_evaluations = budgets.of(method);
      cell.best_f = random_search(metered, budget, rng).best_f;
      break;
    }
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  cell.seconds = dt.count();
  cell.evals = metered.evaluations();
  return cell;
}

}  // namespace detail

// Runs every requested method from n_inits shared starting points.
// (method, init) cells are independent and may run concurrently; each owns
// its objective meter and RNG stream, so the best-f matrix is identical for
// any job count.
inline BenchmarkReport run_benchmark(const SurrogateObjective& obj,
                                     const BenchmarkConfig& config,
                                     const PolicyParams* checkpoint) {
  config.check();
  obj.check();
  for (Method m : config.methods)
    if (m == Method::kL2o && checkpoint == nullptr)
      throw std::invalid_argument("benchmark: l2o requested without checkpoint");

  const MethodBudgets budgets = budget_match(config.episode_length);
  const std::size_t n_methods = config.methods.size();
  const std::size_t n_cells = n_methods * config.n_inits;
  std::vector<detail::CellResult> cells(n_cells);

  parallel_for(n_cells, config.jobs, [&](std::size_t idx) {
    const Method method = config.methods[idx / config.n_inits];
    const std::uint64_t init = idx % config.n_inits;
    cells[idx] =
        detail::run_cell(method, obj, checkpoint, config, budgets, init);
  });

  BenchmarkReport report;
  report.config = config;
  for (std::size_t m = 0; m < n_methods; ++m) {
    MethodReport mr;
    mr.method = config.methods[m];
    for (std::uint64_t i = 0; i < config.n_inits; ++i) {
      const detail::CellResult& cell = cells[m * config.n_inits + i];
      mr.raw.push_back(cell.best_f);
      mr.evals.push_back(cell.evals);
      mr.seconds.push_back(cell.seconds);
    }
    mr.box = box_stats(mr.raw);
    double ssec = 0.0, sev = 0.0;
    for (double s : mr.seconds) ssec += s;
    for (std::uint64_t e : mr.evals) sev += static_cast<double>(e);
    mr.mean_seconds = ssec / static_cast<double>(config.n_inits);
    mr.mean_evals = sev / static_cast<double>(config.n_inits);
    report.methods.push_back(std::move(mr));
  }
  return report;
}

}  // namespace knobtune
