// Runs the three classical optimizers on an analytic 2-knob objective and
// prints their traces. No surrogate or agent involved — just the baseline
// API against a MeteredObjective wrapping a lambda.

#include <cstdio>

#include "knobtune/baselines.hpp"
#include "knobtune/rng.hpp"
#include "knobtune/search_space.hpp"
#include "knobtune/surrogate.hpp"

using namespace knobtune;

int main() {
  const SearchSpace space({
      {"bias", KnobKind::kInteger, 0, 15},
      {"gain", KnobKind::kContinuous, -2.0, 2.0},
  });

  // A single bump peaked at bias=11, gain=0.5.
  const MeteredObjective obj(space, [&space](const TuningVector& x) {
    const std::vector<double> y = normalize(space, x);
    const double dy0 = y[0] - normalize(space, {{11, 0}})[0];
    const double dy1 = y[1] - 0.25;
    return std::exp(-(dy0 * dy0 + dy1 * dy1) / (2.0 * 0.3 * 0.3));
  });

  const TuningVector x0{{4, -1.0}};
  BaselineBudget budget;
  budget.max_evaluations = 120;

  const OptimizationResult pw = powell(obj, x0, budget);
  std::printf("powell: best_f=%.6f at (%g, %g) after %llu evals\n", pw.best_f,
              pw.best_x.values[0], pw.best_x.values[1],
              static_cast<unsigned long long>(pw.evaluations));

  TpeConfig tc;
  tc.seed = 7;
  const OptimizationResult tp = tpe(obj, budget, tc);
  std::printf("tpe:    best_f=%.6f at (%g, %g) after %llu evals\n", tp.best_f,
              tp.best_x.values[0], tp.best_x.values[1],
              static_cast<unsigned long long>(tp.evaluations));

  Rng rng(7);
  const OptimizationResult rs = random_search(obj, budget, rng);
  std::printf("random: best_f=%.6f at (%g, %g) after %llu evals\n", rs.best_f,
              rs.best_x.values[0], rs.best_x.values[1],
              static_cast<unsigned long long>(rs.evaluations));
  return 0;
}
