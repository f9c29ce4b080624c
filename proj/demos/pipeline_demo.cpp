// Miniature end-to-end run of the whole library, in memory: synthesize
// measurement data for two devices, fit their surrogate models, train a
// small LSTM tuner against the aggregate, then compare it with random
// search at the same evaluation budget.

#include <cstdio>

#include "knobtune/baselines.hpp"
#include "knobtune/bench.hpp"
#include "knobtune/rng.hpp"
#include "knobtune/search_space.hpp"
#include "knobtune/surrogate.hpp"
#include "knobtune/trainer.hpp"

using namespace knobtune;

int main() {
  const std::uint64_t master_seed = 42;
  const SearchSpace space({
      {"k1", KnobKind::kInteger, 0, 11},
      {"k2", KnobKind::kInteger, 0, 11},
  });

  // Two devices with nearby peaks, 5% measurement noise.
  SurrogateObjective obj;
  obj.space = space;
  obj.aggregation = Aggregation::kMean;
  const std::vector<TuningVector> peaks = {{{8, 3}}, {{9, 4}}};
  for (std::size_t d = 0; d < peaks.size(); ++d) {
    DeviceProfile profile;
    profile.device_id = "device" + std::to_string(d);
    profile.optimum = peaks[d];
    profile.width = 0.5;
    profile.noise_std = 0.05;
    profile.n_rows = 400;
    Rng data_rng(derive_seed(master_seed, stream::kDeviceData, d, 0));
    const DeviceDataset data = gen_synthetic_device_data(space, profile, data_rng);

    MlpFitConfig fit;
    fit.hidden_sizes = {16, 16};
    fit.learning_rate = 0.4;
    fit.epochs = 4000;
    fit.seed = derive_seed(master_seed, stream::kDeviceFit, d, 0);
    DeviceFitResult result = train_device_model(data, space, fit);
    std::printf("%s: fit rmse %.4f\n", profile.device_id.c_str(),
                result.final_rmse);
    obj.devices.push_back(std::move(result.model));
    obj.device_ids.push_back(profile.device_id);
  }

  TrainConfig config;
  config.episode_length = 20;
  config.episodes_per_update = 16;
  config.total_updates = 300;
  config.hidden_size = 16;
  config.learning_rate = 0.08;
  config.reward_mode = RewardMode::kBestImprovement;
  config.seed = master_seed;
  const TrainResult trained = train(space, obj, config);
  std::printf("training: mean best-f %.4f (update 0) -> %.4f (update %zu)\n",
              trained.curve.front().mean_best_f,
              trained.curve.back().mean_best_f, trained.curve.size() - 1);

  // Deployment: paired-init comparison at the same 21-evaluation budget.
  BenchmarkConfig bench;
  bench.methods = {Method::kL2o, Method::kTpe, Method::kRandom};
  bench.n_inits = 8;
  bench.episode_length = config.episode_length;
  bench.seed = master_seed;
  bench.tpe.n_startup = 8;
  const BenchmarkReport report =
      run_benchmark(obj, bench, &trained.best_params);
  for (const MethodReport& m : report.methods)
    std::printf("%-7s median best-f %.4f (iqr %.4f) in %.0f evals\n",
                method_name(m.method).c_str(), m.box.median,
                m.box.q3 - m.box.q1, m.mean_evals);
  return 0;
}
