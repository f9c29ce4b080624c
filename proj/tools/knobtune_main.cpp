// knobtune: end-to-end pipeline driver.
//   gen-data        synthesize per-device measurement CSVs
//   train-surrogate fit one MLP per device, bundle the aggregate objective
//   train-agent     train the LSTM tuner against the surrogate objective
//   tune            run the trained tuner once and print the best setting
//   bench           budget-matched comparison of all methods
//   report          convert a benchmark report JSON to CSV
//
// All randomness flows from --seed; reruns with identical inputs reproduce
// identical artifacts except wall-clock fields.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "knobtune/baselines.hpp"
#include "knobtune/bench.hpp"
#include "knobtune/io.hpp"
#include "knobtune/rng.hpp"
#include "knobtune/search_space.hpp"
#include "knobtune/surrogate.hpp"
#include "knobtune/trainer.hpp"

namespace fs = std::filesystem;
using namespace knobtune;

namespace {

std::string hash_hex(const std::string& bytes) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

// Accumulate entries into <out>/manifest.json across pipeline stages.
void update_manifest(const std::string& out_dir,
                     const std::map<std::string, std::string>& artifacts,
                     const std::map<std::string, std::uint64_t>& seeds,
                     const std::map<std::string, std::string>& config_hashes) {
  const std::string path = (fs::path(out_dir) / "manifest.json").string();
  RunManifest m;
  if (fs::exists(path)) m = manifest_from_json(load_json_file(path));
  for (const auto& [k, v] : artifacts) m.artifacts[k] = v;
  for (const auto& [k, v] : seeds) m.seeds[k] = v;
  for (const auto& [k, v] : config_hashes) m.config_hashes[k] = v;
  write_manifest(path, m);
}

SearchSpace load_space(const std::string& path) {
  return space_from_json(load_json_file(path));
}

struct CommonArgs {
  std::string space_path;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int jobs = 1;
};

int cmd_gen_data(const CommonArgs& args) {
  const SearchSpace space = load_space(args.space_path);
  const std::string config_text = read_text_file(args.config_path);
  const std::vector<DeviceProfile> profiles =
      profiles_from_json(parse_json(config_text, args.config_path));

  std::map<std::string, std::string> artifacts;
  artifacts["space"] = args.space_path;
  for (std::size_t d = 0; d < profiles.size(); ++d) {
    Rng rng(derive_seed(args.seed, stream::kDeviceData, d, 0));
    const DeviceDataset data = gen_synthetic_device_data(space, profiles[d], rng);
    const std::string path =
        (fs::path(args.out_dir) / (profiles[d].device_id + ".csv")).string();
    write_text_file(path, dataset_to_csv(data, space));
    artifacts["dataset:" + profiles[d].device_id] = path;
  }
  update_manifest(args.out_dir, artifacts, {{"gen-data", args.seed}},
                  {{"space", hash_hex(space_to_json(space).dump())},
                   {"gen-data", hash_hex(config_text)}});
  std::cout << "wrote " << profiles.size() << " device dataset(s) to "
            << args.out_dir << "\n";
  return 0;
}

int cmd_train_surrogate(const CommonArgs& args, const std::string& data_dir,
                        const std::string& aggregation) {
  const SearchSpace space = load_space(args.space_path);

  MlpFitConfig fit;
  std::string config_text = "{}";
  if (!args.config_path.empty()) {
    config_text = read_text_file(args.config_path);
    fit = fit_config_from_json(parse_json(config_text, args.config_path));
  }

  std::vector<std::string> csv_paths;
  for (const auto& entry : fs::directory_iterator(data_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".csv")
      csv_paths.push_back(entry.path().string());
  std::sort(csv_paths.begin(), csv_paths.end());
  if (csv_paths.empty())
    throw CliError("missing-artifact", "no .csv datasets in " + data_dir);

  SurrogateObjective obj;
  obj.space = space;
  obj.aggregation =
      aggregation == "min" ? Aggregation::kMin : Aggregation::kMean;
  obj.devices.resize(csv_paths.size());
  obj.device_ids.resize(csv_paths.size());

  parallel_for(csv_paths.size(), args.jobs, [&](std::size_t d) {
    const std::string id = fs::path(csv_paths[d]).stem().string();
    const DeviceDataset data =
        dataset_from_csv(read_text_file(csv_paths[d]), space, id);
    MlpFitConfig device_fit = fit;
    device_fit.seed = derive_seed(args.seed, stream::kDeviceFit, d, 0);
    DeviceFitResult result = train_device_model(data, space, device_fit);
    obj.devices[d] = std::move(result.model);
    obj.device_ids[d] = id;
  });

  const std::string path = (fs::path(args.out_dir) / "surrogate.json").string();
  write_text_file(path, surrogate_to_json(obj).dump(2) + "\n");
  update_manifest(args.out_dir, {{"surrogate", path}},
                  {{"train-surrogate", args.seed}},
                  {{"train-surrogate", hash_hex(config_text)}});
  std::cout << "trained " << obj.devices.size() << " device model(s)";
  for (std::size_t d = 0; d < obj.devices.size(); ++d)
    std::cout << (d == 0 ? ": " : ", ") << obj.device_ids[d] << " rmse="
              << obj.devices[d].final_rmse;
  std::cout << "\n";
  return 0;
}

// Loads a surrogate and verifies it matches the --space file when one is
// given.
SurrogateObjective load_surrogate(const std::string& path,
                                  const std::string& space_path) {
  const json j = load_json_file(path);
  SurrogateObjective obj = surrogate_from_json(j);
  if (!space_path.empty())
    check_space_hash(j, space_hash(load_space(space_path)), path);
  return obj;
}

int cmd_train_agent(const CommonArgs& args, const std::string& surrogate_path) {
  const SurrogateObjective obj = load_surrogate(surrogate_path, args.space_path);

  TrainConfig config;
  std::string config_text = "{}";
  if (!args.config_path.empty()) {
    config_text = read_text_file(args.config_path);
    config = train_config_from_json(parse_json(config_text, args.config_path));
  }
  if (args.seed_given) config.seed = args.seed;
  if (args.jobs > 1) config.jobs = args.jobs;

  const TrainResult result = train(obj.space, obj, config);

  const std::string ckpt_path =
      (fs::path(args.out_dir) / "checkpoint.json").string();
  const std::string curve_path = (fs::path(args.out_dir) / "curve.csv").string();
  write_text_file(ckpt_path,
                  checkpoint_to_json(result.best_params, obj.space).dump(2) + "\n");
  write_text_file(curve_path, curve_to_csv(result.curve));
  update_manifest(args.out_dir,
                  {{"checkpoint", ckpt_path}, {"curve", curve_path}},
                  {{"train-agent", config.seed}},
                  {{"train-agent", hash_hex(config_text)}});
  if (!result.curve.empty())
    std::cout << "trained agent: " << result.curve.size()
              << " update(s), final mean best-f "
              << result.curve.back().mean_best_f << "\n";
  else
    std::cout << "trained agent: 0 updates (initial parameters written)\n";
  return 0;
}

TuningVector parse_x0(const std::string& text, const SearchSpace& space) {
  TuningVector x;
  std::istringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    try {
      x.values.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw CliError("invalid-argument", "cannot parse --x0 component: " + cell);
    }
  }
  const ValidationResult v = validate(space, x);
  if (!v.ok())
    throw CliError("invalid-argument", "--x0 invalid: " + v.violations.front());
  return x;
}

int cmd_tune(const CommonArgs& args, const std::string& surrogate_path,
             const std::string& checkpoint_path, const std::string& x0_text,
             std::uint64_t steps) {
  const json surrogate_json = load_json_file(surrogate_path);
  const SurrogateObjective obj = surrogate_from_json(surrogate_json);
  if (!args.space_path.empty())
    check_space_hash(surrogate_json, space_hash(load_space(args.space_path)),
                     surrogate_path);

  const json ckpt_json = load_json_file(checkpoint_path);
  check_space_hash(ckpt_json, space_hash(obj.space), checkpoint_path);
  const PolicyParams params = checkpoint_from_json(ckpt_json);

  const MeteredObjective metered(obj);
  Rng rng(derive_seed(args.seed, stream::kTuneEntry, 0, 0));
  const TuningVector x0 = x0_text.empty() ? sample_uniform(obj.space, rng)
                                          : parse_x0(x0_text, obj.space);
  const Trajectory traj = rollout(params, metered, steps, x0, rng);

  TuningVector best_x = traj.initial_x;
  double best_f = traj.initial_f;
  for (const TrajectoryStep& s : traj.steps)
    if (s.f > best_f) {
      best_f = s.f;
      best_x = s.x;
    }

  std::ostringstream xs;
  for (std::size_t i = 0; i < best_x.values.size(); ++i)
    xs << (i ? "," : "") << format_double(best_x.values[i]);
  std::cout << "best_x: " << xs.str() << "\n";
  std::cout << "best_f: " << format_double(best_f) << "\n";
  std::cout << "evaluations: " << metered.evaluations() << "\n";

  if (!args.out_dir.empty()) {
    const std::string path =
        (fs::path(args.out_dir) / "tune_result.json").string();
    write_text_file(path, json{{"space_hash", space_hash(obj.space)},
                               {"best_x", best_x.values},
                               {"best_f", best_f},
                               {"evaluations", metered.evaluations()}}
                              .dump(2) +
                              "\n");
    update_manifest(args.out_dir, {{"tune_result", path}},
                    {{"tune", args.seed}}, {});
  }
  return 0;
}

int cmd_bench(const CommonArgs& args, const std::string& surrogate_path,
              const std::string& checkpoint_path) {
  const json surrogate_json = load_json_file(surrogate_path);
  const SurrogateObjective obj = surrogate_from_json(surrogate_json);
  if (!args.space_path.empty())
    check_space_hash(surrogate_json, space_hash(load_space(args.space_path)),
                     surrogate_path);

  BenchmarkConfig config;
  config.methods = {Method::kL2o, Method::kPowellDefault, Method::kPowellBudget,
                    Method::kTpe, Method::kRandom};
  std::string config_text = "{}";
  if (!args.config_path.empty()) {
    config_text = read_text_file(args.config_path);
    config = bench_config_from_json(parse_json(config_text, args.config_path));
  }
  if (args.seed_given) config.seed = args.seed;
  if (args.jobs > 1) config.jobs = args.jobs;

  std::optional<PolicyParams> checkpoint;
  const bool wants_l2o =
      std::find(config.methods.begin(), config.methods.end(), Method::kL2o) !=
      config.methods.end();
  if (wants_l2o) {
    if (checkpoint_path.empty())
      throw CliError("missing-artifact",
                     "bench config includes l2o but no --checkpoint given");
    const json ckpt_json = load_json_file(checkpoint_path);
    check_space_hash(ckpt_json, space_hash(obj.space), checkpoint_path);
    checkpoint = checkpoint_from_json(ckpt_json);
  }

  const BenchmarkReport report =
      run_benchmark(obj, config, checkpoint ? &*checkpoint : nullptr);

  const std::string path = (fs::path(args.out_dir) / "report.json").string();
  write_text_file(path,
                  report_to_json(report, space_hash(obj.space)).dump(2) + "\n");
  update_manifest(args.out_dir, {{"report", path}}, {{"bench", config.seed}},
                  {{"bench", hash_hex(config_text)}});
  for (const MethodReport& mr : report.methods)
    std::cout << method_name(mr.method) << ": median best_f "
              << format_double(mr.box.median) << ", mean "
              << format_double(mr.mean_seconds) << " s/run\n";
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& out) {
  const BenchmarkReport report = report_from_json(load_json_file(report_path));
  std::string path = out;
  if (path.empty() || fs::is_directory(path))
    path = (fs::path(path.empty() ? "." : path) / "report.csv").string();
  write_text_file(path, report_to_csv(report));
  std::cout << "wrote " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixed-integer black-box tuning: learned optimizer + baselines"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string data_dir, surrogate_path, checkpoint_path, aggregation = "mean";
  std::string x0_text, report_path, report_out;
  std::uint64_t tune_steps = 50;

  auto add_common = [&args](CLI::App* cmd, bool need_space, bool need_out) {
    auto* space = cmd->add_option("--space", args.space_path, "search-space JSON");
    if (need_space) space->required();
    auto* out = cmd->add_option("--out", args.out_dir, "output directory");
    if (need_out) out->required();
    cmd->add_option("--seed", args.seed, "master seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
    cmd->add_option("--jobs", args.jobs, "worker threads")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* gen = app.add_subcommand("gen-data", "synthesize device datasets");
  add_common(gen, true, true);
  gen->add_option("--config", args.config_path, "device profiles JSON")->required();

  CLI::App* surro = app.add_subcommand("train-surrogate", "fit device models");
  add_common(surro, true, true);
  surro->add_option("--config", args.config_path, "fit config JSON");
  surro->add_option("--data", data_dir, "directory of device CSVs")->required();
  surro->add_option("--aggregation", aggregation, "mean|min")
      ->check(CLI::IsMember({"mean", "min"}));

  CLI::App* agent = app.add_subcommand("train-agent", "train the LSTM tuner");
  add_common(agent, false, true);
  agent->add_option("--config", args.config_path, "train config JSON");
  agent->add_option("--surrogate", surrogate_path, "surrogate JSON")->required();

  CLI::App* tune = app.add_subcommand("tune", "deploy the tuner once");
  add_common(tune, false, false);
  tune->add_option("--surrogate", surrogate_path, "surrogate JSON")->required();
  tune->add_option("--checkpoint", checkpoint_path, "agent checkpoint JSON")
      ->required();
  tune->add_option("--x0", x0_text, "starting point as comma-separated values");
  tune->add_option("--steps", tune_steps, "episode length")
      ->check(CLI::PositiveNumber);

  CLI::App* bench = app.add_subcommand("bench", "budget-matched comparison");
  add_common(bench, false, true);
  bench->add_option("--config", args.config_path, "bench config JSON");
  bench->add_option("--surrogate", surrogate_path, "surrogate JSON")->required();
  bench->add_option("--checkpoint", checkpoint_path, "agent checkpoint JSON");

  CLI::App* report = app.add_subcommand("report", "report JSON -> CSV");
  report->add_option("--report", report_path, "benchmark report JSON")->required();
  report->add_option("--out", report_out, "output CSV path or directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: invalid-argument: " << e.what() << "\n";
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(args);
    if (surro->parsed()) return cmd_train_surrogate(args, data_dir, aggregation);
    if (agent->parsed()) return cmd_train_agent(args, surrogate_path);
    if (tune->parsed())
      return cmd_tune(args, surrogate_path, checkpoint_path, x0_text, tune_steps);
    if (bench->parsed()) return cmd_bench(args, surrogate_path, checkpoint_path);
    if (report->parsed()) return cmd_report(report_path, report_out);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.category << ": " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: invalid-config: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: invalid-config: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: io-error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
