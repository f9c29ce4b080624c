// Artifact serialization: JSON schemas for spaces, surrogates, checkpoints,
// configs, reports, and manifests; CSV for datasets, learning curves, and
// report rows. Every derived artifact records a hash of the search-space
// JSON so cross-artifact mismatches are caught instead of silently mixing
// knob orders.
#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "knobtune/agent.hpp"
#include "knobtune/bench.hpp"
#include "knobtune/search_space.hpp"
#include "knobtune/surrogate.hpp"
#include "knobtune/trainer.hpp"

namespace knobtune {

using nlohmann::json;

// Error with a machine-parsable category; the CLI prints these as
// "error: <category>: <message>" and exits nonzero.
struct CliError : std::runtime_error {
  std::string category;
  CliError(std::string cat, const std::string& message)
      : std::runtime_error(message), category(std::move(cat)) {}
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError("missing-artifact", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw CliError("io-error", "read failed for " + path);
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError("io-error", "cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw CliError("io-error", "write failed for " + path);
}

inline json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw CliError("invalid-config", "malformed JSON in " + what);
  return j;
}

inline json load_json_file(const std::string& path) {
  return parse_json(read_text_file(path), path);
}

// Fixed-width deterministic formatting: shortest representation that
// round-trips a double exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char shorter[64];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// SearchSpace
// ---------------------------------------------------------------------------

inline json space_to_json(const SearchSpace& space) {
  json knobs = json::array();
  for (const KnobSpec& k : space.knobs()) {
    knobs.push_back({{"name", k.name},
                     {"kind", k.kind == KnobKind::kInteger ? "integer" : "continuous"},
                     {"lower", k.lower},
                     {"upper", k.upper}});
  }
  return json{{"knobs", knobs}};
}

inline SearchSpace space_from_json(const json& j) {
  if (!j.contains("knobs") || !j["knobs"].is_array())
    throw CliError("invalid-config", "space JSON needs a \"knobs\" array");
  std::vector<KnobSpec> knobs;
  for (const json& jk : j["knobs"]) {
    KnobSpec k;
    k.name = jk.at("name").get<std::string>();
    const std::string kind = jk.at("kind").get<std::string>();
    if (kind == "integer")
      k.kind = KnobKind::kInteger;
    else if (kind == "continuous")
      k.kind = KnobKind::kContinuous;
    else
      throw CliError("invalid-config", "unknown knob kind: " + kind);
    k.lower = jk.at("lower").get<double>();
    k.upper = jk.at("upper").get<double>();
    knobs.push_back(std::move(k));
  }
  return SearchSpace(std::move(knobs));
}

// Hash of the canonical (compact) space JSON, carried by every derived
// artifact.
inline std::string space_hash(const SearchSpace& space) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(space_to_json(space).dump())));
  return buf;
}

inline void check_space_hash(const json& artifact, const std::string& expect,
                             const std::string& what) {
  const std::string got = artifact.value("space_hash", "");
  if (got != expect)
    throw CliError("schema-mismatch",
                   what + " was built for a different search space (hash " +
                       got + ", expected " + expect + ")");
}

// ---------------------------------------------------------------------------
// Datasets and device profiles
// ---------------------------------------------------------------------------

inline std::string dataset_to_csv(const DeviceDataset& data,
                                  const SearchSpace& space) {
  std::ostringstream out;
  for (std::size_t i = 0; i < space.dimension(); ++i)
    out << space.knob(i).name << ',';
  out << "performance\n";
  for (const auto& [x, f] : data.rows) {
    for (const double v : x.values) out << format_double(v) << ',';
    out << format_double(f) << '\n';
  }
  return out.str();
}

inline DeviceDataset dataset_from_csv(const std::string& csv,
                                      const SearchSpace& space,
                                      const std::string& device_id) {
  DeviceDataset data;
  data.device_id = device_id;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line))
    throw CliError("invalid-config", "dataset CSV is empty");
  {
    std::ostringstream expect;
    for (std::size_t i = 0; i < space.dimension(); ++i)
      expect << space.knob(i).name << ',';
    expect << "performance";
    if (line != expect.str())
      throw CliError("schema-mismatch", "dataset CSV header does not match the space");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> cells;
    while (std::getline(row, cell, ',')) cells.push_back(std::stod(cell));
    if (cells.size() != space.dimension() + 1)
      throw CliError("invalid-config", "dataset CSV row has wrong column count");
    TuningVector x;
    x.values.assign(cells.begin(), cells.end() - 1);
    require_valid(space, x);
    data.rows.emplace_back(std::move(x), cells.back());
  }
  if (data.rows.empty())
    throw CliError("invalid-config", "dataset CSV has no rows");
  return data;
}

inline json profile_to_json(const DeviceProfile& p) {
  return json{{"device_id", p.device_id},
              {"optimum", p.optimum.values},
              {"amplitude", p.amplitude},
              {"width", p.width},
              {"noise_std", p.noise_std},
              {"n_rows", p.n_rows}};
}

inline DeviceProfile profile_from_json(const json& j) {
  DeviceProfile p;
  p.device_id = j.at("device_id").get<std::string>();
  p.optimum.values = j.at("optimum").get<std::vector<double>>();
  p.amplitude = j.value("amplitude", 1.0);
  p.width = j.value("width", 0.5);
  p.noise_std = j.value("noise_std", 0.0);
  p.n_rows = j.value("n_rows", 1);
  return p;
}

inline std::vector<DeviceProfile> profiles_from_json(const json& j) {
  if (!j.contains("devices") || !j["devices"].is_array() || j["devices"].empty())
    throw CliError("invalid-config", "profile JSON needs a non-empty \"devices\" array");
  std::vector<DeviceProfile> out;
  for (const json& jp : j["devices"]) out.push_back(profile_from_json(jp));
  return out;
}

// ---------------------------------------------------------------------------
// Matrices, MLP models, surrogate objectives
// ---------------------------------------------------------------------------

inline json matrix_to_json(const Eigen::MatrixXd& m) {
  json flat = json::array();
  for (long r = 0; r < m.rows(); ++r)
    for (long c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  const long rows = j.at("rows").get<long>();
  const long cols = j.at("cols").get<long>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 ||
      data.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    throw CliError("invalid-config", "matrix JSON shape/data mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (long r = 0; r < rows; ++r)
    for (long c = 0; c < cols; ++c) m(r, c) = data[i++];
  return m;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json flat = json::array();
  for (long i = 0; i < v.size(); ++i) flat.push_back(v(i));
  return flat;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  const auto data = j.get<std::vector<double>>();
  Eigen::VectorXd v(static_cast<long>(data.size()));
  for (std::size_t i = 0; i < data.size(); ++i) v(static_cast<long>(i)) = data[i];
  return v;
}

inline json mlp_to_json(const MlpModel& m) {
  json layers = json::array();
  for (const auto& layer : m.layers)
    layers.push_back({{"weight", matrix_to_json(layer.weight)},
                      {"bias", vector_to_json(layer.bias)}});
  return json{{"layers", layers}, {"final_rmse", m.final_rmse}};
}

inline MlpModel mlp_from_json(const json& j) {
  MlpModel m;
  for (const json& jl : j.at("layers")) {
    MlpModel::Layer layer;
    layer.weight = matrix_from_json(jl.at("weight"));
    layer.bias = vector_from_json(jl.at("bias"));
    m.layers.push_back(std::move(layer));
  }
  m.final_rmse = j.value("final_rmse", 0.0);
  m.check_shapes();
  return m;
}

inline json surrogate_to_json(const SurrogateObjective& obj) {
  json devices = json::array();
  for (std::size_t i = 0; i < obj.devices.size(); ++i)
    devices.push_back({{"device_id", obj.device_ids.size() > i
                                         ? obj.device_ids[i]
                                         : "device" + std::to_string(i)},
                       {"model", mlp_to_json(obj.devices[i])}});
  return json{{"space_hash", space_hash(obj.space)},
              {"space", space_to_json(obj.space)},
              {"aggregation", obj.aggregation == Aggregation::kMean ? "mean" : "min"},
              {"devices", devices}};
}

inline SurrogateObjective surrogate_from_json(const json& j) {
  SurrogateObjective obj{space_from_json(j.at("space")), {}, {}, Aggregation::kMean};
  const std::string agg = j.value("aggregation", "mean");
  if (agg == "mean")
    obj.aggregation = Aggregation::kMean;
  else if (agg == "min")
    obj.aggregation = Aggregation::kMin;
  else
    throw CliError("invalid-config", "unknown aggregation: " + agg);
  for (const json& jd : j.at("devices")) {
    obj.device_ids.push_back(jd.at("device_id").get<std::string>());
    obj.devices.push_back(mlp_from_json(jd.at("model")));
  }
  obj.check();
  return obj;
}

// ---------------------------------------------------------------------------
// Policy checkpoints
// ---------------------------------------------------------------------------

inline json lstm_to_json(const LstmLayerParams& l) {
  return json{{"w_in", matrix_to_json(l.w_in)},
              {"w_forget", matrix_to_json(l.w_forget)},
              {"w_cell", matrix_to_json(l.w_cell)},
              {"w_out", matrix_to_json(l.w_out)},
              {"u_in", matrix_to_json(l.u_in)},
              {"u_forget", matrix_to_json(l.u_forget)},
              {"u_cell", matrix_to_json(l.u_cell)},
              {"u_out", matrix_to_json(l.u_out)},
              {"b_in", vector_to_json(l.b_in)},
              {"b_forget", vector_to_json(l.b_forget)},
              {"b_cell", vector_to_json(l.b_cell)},
              {"b_out", vector_to_json(l.b_out)}};
}

inline LstmLayerParams lstm_from_json(const json& j) {
  LstmLayerParams l;
  l.w_in = matrix_from_json(j.at("w_in"));
  l.w_forget = matrix_from_json(j.at("w_forget"));
  l.w_cell = matrix_from_json(j.at("w_cell"));
  l.w_out = matrix_from_json(j.at("w_out"));
  l.u_in = matrix_from_json(j.at("u_in"));
  l.u_forget = matrix_from_json(j.at("u_forget"));
  l.u_cell = matrix_from_json(j.at("u_cell"));
  l.u_out = matrix_from_json(j.at("u_out"));
  l.b_in = vector_from_json(j.at("b_in"));
  l.b_forget = vector_from_json(j.at("b_forget"));
  l.b_cell = vector_from_json(j.at("b_cell"));
  l.b_out = vector_from_json(j.at("b_out"));
  return l;
}

inline json checkpoint_to_json(const PolicyParams& p, const SearchSpace& space) {
  json heads = json::array();
  for (const HeadParams& h : p.heads)
    heads.push_back(
        {{"kind", h.kind == KnobKind::kInteger ? "integer" : "continuous"},
         {"weight", matrix_to_json(h.weight)},
         {"bias", vector_to_json(h.bias)}});
  return json{
      {"space_hash", space_hash(space)},
      {"hidden_size", p.hidden_size},
      {"obs_dim", p.obs_dim},
      {"variant", p.variant == StateVariant::kRecurrent ? "recurrent" : "memoryless"},
      {"lstm1", lstm_to_json(p.lstm1)},
      {"lstm2", lstm_to_json(p.lstm2)},
      {"heads", heads},
      {"f_stat", {{"count", p.f_stat.count}, {"mean", p.f_stat.mean}, {"m2", p.f_stat.m2}}}};
}

inline PolicyParams checkpoint_from_json(const json& j) {
  PolicyParams p;
  p.hidden_size = j.at("hidden_size").get<int>();
  p.obs_dim = j.at("obs_dim").get<int>();
  const std::string variant = j.value("variant", "recurrent");
  if (variant == "recurrent")
    p.variant = StateVariant::kRecurrent;
  else if (variant == "memoryless")
    p.variant = StateVariant::kMemoryless;
  else
    throw CliError("invalid-config", "unknown state variant: " + variant);
  p.lstm1 = lstm_from_json(j.at("lstm1"));
  p.lstm2 = lstm_from_json(j.at("lstm2"));
  for (const json& jh : j.at("heads")) {
    HeadParams h;
    const std::string kind = jh.at("kind").get<std::string>();
    h.kind = kind == "integer" ? KnobKind::kInteger : KnobKind::kContinuous;
    h.weight = matrix_from_json(jh.at("weight"));
    h.bias = vector_from_json(jh.at("bias"));
    p.heads.push_back(std::move(h));
  }
  const json& fs = j.at("f_stat");
  p.f_stat.count = fs.at("count").get<double>();
  p.f_stat.mean = fs.at("mean").get<double>();
  p.f_stat.m2 = fs.at("m2").get<double>();
  return p;
}

// ---------------------------------------------------------------------------
// Configs
// ---------------------------------------------------------------------------

inline MlpFitConfig fit_config_from_json(const json& j) {
  MlpFitConfig c;
  if (j.contains("hidden_sizes"))
    c.hidden_sizes = j["hidden_sizes"].get<std::vector<int>>();
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  return c;
}

inline RewardMode reward_mode_from_string(const std::string& s) {
  if (s == "telescoping") return RewardMode::kTelescoping;
  if (s == "best_improvement") return RewardMode::kBestImprovement;
  throw CliError("invalid-config", "unknown reward mode: " + s);
}

inline TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.episode_length = j.value("episode_length", c.episode_length);
  c.episodes_per_update = j.value("episodes_per_update", c.episodes_per_update);
  c.total_updates = j.value("total_updates", c.total_updates);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.discount = j.value("discount", c.discount);
  if (j.contains("reward_mode"))
    c.reward_mode = reward_mode_from_string(j["reward_mode"].get<std::string>());
  c.baseline_decay = j.value("baseline_decay", c.baseline_decay);
  c.entropy_weight = j.value("entropy_weight", c.entropy_weight);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.hidden_size = j.value("hidden_size", c.hidden_size);
  if (j.contains("variant")) {
    const std::string v = j["variant"].get<std::string>();
    if (v == "recurrent")
      c.variant = StateVariant::kRecurrent;
    else if (v == "memoryless")
      c.variant = StateVariant::kMemoryless;
    else
      throw CliError("invalid-config", "unknown state variant: " + v);
  }
  c.seed = j.value("seed", c.seed);
  c.jobs = j.value("jobs", c.jobs);
  return c;
}

inline json train_config_to_json(const TrainConfig& c) {
  return json{
      {"episode_length", c.episode_length},
      {"episodes_per_update", c.episodes_per_update},
      {"total_updates", c.total_updates},
      {"learning_rate", c.learning_rate},
      {"discount", c.discount},
      {"reward_mode",
       c.reward_mode == RewardMode::kTelescoping ? "telescoping" : "best_improvement"},
      {"baseline_decay", c.baseline_decay},
      {"entropy_weight", c.entropy_weight},
      {"grad_clip", c.grad_clip},
      {"hidden_size", c.hidden_size},
      {"variant", c.variant == StateVariant::kRecurrent ? "recurrent" : "memoryless"},
      {"seed", c.seed},
      {"jobs", c.jobs}};
}

inline BenchmarkConfig bench_config_from_json(const json& j) {
  BenchmarkConfig c;
  if (j.contains("methods")) {
    c.methods.clear();
    for (const json& jm : j["methods"])
      c.methods.push_back(parse_method(jm.get<std::string>()));
  }
  c.n_inits = j.value("n_inits", c.n_inits);
  c.episode_length = j.value("episode_length", c.episode_length);
  c.seed = j.value("seed", c.seed);
  if (j.contains("tpe")) {
    const json& jt = j["tpe"];
    c.tpe.quantile = jt.value("quantile", c.tpe.quantile);
    c.tpe.n_startup = jt.value("n_startup", c.tpe.n_startup);
    c.tpe.n_candidates = jt.value("n_candidates", c.tpe.n_candidates);
  }
  c.powell_tolerance = j.value("powell_tolerance", c.powell_tolerance);
  c.jobs = j.value("jobs", c.jobs);
  return c;
}

inline json bench_config_to_json(const BenchmarkConfig& c) {
  json methods = json::array();
  for (Method m : c.methods) methods.push_back(method_name(m));
  return json{{"methods", methods},
              {"n_inits", c.n_inits},
              {"episode_length", c.episode_length},
              {"seed", c.seed},
              {"tpe",
               {{"quantile", c.tpe.quantile},
                {"n_startup", c.tpe.n_startup},
                {"n_candidates", c.tpe.n_candidates}}},
              {"powell_tolerance", c.powell_tolerance},
              {"jobs", c.jobs}};
}

// ---------------------------------------------------------------------------
// Learning curves and benchmark reports
// ---------------------------------------------------------------------------

inline std::string curve_to_csv(const LearningCurve& curve) {
  std::ostringstream out;
  out << "update,mean_return,mean_best_f,seconds\n";
  for (const CurvePoint& p : curve)
    out << p.update << ',' << format_double(p.mean_return) << ','
        << format_double(p.mean_best_f) << ',' << format_double(p.seconds)
        << '\n';
  return out.str();
}

inline LearningCurve curve_from_csv(const std::string& csv) {
  LearningCurve curve;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "update,mean_return,mean_best_f,seconds")
    throw CliError("invalid-config", "unexpected learning-curve CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    CurvePoint p;
    std::istringstream row(line);
    std::string cell;
    std::getline(row, cell, ',');
    p.update = std::stoull(cell);
    std::getline(row, cell, ',');
    p.mean_return = std::stod(cell);
    std::getline(row, cell, ',');
    p.mean_best_f = std::stod(cell);
    std::getline(row, cell, ',');
    p.seconds = std::stod(cell);
    curve.push_back(p);
  }
  return curve;
}

inline json box_to_json(const BoxStats& b) {
  return json{{"min", b.min}, {"q1", b.q1}, {"median", b.median},
              {"q3", b.q3},   {"max", b.max}};
}

inline BoxStats box_from_json(const json& j) {
  BoxStats b;
  b.min = j.at("min").get<double>();
  b.q1 = j.at("q1").get<double>();
  b.median = j.at("median").get<double>();
  b.q3 = j.at("q3").get<double>();
  b.max = j.at("max").get<double>();
  return b;
}

inline json report_to_json(const BenchmarkReport& report,
                           const std::string& space_hash_hex = "") {
  json methods = json::object();
  for (const MethodReport& mr : report.methods) {
    methods[method_name(mr.method)] =
        json{{"raw", mr.raw},
             {"box", box_to_json(mr.box)},
             {"mean_seconds", mr.mean_seconds},
             {"evals", mr.mean_evals},
             {"per_init", {{"evals", mr.evals}, {"seconds", mr.seconds}}}};
  }
  json j{{"methods", methods}, {"config", bench_config_to_json(report.config)}};
  if (!space_hash_hex.empty()) j["space_hash"] = space_hash_hex;
  return j;
}

inline BenchmarkReport report_from_json(const json& j) {
  BenchmarkReport report;
  report.config = bench_config_from_json(j.at("config"));
  // Preserve the config's method order; the JSON object is keyed by name.
  for (Method m : report.config.methods) {
    const json& jm = j.at("methods").at(method_name(m));
    MethodReport mr;
    mr.method = m;
    mr.raw = jm.at("raw").get<std::vector<double>>();
    mr.box = box_from_json(jm.at("box"));
    mr.mean_seconds = jm.at("mean_seconds").get<double>();
    mr.mean_evals = jm.at("evals").get<double>();
    mr.evals = jm.at("per_init").at("evals").get<std::vector<std::uint64_t>>();
    mr.seconds = jm.at("per_init").at("seconds").get<std::vector<double>>();
    report.methods.push_back(std::move(mr));
  }
  return report;
}

// One row per (method, init), then one summary row per method.
inline std::string report_to_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "method,init,best_f,evals,seconds\n";
  for (const MethodReport& mr : report.methods)
    for (std::size_t i = 0; i < mr.raw.size(); ++i)
      out << method_name(mr.method) << ',' << i << ','
          << format_double(mr.raw[i]) << ',' << mr.evals[i] << ','
          << format_double(mr.seconds[i]) << '\n';
  out << "summary,method,min,q1,median,q3,max,mean_evals,mean_seconds\n";
  for (const MethodReport& mr : report.methods)
    out << "summary," << method_name(mr.method) << ','
        << format_double(mr.box.min) << ',' << format_double(mr.box.q1) << ','
        << format_double(mr.box.median) << ',' << format_double(mr.box.q3)
        << ',' << format_double(mr.box.max) << ','
        << format_double(mr.mean_evals) << ','
        << format_double(mr.mean_seconds) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

struct RunManifest {
  std::map<std::string, std::string> artifacts;      // name -> path
  std::map<std::string, std::uint64_t> seeds;        // name -> seed
  std::map<std::string, std::string> config_hashes;  // name -> fnv1a64 hex
};

inline json manifest_to_json(const RunManifest& m) {
  return json{{"artifacts", m.artifacts},
              {"seeds", m.seeds},
              {"config_hashes", m.config_hashes}};
}

inline RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  if (j.contains("artifacts"))
    m.artifacts = j["artifacts"].get<std::map<std::string, std::string>>();
  if (j.contains("seeds"))
    m.seeds = j["seeds"].get<std::map<std::string, std::uint64_t>>();
  if (j.contains("config_hashes"))
    m.config_hashes = j["config_hashes"].get<std::map<std::string, std::string>>();
  return m;
}

// Manifests are only written once every artifact they reference exists.
inline void write_manifest(const std::string& path, const RunManifest& m) {
  for (const auto& [name, artifact_path] : m.artifacts)
    if (!std::filesystem::exists(artifact_path))
      throw CliError("missing-artifact",
                     "manifest entry " + name + " missing: " + artifact_path);
  write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

}  // namespace knobtune
