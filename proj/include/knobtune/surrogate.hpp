// Surrogate environment: per-device feed-forward models fitted from
// measurement data and aggregated into the single objective that every
// optimizer queries, plus the synthetic device-data generator used in
// place of proprietary measurements.
#pragma once

#include <Eigen/Dense>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "knobtune/rng.hpp"
#include "knobtune/search_space.hpp"

namespace knobtune {

// Tanh hidden layers, identity output, scalar response.
struct MlpModel {
  struct Layer {
    Eigen::MatrixXd weight;  // [out x in]
    Eigen::VectorXd bias;    // [out]
  };
  std::vector<Layer> layers;
  double final_rmse = 0.0;  // training RMSE recorded by train_device_model

  int input_dim() const {
    return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols());
  }

  void check_shapes() const {
    if (layers.size() < 2)
      throw std::invalid_argument("MlpModel needs at least one hidden layer");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].weight.rows() != layers[l].bias.size())
        throw std::invalid_argument("MlpModel: bias/weight row mismatch");
      if (l > 0 && layers[l].weight.cols() != layers[l - 1].weight.rows())
        throw std::invalid_argument("MlpModel: layer dimensions do not chain");
      if (!layers[l].weight.allFinite() || !layers[l].bias.allFinite())
        throw std::invalid_argument("MlpModel: non-finite parameters");
    }
    if (layers.back().weight.rows() != 1)
      throw std::invalid_argument("MlpModel: output dimension must be 1");
  }
};

inline double mlp_forward(const MlpModel& model, const Eigen::VectorXd& y) {
  if (y.size() != model.input_dim())
    throw std::invalid_argument("mlp_forward: input dimension mismatch");
  Eigen::VectorXd h = y;
  Eigen::VectorXd a;
  const std::size_t last = model.layers.size() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    a = model.layers[l].bias;
    a.noalias() += model.layers[l].weight * h;
    h = a.array().tanh();
  }
  return model.layers[last].weight.row(0).dot(h) + model.layers[last].bias(0);
}

struct DeviceDataset {
  std::string device_id;
  std::vector<std::pair<TuningVector, double>> rows;
};

// Ground truth for synthetic devices: a Gaussian bump in normalized space,
// g(x) = amplitude * exp(-||n(x) - n(optimum)||^2 / (2 width^2)).
struct DeviceProfile {
  std::string device_id;
  TuningVector optimum;
  double amplitude = 1.0;
  double width = 0.5;
  double noise_std = 0.0;
  int n_rows = 1;
};

inline double device_ground_truth(const SearchSpace& space,
                                  const DeviceProfile& profile,
                                  const TuningVector& x) {
  const std::vector<double> y = normalize(space, x);
  const std::vector<double> peak = normalize(space, profile.optimum);
  double sq = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - peak[i];
    sq += d * d;
  }
  return profile.amplitude * std::exp(-sq / (2.0 * profile.width * profile.width));
}

inline DeviceDataset gen_synthetic_device_data(const SearchSpace& space,
                                               const DeviceProfile& profile,
                                               Rng& rng) {
  require_valid(space, profile.optimum);
  if (profile.noise_std < 0.0)
    throw std::invalid_argument("device profile: noise_std must be >= 0");
  if (profile.n_rows < 1)
    throw std::invalid_argument("device profile: n_rows must be >= 1");
  if (profile.width <= 0.0)
    throw std::invalid_argument("device profile: width must be > 0");
  DeviceDataset data;
  data.device_id = profile.device_id;
  data.rows.reserve(static_cast<std::size_t>(profile.n_rows));
  for (int i = 0; i < profile.n_rows; ++i) {
    TuningVector x = sample_uniform(space, rng);
    double value = device_ground_truth(space, profile, x);
    if (profile.noise_std > 0.0) value += rng.normal(0.0, profile.noise_std);
    data.rows.emplace_back(std::move(x), value);
  }
  return data;
}

struct MlpFitConfig {
  std::vector<int> hidden_sizes{32, 32};
  double learning_rate = 0.1;
  int epochs = 2000;
  std::uint64_t seed = 0;
};

namespace detail {

inline MlpModel init_mlp(int input_dim, const std::vector<int>& hidden, Rng& rng) {
  MlpModel model;
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : hidden) dims.push_back(h);
  dims.push_back(1);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    MlpModel::Layer layer;
    const int fan_in = dims[l];
    const int out = dims[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    layer.weight.resize(out, fan_in);
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < fan_in; ++c)
        layer.weight(r, c) = rng.uniform(-bound, bound);
    layer.bias = Eigen::VectorXd::Zero(out);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

}  // namespace detail

struct DeviceFitResult {
  MlpModel model;
  std::vector<double> loss_history;  // MSE at the start of each epoch
  double final_rmse = 0.0;
};

// Full-batch gradient descent on mean squared error over normalized inputs.
// Deterministic given config.seed.
inline DeviceFitResult train_device_model(const DeviceDataset& data,
                                          const SearchSpace& space,
                                          const MlpFitConfig& config) {
  if (data.rows.empty())
    throw std::invalid_argument("train_device_model: empty dataset");
  if (config.hidden_sizes.empty())
    throw std::invalid_argument("train_device_model: need at least one hidden layer");

  const int n = static_cast<int>(data.rows.size());
  const int dim = static_cast<int>(space.dimension());
  Eigen::MatrixXd inputs(n, dim);
  Eigen::VectorXd targets(n);
  for (int i = 0; i < n; ++i) {
    const std::vector<double> y = normalize(space, data.rows[i].first);
    for (int j = 0; j < dim; ++j) inputs(i, j) = y[j];
    targets(i) = data.rows[i].second;
  }

  Rng rng(config.seed);
  DeviceFitResult result;
  result.model = detail::init_mlp(dim, config.hidden_sizes, rng);
  auto& layers = result.model.layers;
  const std::size_t depth = layers.size();

  std::vector<Eigen::MatrixXd> acts(depth + 1);  // activations, rows = samples
  acts[0] = inputs;
  const double inv_n = 1.0 / static_cast<double>(n);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t l = 0; l < depth; ++l) {
      Eigen::MatrixXd z = acts[l] * layers[l].weight.transpose();
      z.rowwise() += layers[l].bias.transpose();
      acts[l + 1] = (l + 1 < depth) ? z.array().tanh().matrix() : std::move(z);
    }
    const Eigen::VectorXd residual = acts[depth].col(0) - targets;
    const double mse = residual.squaredNorm() * inv_n;
    if (!std::isfinite(mse))
      throw std::runtime_error("train_device_model: non-finite loss at epoch " +
                               std::to_string(epoch) + " (device " +
                               data.device_id + ")");
    result.loss_history.push_back(mse);

    // d(mse)/d(output) = 2 residual / n, then backprop through tanh layers.
    Eigen::MatrixXd delta = (2.0 * inv_n) * residual;
    for (std::size_t l = depth; l-- > 0;) {
      const Eigen::MatrixXd grad_w = delta.transpose() * acts[l];
      const Eigen::VectorXd grad_b = delta.colwise().sum().transpose();
      if (l > 0) {
        Eigen::MatrixXd back = delta * layers[l].weight;
        delta = back.array() * (1.0 - acts[l].array().square());
      }
      layers[l].weight -= config.learning_rate * grad_w;
      layers[l].bias -= config.learning_rate * grad_b;
    }
  }

  // Final forward pass for the recorded RMSE.
  Eigen::MatrixXd h = inputs;
  for (std::size_t l = 0; l + 1 < depth; ++l) {
    Eigen::MatrixXd z = h * layers[l].weight.transpose();
    z.rowwise() += layers[l].bias.transpose();
    h = z.array().tanh();
  }
  Eigen::VectorXd out = h * layers[depth - 1].weight.transpose().col(0);
  out.array() += layers[depth - 1].bias(0);
  result.final_rmse = std::sqrt((out - targets).squaredNorm() * inv_n);
  result.model.final_rmse = result.final_rmse;
  return result;
}

enum class Aggregation { kMean, kMin };

// The objective f(x): every device model evaluated on normalize(x), then
// mean or worst-case across devices.
struct SurrogateObjective {
  SearchSpace space;
  std::vector<MlpModel> devices;
  std::vector<std::string> device_ids;  // parallel to devices; may be empty
  Aggregation aggregation = Aggregation::kMean;

  void check() const {
    if (devices.empty())
      throw std::invalid_argument("SurrogateObjective: no device models");
    if (!device_ids.empty() && device_ids.size() != devices.size())
      throw std::invalid_argument(
          "SurrogateObjective: device_ids/devices size mismatch");
    for (const auto& d : devices) {
      d.check_shapes();
      if (d.input_dim() != static_cast<int>(space.dimension()))
        throw std::invalid_argument(
            "SurrogateObjective: device input dim does not match space");
    }
  }
};

inline double aggregate_eval(const SurrogateObjective& obj,
                             const TuningVector& x) {
  const std::vector<double> yv = normalize(obj.space, x);
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<long>(yv.size()));
  if (obj.aggregation == Aggregation::kMean) {
    double sum = 0.0;
    for (const auto& d : obj.devices) sum += mlp_forward(d, y);
    return sum / static_cast<double>(obj.devices.size());
  }
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& d : obj.devices) worst = std::min(worst, mlp_forward(d, y));
  return worst;
}

// The single path through which optimizers observe f. Owns the evaluation
// counter; concurrent callers never lose counts.
class MeteredObjective {
 public:
  MeteredObjective(const SearchSpace& space,
                   std::function<double(const TuningVector&)> fn)
      : space_(&space), fn_(std::move(fn)) {}

  explicit MeteredObjective(const SurrogateObjective& obj)
      : space_(&obj.space),
        fn_([&obj](const TuningVector& x) { return aggregate_eval(obj, x); }) {}

  double eval(const TuningVector& x) const {
    count_.fetch_add(1, std::memory_order_relaxed);
    return fn_(x);
  }

  std::uint64_t evaluations() const {
    return count_.load(std::memory_order_relaxed);
  }

  const SearchSpace& space() const { return *space_; }

 private:
  const SearchSpace* space_;
  std::function<double(const TuningVector&)> fn_;
  mutable std::atomic<std::uint64_t> count_{0};
};

}  // namespace knobtune
