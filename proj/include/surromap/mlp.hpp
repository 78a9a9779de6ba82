#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace surromap {

/// Per-variable affine normalization: normalized = (raw - shift) / scale.
struct AffineScaler {
  double shift = 0.0;
  double scale = 1.0;

  /// Maps [lo, hi] onto [-1, 1]. A degenerate interval keeps unit scale.
  static AffineScaler from_range(double lo, double hi);

  double normalize(double raw) const { return (raw - shift) / scale; }
  double denormalize(double normalized) const { return normalized * scale + shift; }
};

struct TrainingConfig {
  double learning_rate = 0.05;
  std::size_t epochs = 20000;
  double weight_decay = 0.0;
  std::uint64_t rng_seed = 1;
  /// Early stop once the (normalized) training MSE drops to this value.
  double target_mse = 0.0;

  void validate() const;
};

/// Rows of inputs with one scalar target each.
struct Dataset {
  std::size_t n_inputs = 0;
  std::vector<double> inputs;  // row-major, size() x n_inputs
  std::vector<double> targets;
  std::vector<std::string> input_names;
  std::vector<std::string> input_units;
  std::string target_name;
  std::string target_unit;

  std::size_t size() const { return targets.size(); }
  std::span<const double> row(std::size_t r) const { return {inputs.data() + r * n_inputs, n_inputs}; }
  void add(std::span<const double> x, double target);
  void validate() const;
};

/// Single-hidden-layer perceptron with tanh hidden units and one linear output.
struct MlpNetwork {
  std::size_t n_inputs = 0;
  std::size_t n_hidden = 0;
  std::vector<double> input_weights;  // n_hidden x n_inputs, row j feeds hidden unit j
  std::vector<double> hidden_biases;
  std::vector<double> output_weights;
  double output_bias = 0.0;
  std::vector<AffineScaler> input_scalers;
  AffineScaler output_scaler;
  std::vector<std::string> input_names;
  std::string output_name;
  std::optional<TrainingConfig> trained_with;

  /// All parameters zero, identity scalers.
  static MlpNetwork zeros(std::size_t n_inputs, std::size_t n_hidden);

  double& weight(std::size_t j, std::size_t i) { return input_weights[j * n_inputs + i]; }
  double weight(std::size_t j, std::size_t i) const { return input_weights[j * n_inputs + i]; }

  std::size_t parameter_count() const;
  void validate() const;
};

struct TrainingResult {
  MlpNetwork net;
  std::vector<double> loss_history;  // normalized-unit MSE after each epoch
};

struct ErrorReport {
  double mse = 0.0;
  double max_abs_error = 0.0;
  std::vector<double> relative_errors;  // (prediction - target) / |target| per pattern
};

/// Regularized loss and its gradient in the flattened parameter order.
struct LossGradient {
  double loss = 0.0;
  double mse = 0.0;
  std::vector<double> gradient;
};

std::size_t param_count(std::size_t n_inputs, std::size_t n_hidden);

double forward(const MlpNetwork& net, std::span<const double> x);

/// tanh outputs of every hidden unit for raw input x.
std::vector<double> hidden_activations(const MlpNetwork& net, std::span<const double> x);

/// Scalers fitted to the dataset's min/max, weights uniform in
/// [-0.5, 0.5] / sqrt(n_inputs) drawn from `seed`.
MlpNetwork initialize_network(const Dataset& data, std::size_t n_hidden, std::uint64_t seed);

/// Full-batch gradient descent on MSE + weight_decay * sum(weights^2),
/// starting from the weights already in `net`.
TrainingResult train(const MlpNetwork& net, const Dataset& data, const TrainingConfig& cfg);

/// initialize_network(data, n_hidden, cfg.rng_seed) followed by train().
TrainingResult train_new(const Dataset& data, std::size_t n_hidden, const TrainingConfig& cfg);

ErrorReport evaluate(const MlpNetwork& net, const Dataset& data);

MlpNetwork prune_hidden_units(const MlpNetwork& net, std::span<const std::size_t> keep);

// Flattened order: input weights (row-major), hidden biases, output weights, output bias.
std::vector<double> parameters(const MlpNetwork& net);
void set_parameters(MlpNetwork& net, std::span<const double> params);

LossGradient loss_and_gradient(const MlpNetwork& net, const Dataset& data, double weight_decay);

std::string serialize(const MlpNetwork& net);
MlpNetwork parse_network(std::string_view text);

}  // namespace surromap
