#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "surromap/efast.hpp"
#include "surromap/mlp.hpp"

namespace surromap {

struct NeuronScore {
  std::size_t index = 0;
  double mean_total = 0.0;
  double std_total = 0.0;
  bool keep = true;
  bool collapsed = false;  // activation constant over the input space
};

/// Observed activation interval of every hidden unit.
struct ActivationRange {
  double lower = 0.0;
  double upper = 0.0;
};

std::vector<ActivationRange> activation_ranges(const MlpNetwork& net, const FactorSpace& space, std::size_t samples,
                                               std::uint64_t seed);

/// EFAST total index of each hidden unit, with the unit activations taken as
/// independent uniform factors over their observed ranges and the output layer
/// as the analyzed function.
std::vector<NeuronScore> hidden_unit_sensitivity(const MlpNetwork& net, const FactorSpace& space,
                                                 const EfastConfig& cfg, std::size_t range_samples = 4096);

struct UnitSelection {
  std::vector<std::size_t> keep;
  bool degenerate = false;  // nothing cleared the threshold; best unit kept
};

UnitSelection select_units(std::span<const NeuronScore> scores, double threshold);

struct PruneReport {
  std::vector<NeuronScore> scores;
  UnitSelection selection;
  std::size_t n_hidden_before = 0;
  std::size_t n_hidden_after = 0;
  std::size_t param_count_before = 0;
  std::size_t param_count_after = 0;
  ErrorReport train_before;
  ErrorReport generalization_before;
  ErrorReport train_after;
  ErrorReport generalization_after;
  std::optional<MlpNetwork> pruned;
  std::string failure;  // non-empty when retraining failed

  bool ok() const { return pruned.has_value(); }
};

/// Score, select, prune and retrain the reduced architecture from a fresh
/// initialization with the same training configuration.
PruneReport prune_and_retrain(const MlpNetwork& net, const Dataset& train_data, const Dataset& generalization_data,
                              const TrainingConfig& train_cfg, const EfastConfig& efast_cfg, double threshold = 0.05);

/// `neuron,mean,std,kept` table followed by a `#`-prefixed summary block.
std::string prune_table(const PruneReport& report);

}  // namespace surromap
