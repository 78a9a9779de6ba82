#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "surromap/mlp.hpp"

namespace surromap {

struct Factor {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

/// Independent uniform factors.
struct FactorSpace {
  std::vector<Factor> factors;

  std::size_t size() const { return factors.size(); }
  void validate() const;
};

struct EfastConfig {
  std::size_t samples_per_curve = 1025;
  std::size_t interference = 4;  // harmonics M kept per frequency
  std::size_t resamplings = 5;
  std::uint64_t rng_seed = 1;

  void validate() const;
};

/// Frequencies for one search curve: `target` drives the factor of interest,
/// `complement` the remaining k - 1 factors.
struct FrequencySet {
  std::size_t target = 0;
  std::vector<std::size_t> complement;
};

/// Largest target frequency admitted by `samples` under the Nyquist bound.
std::size_t max_target_frequency(std::size_t samples, std::size_t interference);

/// Smallest odd curve length whose frequency set separates k factors.
std::size_t min_samples(std::size_t k, std::size_t interference);

/// `cfg` with samples_per_curve raised to min_samples() when needed.
EfastConfig sized_for(const EfastConfig& cfg, std::size_t k);

FrequencySet assign_frequencies(std::size_t k, const EfastConfig& cfg);

/// Row-major samples x k matrix along the search curve
/// x_i(s) = 1/2 + asin(sin(w_i s + phi_i)) / pi, mapped onto each factor's range.
std::vector<double> search_curve(const FactorSpace& space, std::span<const std::size_t> frequencies,
                                 std::span<const double> phases, std::size_t samples);

/// Frequencies and phases for every (replicate, factor of interest) curve.
struct EfastPlan {
  std::size_t k = 0;
  std::size_t resamplings = 0;
  // curve (r, i) occupies [(r * k + i) * k, (r * k + i + 1) * k)
  std::vector<std::size_t> frequencies;
  std::vector<double> phases;
  std::size_t target_frequency = 0;

  std::span<const std::size_t> curve_frequencies(std::size_t r, std::size_t i) const {
    return {frequencies.data() + (r * k + i) * k, k};
  }
  std::span<const double> curve_phases(std::size_t r, std::size_t i) const {
    return {phases.data() + (r * k + i) * k, k};
  }
};

EfastPlan make_plan(std::size_t k, const EfastConfig& cfg);

struct SensitivityResult {
  std::vector<std::string> names;
  std::vector<double> first_order;  // replicate means
  std::vector<double> total;
  std::vector<double> first_order_std;
  std::vector<double> total_std;
  // Per replicate, row-major resamplings x k.
  std::vector<double> first_order_replicates;
  std::vector<double> total_replicates;
  double variance = 0.0;
  bool constant_output = false;
  std::vector<bool> irrelevant;  // set by input_relevance()
};

using ScalarFunction = std::function<double(std::span<const double>)>;

SensitivityResult efast_indices(const ScalarFunction& f, const FactorSpace& space, const EfastConfig& cfg);

/// Same estimator with explicit curves; permuting the plan permutes the result.
SensitivityResult efast_indices(const ScalarFunction& f, const FactorSpace& space, const EfastConfig& cfg,
                                const EfastPlan& plan);

/// Input ranges a network was trained on, recovered from its scalers.
FactorSpace training_domain(const MlpNetwork& net);

/// EFAST on x -> forward(net, x); inputs with total index below `threshold`
/// are flagged irrelevant.
SensitivityResult input_relevance(const MlpNetwork& net, const FactorSpace& space, const EfastConfig& cfg,
                                  double threshold = 0.05);

/// `factor,first_order,total,std_total` table, one line per factor.
std::string sensitivity_table(const SensitivityResult& result);

}  // namespace surromap
