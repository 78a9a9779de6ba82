#include "surromap/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "surromap/error.hpp"
#include "surromap/random.hpp"
#include "surromap/text_format.hpp"

namespace surromap {

namespace {

constexpr double kCollapsedWidth = 1e-9;

}  // namespace

std::vector<ActivationRange> activation_ranges(const MlpNetwork& net, const FactorSpace& space, std::size_t samples,
                                               std::uint64_t seed) {
  space.validate();
  if (space.size() != net.n_inputs) {
    throw std::invalid_argument("factor space has " + std::to_string(space.size()) + " factors, network has " +
                                std::to_string(net.n_inputs) + " inputs");
  }
  if (samples < 1) throw std::invalid_argument("activation range needs at least one sample");
  std::vector<ActivationRange> ranges(net.n_hidden, {1.0, -1.0});
  Rng rng(seed);
  std::vector<double> x(net.n_inputs);
  for (std::size_t s = 0; s < samples; ++s) {
    for (std::size_t i = 0; i < net.n_inputs; ++i) x[i] = rng.uniform(space.factors[i].lower, space.factors[i].upper);
    const auto h = hidden_activations(net, x);
    for (std::size_t j = 0; j < net.n_hidden; ++j) {
      ranges[j].lower = std::min(ranges[j].lower, h[j]);
      ranges[j].upper = std::max(ranges[j].upper, h[j]);
    }
  }
  return ranges;
}

std::vector<NeuronScore> hidden_unit_sensitivity(const MlpNetwork& net, const FactorSpace& space,
                                                 const EfastConfig& cfg, std::size_t range_samples) {
  net.validate();
  const auto ranges = activation_ranges(net, space, range_samples, cfg.rng_seed);

  std::vector<NeuronScore> scores(net.n_hidden);
  std::vector<std::size_t> live;
  double fixed_part = net.output_bias;
  for (std::size_t j = 0; j < net.n_hidden; ++j) {
    scores[j].index = j;
    if (ranges[j].upper - ranges[j].lower <= kCollapsedWidth) {
      scores[j].collapsed = true;
      fixed_part += net.output_weights[j] * 0.5 * (ranges[j].lower + ranges[j].upper);
    } else {
      live.push_back(j);
    }
  }

  if (live.size() == 1) {
    scores[live[0]].mean_total = net.output_weights[live[0]] != 0.0 ? 1.0 : 0.0;
    return scores;
  }
  if (live.empty()) return scores;

  FactorSpace units;
  std::vector<double> weights;
  for (std::size_t j : live) {
    units.factors.push_back({"h" + std::to_string(j), ranges[j].lower, ranges[j].upper});
    weights.push_back(net.output_weights[j]);
  }
  const auto output_layer = [&weights, fixed_part](std::span<const double> a) {
    double y = fixed_part;
    for (std::size_t m = 0; m < a.size(); ++m) y += weights[m] * a[m];
    return y;
  };
  const auto result = efast_indices(output_layer, units, sized_for(cfg, units.size()));
  for (std::size_t m = 0; m < live.size(); ++m) {
    scores[live[m]].mean_total = std::max(0.0, result.total[m]);
    scores[live[m]].std_total = result.total_std[m];
  }
  return scores;
}

UnitSelection select_units(std::span<const NeuronScore> scores, double threshold) {
  if (scores.empty()) throw std::invalid_argument("no neuron scores to select from");
  if (!(threshold >= 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must lie in [0, 1)");
  UnitSelection sel;
  for (const auto& s : scores) {
    if (s.mean_total >= threshold) sel.keep.push_back(s.index);
  }
  if (sel.keep.empty()) {
    const auto best = std::max_element(scores.begin(), scores.end(), [](const NeuronScore& a, const NeuronScore& b) {
      return a.mean_total < b.mean_total;
    });
    sel.keep.push_back(best->index);
    sel.degenerate = true;
  }
  std::sort(sel.keep.begin(), sel.keep.end());
  return sel;
}

PruneReport prune_and_retrain(const MlpNetwork& net, const Dataset& train_data, const Dataset& generalization_data,
                              const TrainingConfig& train_cfg, const EfastConfig& efast_cfg, double threshold) {
  PruneReport report;
  report.scores = hidden_unit_sensitivity(net, training_domain(net), efast_cfg);
  report.selection = select_units(report.scores, threshold);
  for (auto& s : report.scores) {
    s.keep = std::binary_search(report.selection.keep.begin(), report.selection.keep.end(), s.index);
  }
  report.n_hidden_before = net.n_hidden;
  report.n_hidden_after = report.selection.keep.size();
  report.param_count_before = param_count(net.n_inputs, net.n_hidden);
  report.param_count_after = param_count(net.n_inputs, report.n_hidden_after);
  report.train_before = evaluate(net, train_data);
  report.generalization_before = evaluate(net, generalization_data);

  // The reduced architecture is relearned from scratch, not inherited.
  const MlpNetwork reduced = prune_hidden_units(net, report.selection.keep);
  try {
    auto retrained = train_new(train_data, reduced.n_hidden, train_cfg);
    retrained.net.input_names = net.input_names;
    retrained.net.output_name = net.output_name;
    report.train_after = evaluate(retrained.net, train_data);
    report.generalization_after = evaluate(retrained.net, generalization_data);
    report.pruned = std::move(retrained.net);
  } catch (const TrainingDiverged& e) {
    report.failure = e.what();
  }
  return report;
}

std::string prune_table(const PruneReport& report) {
  std::string out = "neuron,mean,std,kept\n";
  for (const auto& s : report.scores) {
    out += std::to_string(s.index) + "," + text::format_double(s.mean_total) + "," + text::format_double(s.std_total) +
           "," + (s.keep ? "1" : "0") + "\n";
  }
  out += "# n_hidden_before " + std::to_string(report.n_hidden_before) + "\n";
  out += "# n_hidden_after " + std::to_string(report.n_hidden_after) + "\n";
  out += "# param_count_before " + std::to_string(report.param_count_before) + "\n";
  out += "# param_count_after " + std::to_string(report.param_count_after) + "\n";
  out += "# generalization_mse_before " + text::format_double(report.generalization_before.mse) + "\n";
  if (report.ok()) {
    out += "# generalization_mse_after " + text::format_double(report.generalization_after.mse) + "\n";
  } else {
    out += "# retraining_failed " + report.failure + "\n";
  }
  if (report.selection.degenerate) out += "# degenerate_selection 1\n";
  return out;
}

}  // namespace surromap
