#include "surromap/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "surromap/error.hpp"
#include "surromap/random.hpp"
#include "surromap/text_format.hpp"

namespace surromap {

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string describe_parameter(const MlpNetwork& net, std::size_t k) {
  const std::size_t nw = net.n_hidden * net.n_inputs;
  if (k < nw) return "input_weight[" + std::to_string(k / net.n_inputs) + "][" + std::to_string(k % net.n_inputs) + "]";
  k -= nw;
  if (k < net.n_hidden) return "hidden_bias[" + std::to_string(k) + "]";
  k -= net.n_hidden;
  if (k < net.n_hidden) return "output_weight[" + std::to_string(k) + "]";
  return "output_bias";
}

// Inputs and targets mapped through the network's scalers.
struct NormalizedData {
  std::size_t n_inputs;
  std::vector<double> inputs;
  std::vector<double> targets;
};

NormalizedData normalize(const MlpNetwork& net, const Dataset& data) {
  NormalizedData out{data.n_inputs, data.inputs, data.targets};
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t i = 0; i < data.n_inputs; ++i) {
      out.inputs[r * data.n_inputs + i] = net.input_scalers[i].normalize(data.inputs[r * data.n_inputs + i]);
    }
    out.targets[r] = net.output_scaler.normalize(data.targets[r]);
  }
  return out;
}

LossGradient loss_and_gradient_normalized(const MlpNetwork& net, const NormalizedData& data, double weight_decay) {
  const std::size_t ne = net.n_inputs;
  const std::size_t nc = net.n_hidden;
  const std::size_t n = data.targets.size();
  LossGradient out;
  out.gradient.assign(net.parameter_count(), 0.0);
  double* g_w = out.gradient.data();
  double* g_b = g_w + nc * ne;
  double* g_v = g_b + nc;
  double& g_c = out.gradient.back();

  std::vector<double> h(nc);
  double sse = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = data.inputs.data() + r * ne;
    double y = net.output_bias;
    for (std::size_t j = 0; j < nc; ++j) {
      double a = net.hidden_biases[j];
      for (std::size_t i = 0; i < ne; ++i) a += net.weight(j, i) * x[i];
      h[j] = std::tanh(a);
      y += net.output_weights[j] * h[j];
    }
    const double err = y - data.targets[r];
    sse += err * err;
    const double dy = 2.0 * err / static_cast<double>(n);
    g_c += dy;
    for (std::size_t j = 0; j < nc; ++j) {
      g_v[j] += dy * h[j];
      const double da = dy * net.output_weights[j] * (1.0 - h[j] * h[j]);
      g_b[j] += da;
      for (std::size_t i = 0; i < ne; ++i) g_w[j * ne + i] += da * x[i];
    }
  }
  out.mse = sse / static_cast<double>(n);

  double penalty = 0.0;
  for (std::size_t k = 0; k < nc * ne; ++k) {
    penalty += net.input_weights[k] * net.input_weights[k];
    g_w[k] += 2.0 * weight_decay * net.input_weights[k];
  }
  for (std::size_t j = 0; j < nc; ++j) {
    penalty += net.output_weights[j] * net.output_weights[j];
    g_v[j] += 2.0 * weight_decay * net.output_weights[j];
  }
  out.loss = out.mse + weight_decay * penalty;
  return out;
}

void check_dimensions(const MlpNetwork& net, const Dataset& data) {
  if (data.n_inputs != net.n_inputs) {
    throw std::invalid_argument("dataset has " + std::to_string(data.n_inputs) + " inputs, network expects " +
                                std::to_string(net.n_inputs));
  }
}

}  // namespace

AffineScaler AffineScaler::from_range(double lo, double hi) {
  const double half = 0.5 * (hi - lo);
  return {0.5 * (hi + lo), half > 0.0 ? half : 1.0};
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight_decay must be nonnegative");
  if (!(target_mse >= 0.0)) throw std::invalid_argument("target_mse must be nonnegative");
}

void Dataset::add(std::span<const double> x, double target) {
  if (x.size() != n_inputs) {
    throw std::invalid_argument("row has " + std::to_string(x.size()) + " inputs, dataset expects " +
                                std::to_string(n_inputs));
  }
  inputs.insert(inputs.end(), x.begin(), x.end());
  targets.push_back(target);
}

void Dataset::validate() const {
  if (n_inputs < 1) throw std::invalid_argument("dataset needs at least one input");
  if (targets.empty()) throw std::invalid_argument("dataset is empty");
  if (inputs.size() != targets.size() * n_inputs) throw std::invalid_argument("dataset rows are inconsistent");
  if (!all_finite(inputs) || !all_finite(targets)) throw std::invalid_argument("dataset has non-finite entries");
}

MlpNetwork MlpNetwork::zeros(std::size_t n_inputs, std::size_t n_hidden) {
  if (n_inputs < 1 || n_hidden < 1) throw std::invalid_argument("network needs n_inputs >= 1 and n_hidden >= 1");
  MlpNetwork net;
  net.n_inputs = n_inputs;
  net.n_hidden = n_hidden;
  net.input_weights.assign(n_inputs * n_hidden, 0.0);
  net.hidden_biases.assign(n_hidden, 0.0);
  net.output_weights.assign(n_hidden, 0.0);
  net.input_scalers.assign(n_inputs, AffineScaler{});
  for (std::size_t i = 0; i < n_inputs; ++i) net.input_names.push_back("x" + std::to_string(i + 1));
  net.output_name = "y";
  return net;
}

std::size_t MlpNetwork::parameter_count() const { return param_count(n_inputs, n_hidden); }

void MlpNetwork::validate() const {
  if (n_inputs < 1 || n_hidden < 1) throw std::invalid_argument("network needs n_inputs >= 1 and n_hidden >= 1");
  if (input_weights.size() != n_inputs * n_hidden || hidden_biases.size() != n_hidden ||
      output_weights.size() != n_hidden || input_scalers.size() != n_inputs || input_names.size() != n_inputs) {
    throw std::invalid_argument("network containers do not match the declared dimensions");
  }
  if (!all_finite(input_weights) || !all_finite(hidden_biases) || !all_finite(output_weights) ||
      !std::isfinite(output_bias)) {
    throw std::invalid_argument("network has non-finite parameters");
  }
  auto bad = [](const AffineScaler& s) { return !(s.scale > 0.0) || !std::isfinite(s.scale) || !std::isfinite(s.shift); };
  if (std::any_of(input_scalers.begin(), input_scalers.end(), bad) || bad(output_scaler)) {
    throw std::invalid_argument("scaler factors must be finite and strictly positive");
  }
}

std::size_t param_count(std::size_t n_inputs, std::size_t n_hidden) {
  if (n_inputs < 1 || n_hidden < 1) throw std::invalid_argument("param_count needs n_inputs >= 1 and n_hidden >= 1");
  return (n_inputs + 1) * n_hidden + (n_hidden + 1) * 1;
}

std::vector<double> hidden_activations(const MlpNetwork& net, std::span<const double> x) {
  if (x.size() != net.n_inputs) {
    throw std::invalid_argument("input has length " + std::to_string(x.size()) + ", expected " +
                                std::to_string(net.n_inputs));
  }
  std::vector<double> h(net.n_hidden);
  for (std::size_t j = 0; j < net.n_hidden; ++j) {
    double a = net.hidden_biases[j];
    for (std::size_t i = 0; i < net.n_inputs; ++i) a += net.weight(j, i) * net.input_scalers[i].normalize(x[i]);
    h[j] = std::tanh(a);
  }
  return h;
}

double forward(const MlpNetwork& net, std::span<const double> x) {
  const auto h = hidden_activations(net, x);
  double y = net.output_bias;
  for (std::size_t j = 0; j < net.n_hidden; ++j) y += net.output_weights[j] * h[j];
  return net.output_scaler.denormalize(y);
}

MlpNetwork initialize_network(const Dataset& data, std::size_t n_hidden, std::uint64_t seed) {
  data.validate();
  MlpNetwork net = MlpNetwork::zeros(data.n_inputs, n_hidden);
  for (std::size_t i = 0; i < data.n_inputs; ++i) {
    double lo = data.inputs[i], hi = data.inputs[i];
    for (std::size_t r = 0; r < data.size(); ++r) {
      lo = std::min(lo, data.inputs[r * data.n_inputs + i]);
      hi = std::max(hi, data.inputs[r * data.n_inputs + i]);
    }
    net.input_scalers[i] = AffineScaler::from_range(lo, hi);
  }
  const auto [tlo, thi] = std::minmax_element(data.targets.begin(), data.targets.end());
  net.output_scaler = AffineScaler::from_range(*tlo, *thi);
  if (data.input_names.size() == data.n_inputs) net.input_names = data.input_names;
  if (!data.target_name.empty()) net.output_name = data.target_name;

  Rng rng(seed);
  const double span = 1.0 / std::sqrt(static_cast<double>(data.n_inputs));
  std::vector<double> params(net.parameter_count());
  for (auto& p : params) p = rng.uniform(-0.5, 0.5) * span;
  set_parameters(net, params);
  return net;
}

std::vector<double> parameters(const MlpNetwork& net) {
  std::vector<double> p;
  p.reserve(net.parameter_count());
  p.insert(p.end(), net.input_weights.begin(), net.input_weights.end());
  p.insert(p.end(), net.hidden_biases.begin(), net.hidden_biases.end());
  p.insert(p.end(), net.output_weights.begin(), net.output_weights.end());
  p.push_back(net.output_bias);
  return p;
}

void set_parameters(MlpNetwork& net, std::span<const double> params) {
  if (params.size() != net.parameter_count()) {
    throw std::invalid_argument("expected " + std::to_string(net.parameter_count()) + " parameters, got " +
                                std::to_string(params.size()));
  }
  auto it = params.begin();
  std::copy_n(it, net.input_weights.size(), net.input_weights.begin());
  it += static_cast<std::ptrdiff_t>(net.input_weights.size());
  std::copy_n(it, net.n_hidden, net.hidden_biases.begin());
  it += static_cast<std::ptrdiff_t>(net.n_hidden);
  std::copy_n(it, net.n_hidden, net.output_weights.begin());
  net.output_bias = params.back();
}

LossGradient loss_and_gradient(const MlpNetwork& net, const Dataset& data, double weight_decay) {
  check_dimensions(net, data);
  data.validate();
  return loss_and_gradient_normalized(net, normalize(net, data), weight_decay);
}

TrainingResult train(const MlpNetwork& net, const Dataset& data, const TrainingConfig& cfg) {
  cfg.validate();
  net.validate();
  check_dimensions(net, data);
  data.validate();

  TrainingResult result{net, {}};
  MlpNetwork& work = result.net;
  const NormalizedData nd = normalize(work, data);
  std::vector<double> params = parameters(work);
  LossGradient lg = loss_and_gradient_normalized(work, nd, cfg.weight_decay);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t k = 0; k < params.size(); ++k) params[k] -= cfg.learning_rate * lg.gradient[k];
    for (std::size_t k = 0; k < params.size(); ++k) {
      if (!std::isfinite(params[k])) {
        throw TrainingDiverged(epoch, describe_parameter(work, k) + " = " + text::format_double(params[k]));
      }
    }
    set_parameters(work, params);
    lg = loss_and_gradient_normalized(work, nd, cfg.weight_decay);
    if (!std::isfinite(lg.loss)) {
      std::size_t worst = 0;
      for (std::size_t k = 0; k < params.size(); ++k) {
        if (std::abs(params[k]) > std::abs(params[worst])) worst = k;
      }
      throw TrainingDiverged(epoch, "non-finite loss; largest parameter " + describe_parameter(work, worst) + " = " +
                                        text::format_double(params[worst]));
    }
    result.loss_history.push_back(lg.mse);
    if (lg.mse <= cfg.target_mse) break;
  }
  work.trained_with = cfg;
  return result;
}

TrainingResult train_new(const Dataset& data, std::size_t n_hidden, const TrainingConfig& cfg) {
  return train(initialize_network(data, n_hidden, cfg.rng_seed), data, cfg);
}

ErrorReport evaluate(const MlpNetwork& net, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("cannot evaluate on an empty dataset");
  check_dimensions(net, data);
  data.validate();
  ErrorReport report;
  double sse = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    const double y = forward(net, data.row(r));
    const double err = y - data.targets[r];
    sse += err * err;
    report.max_abs_error = std::max(report.max_abs_error, std::abs(err));
    const double denom = std::abs(data.targets[r]);
    report.relative_errors.push_back(denom > 0.0 ? err / denom : err);
  }
  report.mse = sse / static_cast<double>(data.size());
  return report;
}

MlpNetwork prune_hidden_units(const MlpNetwork& net, std::span<const std::size_t> keep) {
  if (keep.empty()) throw std::invalid_argument("keep-set is empty; a network needs at least one hidden unit");
  std::vector<std::size_t> sorted(keep.begin(), keep.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("keep-set has duplicate indices");
  }
  if (sorted.back() >= net.n_hidden) {
    throw std::invalid_argument("keep index " + std::to_string(sorted.back()) + " out of range for " +
                                std::to_string(net.n_hidden) + " hidden units");
  }
  MlpNetwork out = net;
  out.n_hidden = sorted.size();
  out.input_weights.clear();
  out.hidden_biases.clear();
  out.output_weights.clear();
  for (std::size_t j : sorted) {
    for (std::size_t i = 0; i < net.n_inputs; ++i) out.input_weights.push_back(net.weight(j, i));
    out.hidden_biases.push_back(net.hidden_biases[j]);
    out.output_weights.push_back(net.output_weights[j]);
  }
  return out;
}

std::string serialize(const MlpNetwork& net) {
  net.validate();
  text::KeyValueDocument doc;
  doc.set("format", std::string("surromap-mlp 1"));
  doc.set("n_inputs", static_cast<double>(net.n_inputs));
  doc.set("n_hidden", static_cast<double>(net.n_hidden));
  std::string names;
  for (const auto& n : net.input_names) names += (names.empty() ? "" : " ") + n;
  doc.set("input_names", names);
  doc.set("output_name", net.output_name);
  std::vector<double> shifts, scales;
  for (const auto& s : net.input_scalers) {
    shifts.push_back(s.shift);
    scales.push_back(s.scale);
  }
  doc.set("input_shift", shifts);
  doc.set("input_scale", scales);
  doc.set("output_shift", net.output_scaler.shift);
  doc.set("output_scale", net.output_scaler.scale);
  for (std::size_t j = 0; j < net.n_hidden; ++j) {
    doc.set("input_weights." + std::to_string(j),
            std::span<const double>(net.input_weights.data() + j * net.n_inputs, net.n_inputs));
  }
  doc.set("hidden_biases", net.hidden_biases);
  doc.set("output_weights", net.output_weights);
  doc.set("output_bias", net.output_bias);
  if (net.trained_with) {
    const auto& c = *net.trained_with;
    doc.set("train.learning_rate", c.learning_rate);
    doc.set("train.epochs", static_cast<double>(c.epochs));
    doc.set("train.weight_decay", c.weight_decay);
    doc.set("train.rng_seed", std::to_string(c.rng_seed));
    doc.set("train.target_mse", c.target_mse);
  }
  return doc.str();
}

MlpNetwork parse_network(std::string_view text) {
  const auto doc = text::KeyValueDocument::parse(text);
  if (!doc.has("format") || doc.get("format") != "surromap-mlp 1") throw IoError("not a surromap-mlp document");
  const std::size_t ne = doc.get_count("n_inputs");
  const std::size_t nc = doc.get_count("n_hidden");
  if (ne < 1 || nc < 1) throw IoError("network dimensions must be at least 1");
  MlpNetwork net = MlpNetwork::zeros(ne, nc);
  net.input_names = doc.get_words("input_names");
  net.output_name = doc.get("output_name");
  const auto shifts = doc.get_doubles("input_shift");
  const auto scales = doc.get_doubles("input_scale");
  if (shifts.size() != ne || scales.size() != ne || net.input_names.size() != ne) {
    throw IoError("input scaler/name count does not match n_inputs");
  }
  for (std::size_t i = 0; i < ne; ++i) net.input_scalers[i] = {shifts[i], scales[i]};
  net.output_scaler = {doc.get_double("output_shift"), doc.get_double("output_scale")};
  for (std::size_t j = 0; j < nc; ++j) {
    const auto row = doc.get_doubles("input_weights." + std::to_string(j));
    if (row.size() != ne) throw IoError("input_weights." + std::to_string(j) + " has wrong length");
    std::copy(row.begin(), row.end(), net.input_weights.begin() + static_cast<std::ptrdiff_t>(j * ne));
  }
  net.hidden_biases = doc.get_doubles("hidden_biases");
  net.output_weights = doc.get_doubles("output_weights");
  net.output_bias = doc.get_double("output_bias");
  if (doc.has("train.learning_rate")) {
    TrainingConfig c;
    c.learning_rate = doc.get_double("train.learning_rate");
    c.epochs = doc.get_count("train.epochs");
    c.weight_decay = doc.get_double("train.weight_decay");
    c.rng_seed = std::stoull(doc.get("train.rng_seed"));
    c.target_mse = doc.get_double("train.target_mse");
    net.trained_with = c;
  }
  try {
    net.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid network document: ") + e.what());
  }
  return net;
}

}  // namespace surromap
