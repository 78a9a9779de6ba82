#include "surromap/efast.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "surromap/random.hpp"
#include "surromap/text_format.hpp"

namespace surromap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kConstantVariance = 1e-12;

struct CurveIndices {
  double first_order = 0.0;
  double total = 0.0;
  double variance = 0.0;
};

// Spectrum power P_j = 2 |A_j|^2 with A_j = (1/N) sum_t y_t exp(-i j s_t),
// s_t = 2 pi t / N. For odd N the powers j = 1..(N-1)/2 sum to the variance.
class Spectrum {
 public:
  explicit Spectrum(std::size_t n) : n_(n), cos_(n), sin_(n) {
    for (std::size_t m = 0; m < n; ++m) {
      cos_[m] = std::cos(kTwoPi * static_cast<double>(m) / static_cast<double>(n));
      sin_[m] = std::sin(kTwoPi * static_cast<double>(m) / static_cast<double>(n));
    }
  }

  double power(std::span<const double> y, std::size_t j) const {
    double a = 0.0, b = 0.0;
    std::size_t phase = 0;
    const std::size_t step = j % n_;
    for (std::size_t t = 0; t < n_; ++t) {
      a += y[t] * cos_[phase];
      b += y[t] * sin_[phase];
      phase += step;
      if (phase >= n_) phase -= n_;
    }
    a /= static_cast<double>(n_);
    b /= static_cast<double>(n_);
    return 2.0 * (a * a + b * b);
  }

 private:
  std::size_t n_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

CurveIndices analyze_curve(const ScalarFunction& f, const FactorSpace& space, std::span<const std::size_t> freqs,
                           std::span<const double> phases, std::size_t target_frequency, std::size_t interference,
                           std::size_t samples, const Spectrum& spectrum) {
  const std::size_t k = space.size();
  const auto design = search_curve(space, freqs, phases, samples);
  std::vector<double> y(samples);
  for (std::size_t t = 0; t < samples; ++t) y[t] = f(std::span<const double>(design.data() + t * k, k));

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(samples);
  double variance = 0.0;
  for (double& v : y) {
    v -= mean;
    variance += v * v;
  }
  variance /= static_cast<double>(samples);

  CurveIndices out;
  out.variance = variance;
  if (variance < kConstantVariance) return out;

  double first = 0.0;
  for (std::size_t m = 1; m <= interference; ++m) first += spectrum.power(y, m * target_frequency);
  double complement = 0.0;
  for (std::size_t j = 1; j <= target_frequency / 2; ++j) complement += spectrum.power(y, j);
  out.first_order = first / variance;
  out.total = 1.0 - complement / variance;
  return out;
}

void mean_and_std(std::span<const double> replicates, std::size_t reps, std::size_t k, std::size_t i, double& mean,
                  double& sd) {
  mean = 0.0;
  for (std::size_t r = 0; r < reps; ++r) mean += replicates[r * k + i];
  mean /= static_cast<double>(reps);
  sd = 0.0;
  if (reps > 1) {
    for (std::size_t r = 0; r < reps; ++r) {
      const double d = replicates[r * k + i] - mean;
      sd += d * d;
    }
    sd = std::sqrt(sd / static_cast<double>(reps - 1));
  }
}

}  // namespace

void FactorSpace::validate() const {
  if (factors.empty()) throw std::invalid_argument("factor space is empty");
  for (const auto& f : factors) {
    if (!std::isfinite(f.lower) || !std::isfinite(f.upper) || !(f.lower < f.upper)) {
      throw std::invalid_argument("factor '" + f.name + "' needs finite bounds with lower < upper");
    }
  }
}

void EfastConfig::validate() const {
  if (interference < 1) throw std::invalid_argument("interference factor must be at least 1");
  if (resamplings < 1) throw std::invalid_argument("resamplings must be at least 1");
  if (samples_per_curve % 2 == 0) throw std::invalid_argument("samples_per_curve must be odd");
}

std::size_t max_target_frequency(std::size_t samples, std::size_t interference) {
  if (samples < 1 || interference < 1) return 0;
  return (samples - 1) / (2 * interference);
}

std::size_t min_samples(std::size_t k, std::size_t interference) {
  const std::size_t complement = k > 1 ? k - 1 : 1;
  const std::size_t target = 2 * interference * complement;
  return 2 * interference * target + 1;
}

EfastConfig sized_for(const EfastConfig& cfg, std::size_t k) {
  EfastConfig out = cfg;
  out.samples_per_curve = std::max(cfg.samples_per_curve, min_samples(k, cfg.interference));
  if (out.samples_per_curve % 2 == 0) ++out.samples_per_curve;
  return out;
}

FrequencySet assign_frequencies(std::size_t k, const EfastConfig& cfg) {
  if (k < 2) throw std::invalid_argument("EFAST needs at least two factors");
  cfg.validate();
  const std::size_t needed = min_samples(k, cfg.interference);
  if (cfg.samples_per_curve < needed) {
    throw std::invalid_argument("samples_per_curve " + std::to_string(cfg.samples_per_curve) +
                                " is too small for " + std::to_string(k) + " factors with interference " +
                                std::to_string(cfg.interference) + "; minimal admissible is " +
                                std::to_string(needed));
  }
  FrequencySet set;
  set.target = max_target_frequency(cfg.samples_per_curve, cfg.interference);
  const std::size_t max_complement = set.target / (2 * cfg.interference);
  const std::size_t n = k - 1;
  if (n == 1) {
    set.complement = {1};
  } else {
    const double step = static_cast<double>(max_complement - 1) / static_cast<double>(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      set.complement.push_back(1 + static_cast<std::size_t>(std::floor(step * static_cast<double>(j))));
    }
  }
  return set;
}

std::vector<double> search_curve(const FactorSpace& space, std::span<const std::size_t> frequencies,
                                 std::span<const double> phases, std::size_t samples) {
  const std::size_t k = space.size();
  if (frequencies.size() != k || phases.size() != k) {
    throw std::invalid_argument("search curve needs one frequency and one phase per factor (" + std::to_string(k) +
                                ")");
  }
  if (samples < 1) throw std::invalid_argument("search curve needs at least one sample");
  std::vector<double> out(samples * k);
  for (std::size_t t = 0; t < samples; ++t) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t turns = (frequencies[i] * t) % samples;
      const double angle = kTwoPi * static_cast<double>(turns) / static_cast<double>(samples) + phases[i];
      const double unit = 0.5 + std::asin(std::sin(angle)) / std::numbers::pi;
      const auto& f = space.factors[i];
      out[t * k + i] = std::clamp(f.lower + (f.upper - f.lower) * unit, f.lower, f.upper);
    }
  }
  return out;
}

EfastPlan make_plan(std::size_t k, const EfastConfig& cfg) {
  const FrequencySet set = assign_frequencies(k, cfg);
  EfastPlan plan;
  plan.k = k;
  plan.resamplings = cfg.resamplings;
  plan.target_frequency = set.target;
  plan.frequencies.resize(cfg.resamplings * k * k);
  plan.phases.resize(cfg.resamplings * k * k);
  Rng rng(cfg.rng_seed);
  for (std::size_t r = 0; r < cfg.resamplings; ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t base = (r * k + i) * k;
      plan.frequencies[base + i] = set.target;
      for (std::size_t c = 0; c + 1 < k; ++c) plan.frequencies[base + (i + 1 + c) % k] = set.complement[c];
      for (std::size_t j = 0; j < k; ++j) plan.phases[base + j] = rng.uniform(0.0, kTwoPi);
    }
  }
  return plan;
}

SensitivityResult efast_indices(const ScalarFunction& f, const FactorSpace& space, const EfastConfig& cfg) {
  space.validate();
  return efast_indices(f, space, cfg, make_plan(space.size(), cfg));
}

SensitivityResult efast_indices(const ScalarFunction& f, const FactorSpace& space, const EfastConfig& cfg,
                                const EfastPlan& plan) {
  space.validate();
  cfg.validate();
  const std::size_t k = space.size();
  if (plan.k != k) throw std::invalid_argument("plan was built for a different number of factors");
  const std::size_t reps = plan.resamplings;
  if (reps < 1) throw std::invalid_argument("plan has no replicates");
  if (cfg.samples_per_curve < 2 * cfg.interference * plan.target_frequency + 1) {
    throw std::invalid_argument("samples_per_curve violates the Nyquist bound for the plan's target frequency");
  }

  SensitivityResult result;
  for (const auto& fac : space.factors) result.names.push_back(fac.name);
  result.first_order_replicates.assign(reps * k, 0.0);
  result.total_replicates.assign(reps * k, 0.0);

  const Spectrum spectrum(cfg.samples_per_curve);
  double variance_sum = 0.0;
  bool all_constant = true;
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto freqs = plan.curve_frequencies(r, i);
      if (freqs[i] != plan.target_frequency) {
        throw std::invalid_argument("plan curve does not drive its factor at the target frequency");
      }
      const CurveIndices c = analyze_curve(f, space, freqs, plan.curve_phases(r, i), plan.target_frequency,
                                           cfg.interference, cfg.samples_per_curve, spectrum);
      result.first_order_replicates[r * k + i] = c.first_order;
      result.total_replicates[r * k + i] = c.total;
      variance_sum += c.variance;
      if (c.variance >= kConstantVariance) all_constant = false;
    }
  }
  result.variance = variance_sum / static_cast<double>(reps * k);
  result.constant_output = all_constant;

  result.first_order.resize(k);
  result.total.resize(k);
  result.first_order_std.resize(k);
  result.total_std.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    mean_and_std(result.first_order_replicates, reps, k, i, result.first_order[i], result.first_order_std[i]);
    mean_and_std(result.total_replicates, reps, k, i, result.total[i], result.total_std[i]);
  }
  result.irrelevant.assign(k, false);
  return result;
}

FactorSpace training_domain(const MlpNetwork& net) {
  FactorSpace space;
  for (std::size_t i = 0; i < net.n_inputs; ++i) {
    const auto& s = net.input_scalers[i];
    space.factors.push_back({net.input_names[i], s.shift - s.scale, s.shift + s.scale});
  }
  return space;
}

SensitivityResult input_relevance(const MlpNetwork& net, const FactorSpace& space, const EfastConfig& cfg,
                                  double threshold) {
  if (space.size() != net.n_inputs) {
    throw std::invalid_argument("factor space has " + std::to_string(space.size()) + " factors, network has " +
                                std::to_string(net.n_inputs) + " inputs");
  }
  auto result = efast_indices([&net](std::span<const double> x) { return forward(net, x); }, space, cfg);
  for (std::size_t i = 0; i < result.total.size(); ++i) result.irrelevant[i] = result.total[i] < threshold;
  return result;
}

std::string sensitivity_table(const SensitivityResult& result) {
  std::string out = "factor,first_order,total,std_total\n";
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    out += result.names[i] + "," + text::format_double(result.first_order[i]) + "," +
           text::format_double(result.total[i]) + "," + text::format_double(result.total_std[i]) + "\n";
  }
  return out;
}

}  // namespace surromap
