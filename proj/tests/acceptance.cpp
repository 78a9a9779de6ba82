// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "surromap/surromap.hpp"
#include "surromap/text_format.hpp"

#ifndef SURROMAP_CLI
#error "SURROMAP_CLI must name the command-line binary"
#endif

using namespace surromap;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kGradientRelTol = 1e-4;
constexpr double kFiniteDifferenceStep = 1e-5;
constexpr double kLinearIndexTol = 0.02;
constexpr double kIshigamiTol = 0.05;
constexpr double kFirstOrderSlack = 0.01;
constexpr double kFirstOrderSumMax = 1.05;
constexpr std::size_t kPrunedMaxHidden = 5;
constexpr double kPrunedMseFactor = 2.0;
constexpr double kCoefficientRelTol = 1e-6;
constexpr double kLeastSquaresRelTol = 1e-6;
constexpr double kRootResidualRel = 1e-6;
constexpr double kAnchorCapacity = 33.17;
constexpr double kAnchorRelTol = 0.05;
constexpr double kDynamicsTol = 1e-10;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

template <class F>
void criterion(int id, const char* name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!o.pass) ++failures;
  char t[32];
  std::snprintf(t, sizeof t, "%.1fs", secs);
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << " " << name << ": " << o.detail << " (" << t << ")"
            << std::endl;
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

struct TrainedMaps {
  PerformanceMaps nets;
  PerformanceMaps polys;
};

TrainedMaps train_synthetic_maps() {
  const auto map = generate_synthetic_map({}, 1);
  const auto parts = split(map.records, SplitSpec{});
  TrainingConfig cfg;
  auto net = [&](Capacity c) { return CapacityModel(train_new(to_dataset(parts.train, c), 20, cfg).net); };
  PerformanceMaps nets{net(Capacity::total), net(Capacity::sensible), net(Capacity::absorbed)};
  auto polys = extract_metamodels(nets);
  return {std::move(nets), std::move(polys)};
}

Outcome parameter_accounting() {
  const auto a = param_count(3, 20), b = param_count(3, 5);
  return {a == 101 && b == 26, "param_count(3,20)=" + std::to_string(a) + ", param_count(3,5)=" + std::to_string(b)};
}

Outcome gradient_check() {
  Rng rng(2718);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t ne = 1 + rng.next() % 3, nc = 1 + rng.next() % 4;
    auto net = MlpNetwork::zeros(ne, nc);
    std::vector<double> p(param_count(ne, nc));
    for (double& v : p) v = rng.uniform(-1.0, 1.0);
    set_parameters(net, p);
    Dataset d;
    d.n_inputs = ne;
    std::vector<double> x(ne);
    for (int r = 0; r < 16; ++r) {
      for (double& v : x) v = rng.uniform(-2.0, 2.0);
      d.add(x, rng.uniform(-1.0, 1.0));
    }
    const double decay = 0.001 * trial;
    const auto g = loss_and_gradient(net, d, decay).gradient;
    for (std::size_t q = 0; q < p.size(); ++q) {
      auto pp = p;
      auto probe = net;
      pp[q] = p[q] + kFiniteDifferenceStep;
      set_parameters(probe, pp);
      const double up = loss_and_gradient(probe, d, decay).loss;
      pp[q] = p[q] - kFiniteDifferenceStep;
      set_parameters(probe, pp);
      const double down = loss_and_gradient(probe, d, decay).loss;
      const double fd = (up - down) / (2.0 * kFiniteDifferenceStep);
      const double denom = std::max({std::abs(fd), std::abs(g[q]), 1e-8});
      worst = std::max(worst, std::abs(fd - g[q]) / denom);
    }
  }
  return {worst <= kGradientRelTol, "20 nets, worst relative error " + fmt(worst)};
}

Outcome efast_correctness() {
  bool ok = true;
  std::string detail;
  auto invariants = [&](const SensitivityResult& r) {
    double sum = 0.0;
    const std::size_t k = r.names.size();
    for (std::size_t i = 0; i < k; ++i) sum += r.first_order[i];
    for (std::size_t at = 0; at < r.total_replicates.size(); ++at) {
      ok = ok && r.first_order_replicates[at] <= r.total_replicates[at] + kFirstOrderSlack;
    }
    ok = ok && sum <= kFirstOrderSumMax;
    return sum;
  };
  const FactorSpace square{{{"x1", -1, 1}, {"x2", -1, 1}}};
  const auto lin = efast_indices([](std::span<const double> x) { return x[0] + 2.0 * x[1]; }, square, {});
  ok = ok && std::abs(lin.first_order[0] - 0.2) <= kLinearIndexTol && std::abs(lin.first_order[1] - 0.8) <= kLinearIndexTol;
  const double lin_sum = invariants(lin);
  detail += "linear S=(" + fmt(lin.first_order[0]) + "," + fmt(lin.first_order[1]) + ")";

  const double pi = std::numbers::pi;
  const FactorSpace cube{{{"x1", -pi, pi}, {"x2", -pi, pi}, {"x3", -pi, pi}}};
  const auto expect = oracle::ishigami();
  const auto ish = efast_indices(oracle::ishigami_fn, cube, {});
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    worst = std::max({worst, std::abs(ish.first_order[i] - expect.first[i]), std::abs(ish.total[i] - expect.total[i])});
  }
  ok = ok && worst <= kIshigamiTol;
  const double ish_sum = invariants(ish);
  detail += "; Ishigami max deviation " + fmt(worst) + "; sum S " + fmt(lin_sum) + ", " + fmt(ish_sum);
  return {ok, detail};
}

Outcome pruning_regression() {
  const auto task = oracle::two_unit_teacher();
  TrainingConfig cfg;
  const auto big = train_new(task.train, 10, cfg);
  const auto report = prune_and_retrain(big.net, task.train, task.generalization, cfg, {});
  if (!report.ok()) return {false, "retraining failed: " + report.failure};
  const double before = report.generalization_before.mse, after = report.generalization_after.mse;
  const bool ok = report.n_hidden_after <= kPrunedMaxHidden && after <= kPrunedMseFactor * before &&
                  report.param_count_after == param_count(3, report.n_hidden_after);
  return {ok, "Nc 10 -> " + std::to_string(report.n_hidden_after) + ", params " +
                  std::to_string(report.param_count_before) + " -> " + std::to_string(report.param_count_after) +
                  ", generalization MSE " + fmt(before) + " -> " + fmt(after)};
}

Outcome metamodel_exactness() {
  const FactorSpace space = MapBounds{}.factor_space();
  Rng rng(31);
  double worst_coef = 0.0, worst_ls = 0.0;
  const TermSet sets[3] = {TermSet::hvac_total(), TermSet::hvac_sensible(), TermSet::hvac_absorbed()};
  for (int trial = 0; trial < 100; ++trial) {
    const TermSet& terms = sets[trial % 3];
    std::vector<Term> truth;
    for (const auto& e : terms.terms) {
      double s = 1.0;
      for (std::size_t i = 0; i < 3; ++i) {
        s *= std::pow(std::max(std::abs(space.factors[i].lower), std::abs(space.factors[i].upper)), e[i]);
      }
      const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      truth.push_back({e, sign * rng.uniform(1.0, 20.0) / s});
    }
    const ScalarFunction f = [&truth](std::span<const double> x) { return oracle::monomial_sum(truth, x); };
    const auto fit = extract_polynomial(f, space, terms);
    for (const auto& t : truth) {
      worst_coef = std::max(worst_coef, std::abs(oracle::coefficient_of(fit, t.exponents) - t.coefficient) /
                                            std::abs(t.coefficient));
    }
    if (trial % 10 == 0) {
      const auto ls = oracle::least_squares(f, space, terms, oracle::uniform_points(space, 1000, trial + 1));
      for (std::size_t c = 0; c < ls.size(); ++c) {
        worst_ls = std::max(worst_ls, std::abs(oracle::coefficient_of(fit, terms.terms[c]) - ls[c]) / std::abs(ls[c]));
      }
    }
  }
  return {worst_coef <= kCoefficientRelTol && worst_ls <= kLeastSquaresRelTol,
          "100 polynomials, worst coefficient error " + fmt(worst_coef) + ", vs least squares " + fmt(worst_ls)};
}

Outcome dry_coil_invariant(const TrainedMaps& m) {
  const MapBounds b;
  const int n = 50;
  std::size_t points = 0, dry = 0, solved = 0, clamped = 0, violations = 0;
  double worst_residual = 0.0;
  double lo = 1e300, hi = -1e300;
  std::vector<std::pair<OperatingPoint, double>> roots;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        const OperatingPoint op{b.odb_min + (b.odb_max - b.odb_min) * i / (n - 1),
                                b.edb_min + (b.edb_max - b.edb_min) * j / (n - 1),
                                b.ewb_min + (b.ewb_max - b.ewb_min) * k / (n - 1)};
        if (op.t_ewb > op.t_edb) continue;
        ++points;
        const auto p = predict(m.nets, op, true, &m.polys);
        lo = std::min(lo, p.q_tot);
        hi = std::max(hi, p.q_tot);
        if (p.q_sens > p.q_tot) ++violations;
        if (!p.dry_coil) continue;
        ++dry;
        if (p.t_ewb_opt) {
          ++solved;
          const OperatingPoint at{op.t_odb, op.t_edb, *p.t_ewb_opt};
          worst_residual = std::max(worst_residual, std::abs(m.polys.total(at) - m.polys.sensible(at)));
        } else {
          ++clamped;
        }
      }
    }
  }
  const double range = hi - lo;
  const bool ok = violations == 0 && worst_residual <= kRootResidualRel * range;
  return {ok, std::to_string(points) + " points, " + std::to_string(dry) + " dry (" + std::to_string(solved) +
                  " solved, " + std::to_string(clamped) + " clamped), " + std::to_string(violations) +
                  " violations, worst root residual " + fmt(worst_residual) + " kW vs range " + fmt(range) + " kW"};
}

Outcome anchor_accuracy(const TrainedMaps& m) {
  const auto op = OperatingPoint::make(40.56, 32.22, 18.33);
  const auto raw = predict_steady_state(m.nets, op);
  const auto fixed = predict(m.nets, op, true, &m.polys);
  const double etot = std::abs(fixed.q_tot - kAnchorCapacity) / kAnchorCapacity;
  const double esens = std::abs(fixed.q_sens - kAnchorCapacity) / kAnchorCapacity;
  bool ok = etot <= kAnchorRelTol && esens <= kAnchorRelTol;
  ok = ok && raw.dry_coil == (raw.q_sens > raw.q_tot);
  if (fixed.corrected) ok = ok && fixed.q_sens == fixed.q_tot;
  return {ok, "uncorrected tot " + fmt(raw.q_tot) + " sens " + fmt(raw.q_sens) +
                  (raw.dry_coil ? " (dry coil flagged)" : " (not dry)") + "; corrected tot " + fmt(fixed.q_tot) +
                  " sens " + fmt(fixed.q_sens) + ", errors " + fmt(100 * etot) + "% / " + fmt(100 * esens) + "%"};
}

Outcome dynamics() {
  const DynamicsConfig cfg{300.0};
  const double q = 12.0;
  const double ratio = dynamic_capacity(q, cfg.tau, cfg, Channel::total) / q;
  bool ok = std::abs(ratio - (1.0 - std::exp(-1.0))) <= kDynamicsTol;
  double prev = -1.0;
  for (int s = 0; s <= 2000; ++s) {
    const double t = s * 2.5;
    const double v = dynamic_capacity(q, t, cfg, Channel::total);
    ok = ok && v >= prev && v <= q && dynamic_capacity(q, t, cfg, Channel::absorbed) == q;
    prev = v;
  }
  return {ok, "Q(tau)/Q_ss = " + text::format_double(ratio) + ", monotone, absorbed constant"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs the full CLI pipeline in `dir`, returning every output keyed by name.
std::vector<std::pair<std::string, std::string>> run_pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cli = SURROMAP_CLI;
  const std::string d = dir.string();
  const std::string models = "--tot " + d + "/m/p_tot.mlp --sens " + d + "/m/p_sens.mlp --abs " + d + "/m/p_abs.mlp";
  const std::vector<std::pair<std::string, std::string>> steps = {
      {"synth", "synth --out " + d + "/map.csv --noise 0.005 --seed 4"},
      {"train", "train --map " + d + "/map.csv --out " + d + "/m"},
      {"prune", "prune --model " + d + "/m/p_sens.mlp --map " + d + "/map.csv --out " + d + "/pruned.mlp"},
      {"analyze", "analyze --model " + d + "/m/p_tot.mlp"},
      {"metamodel", "metamodel --model " + d + "/m/p_sens.mlp --terms eq6 --out " + d + "/sens.poly"},
      {"predict", "predict " + models + " --odb 40.56 --edb 32.22 --ewb 18.33 --correct-dry-coil"},
      {"simulate", "simulate " + models + " --odb 35 --edb 26.67 --ewb 19.4 --tau 90 --horizon 900 --steps 30"},
  };
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, args] : steps) {
    const std::string log = d + "/" + name + ".out";
    const int rc = std::system((cli + " " + args + " > " + log + " 2>&1").c_str());
    out.emplace_back(name + ".status", std::to_string(rc));
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) out.emplace_back(fs::relative(entry.path(), dir).string(), slurp(entry.path()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("surromap_acceptance_" + std::to_string(::getpid()));
  const auto a = run_pipeline(root / "a");
  const auto b = run_pipeline(root / "b");
  std::size_t files = 0, bytes = 0, failed = 0;
  bool same = a.size() == b.size();
  for (std::size_t i = 0; same && i < a.size(); ++i) {
    // Output paths differ only by the run directory, which the CLI never echoes.
    same = a[i] == b[i];
    if (a[i].first.ends_with(".status")) {
      failed += a[i].second != "0";
    } else {
      ++files;
      bytes += a[i].second.size();
    }
  }
  fs::remove_all(root);
  return {same && failed == 0, std::to_string(files) + " output files (" + std::to_string(bytes) +
                                   " bytes) across 7 subcommands, " + (same ? "byte-identical" : "DIFFER") +
                                   ", " + std::to_string(failed) + " nonzero exits"};
}

}  // namespace

int main() {
  std::cout << "surromap acceptance" << std::endl;
  criterion(1, "parameter accounting", parameter_accounting);
  criterion(2, "gradient correctness", gradient_check);
  criterion(3, "EFAST correctness", efast_correctness);
  criterion(4, "pruning regression", pruning_regression);
  criterion(5, "metamodel exactness", metamodel_exactness);
  std::optional<TrainedMaps> maps;
  try {
    maps = train_synthetic_maps();
  } catch (const std::exception& e) {
    std::cout << "training the synthetic-map models failed: " << e.what() << std::endl;
  }
  criterion(6, "dry-coil invariant", [&] { return maps ? dry_coil_invariant(*maps) : Outcome{false, "no models"}; });
  criterion(7, "dry-coil accuracy at the anchor",
            [&] { return maps ? anchor_accuracy(*maps) : Outcome{false, "no models"}; });
  criterion(8, "first-order dynamics", dynamics);
  criterion(9, "CLI determinism", determinism);
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : "all criteria passed") << std::endl;
  return failures ? 1 : 0;
}
