// surromap: train, prune and analyze neural performance-map surrogates,
// extract polynomial metamodels and predict split-system capacities.
//
// Exit status: 0 success, 1 domain error, 2 usage or I/O error.

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "surromap/surromap.hpp"
#include "surromap/text_format.hpp"

namespace fs = std::filesystem;
using namespace surromap;

namespace {

constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes are staged so that a failing run leaves no partial outputs.
class OutputSet {
 public:
  void add(const std::string& path, std::string contents) { files_.emplace_back(path, std::move(contents)); }

  void commit() const {
    for (const auto& [path, contents] : files_) {
      const fs::path p(path);
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
      std::ofstream out(p, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write '" + path + "'");
      out << contents;
      if (!out) throw IoError("failed writing '" + path + "'");
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("SURROMAP_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw IoError(std::string("SURROMAP_SEED is not an integer: '") + env + "'");
    }
  }
  return 1;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& f : text::split(s, ',')) {
    if (!text::trim(f).empty()) out.push_back(text::parse_double(f));
  }
  return out;
}

Capacity capacity_of(const MlpNetwork& net) {
  if (net.output_name == "p_tot") return Capacity::total;
  if (net.output_name == "p_sens") return Capacity::sensible;
  if (net.output_name == "p_abs") return Capacity::absorbed;
  throw std::invalid_argument("model output '" + net.output_name + "' is not a map capacity");
}

struct TrainFlags {
  std::size_t hidden = 20;
  std::size_t epochs = 20000;
  double lr = 0.05;
  double weight_decay = 0.0;
  std::optional<std::uint64_t> seed;
  std::string holdout = "18.33,29.44,40.56";

  void add_to(CLI::App* app, bool with_hidden) {
    if (with_hidden) app->add_option("--hidden", hidden, "Hidden units")->capture_default_str();
    app->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
    app->add_option("--lr", lr, "Learning rate")->capture_default_str();
    app->add_option("--weight-decay", weight_decay, "Weight decay")->capture_default_str();
    app->add_option("--seed", seed, "RNG seed (falls back to SURROMAP_SEED, then 1)");
    app->add_option("--holdout-odb", holdout, "Comma-separated t_odb levels held out for generalization")
        ->capture_default_str();
  }

  TrainingConfig config() const {
    TrainingConfig c;
    c.learning_rate = lr;
    c.epochs = epochs;
    c.weight_decay = weight_decay;
    c.rng_seed = resolve_seed(seed);
    return c;
  }

  SplitSpec split_spec() const {
    SplitSpec s;
    s.holdout_odb = parse_list(holdout);
    return s;
  }
};

struct MapFlags {
  std::string tot, sens, abs;
  double odb = 0.0, edb = 0.0, ewb = 0.0;
  bool correct = false;
  bool extrapolate = false;

  void add_to(CLI::App* app) {
    app->add_option("--tot", tot, "Total capacity model (network or polynomial)")->required();
    app->add_option("--sens", sens, "Sensible capacity model")->required();
    app->add_option("--abs", abs, "Absorbed capacity model")->required();
    app->add_option("--odb", odb, "Outdoor dry bulb, degC")->required();
    app->add_option("--edb", edb, "Entering dry bulb, degC")->required();
    app->add_option("--ewb", ewb, "Entering wet bulb, degC")->required();
    app->add_flag("--correct-dry-coil", correct, "Solve for the effective wet bulb when q_sens > q_tot");
    app->add_flag("--allow-extrapolation", extrapolate, "Accept points outside the map bounds");
  }

  PerformanceMaps load() const {
    PerformanceMaps maps{parse_capacity_model(read_file(tot)), parse_capacity_model(read_file(sens)),
                         parse_capacity_model(read_file(abs))};
    maps.validate();
    return maps;
  }

  CapacityPrediction run(const PerformanceMaps& maps, const OperatingPoint& op) const {
    if (correct && !(maps.total.polynomial() && maps.sensible.polynomial())) {
      const auto meta = extract_metamodels(maps);
      return predict(maps, op, true, &meta, extrapolate);
    }
    return predict(maps, op, correct, nullptr, extrapolate);
  }
};

int cmd_synth(const std::string& out_path, std::optional<std::uint64_t> seed, double noise) {
  GridSpec grid;
  grid.noise = noise;
  const auto map = generate_synthetic_map(grid, resolve_seed(seed));
  std::ostringstream csv;
  write_map(csv, map.records);
  OutputSet out;
  out.add(out_path, csv.str());
  out.commit();
  std::cout << "records " << map.records.size() << "\n";
  return 0;
}

int cmd_train(const std::string& map_path, const std::string& out_dir, const TrainFlags& flags) {
  const auto records = load_map_file(map_path);
  const auto parts = split(records, flags.split_spec());
  const auto cfg = flags.config();

  OutputSet out;
  ReportArtifacts report;
  std::ostringstream table;
  table << "parameters " << param_count(3, flags.hidden) << "\n";
  table << "capacity,n_hidden,train_mse,generalization_mse,generalization_max_abs\n";
  for (Capacity c : {Capacity::total, Capacity::sensible, Capacity::absorbed}) {
    const auto train_set = to_dataset(parts.train, c);
    const auto gen_set = to_dataset(parts.generalization, c);
    if (train_set.size() == 0) {
      if (c != Capacity::absorbed) throw std::invalid_argument("no training rows carry " + capacity_name(c));
      table << "# " << capacity_name(c) << " skipped, no rows carry it\n";
      continue;
    }
    const auto result = train_new(train_set, flags.hidden, cfg);
    const auto train_err = evaluate(result.net, train_set);
    table << capacity_name(c) << "," << flags.hidden << "," << text::format_double(train_err.mse) << ",";
    if (gen_set.size() > 0) {
      const auto gen_err = evaluate(result.net, gen_set);
      table << text::format_double(gen_err.mse) << "," << text::format_double(gen_err.max_abs_error) << "\n";
      report.histograms.push_back(make_histogram(capacity_name(c) + "_generalization", gen_err.relative_errors));
    } else {
      table << ",\n";
    }
    out.add((fs::path(out_dir) / (capacity_name(c) + ".mlp")).string(), serialize(result.net));
  }
  out.add((fs::path(out_dir) / "train_report.txt").string(), export_report(report));
  out.commit();
  std::cout << table.str();
  return 0;
}

int cmd_prune(const std::string& model_path, const std::string& map_path, const std::string& out_path,
              double threshold, const TrainFlags& flags, const CLI::App& app) {
  const auto net = parse_network(read_file(model_path));
  const auto records = load_map_file(map_path);
  const auto parts = split(records, flags.split_spec());
  const Capacity c = capacity_of(net);
  TrainingConfig cfg = net.trained_with.value_or(flags.config());
  // Explicit flags override the recorded configuration.
  if (app.count("--epochs")) cfg.epochs = flags.epochs;
  if (app.count("--lr")) cfg.learning_rate = flags.lr;
  if (app.count("--weight-decay")) cfg.weight_decay = flags.weight_decay;
  if (app.count("--seed") || !net.trained_with) cfg.rng_seed = resolve_seed(flags.seed);

  EfastConfig ecfg;
  ecfg.rng_seed = cfg.rng_seed;
  const auto report = prune_and_retrain(net, to_dataset(parts.train, c), to_dataset(parts.generalization, c), cfg,
                                        ecfg, threshold);
  if (!report.ok()) {
    std::cerr << "error: " << report.failure << "\n";
    std::cout << prune_table(report);
    return kDomainError;
  }
  OutputSet out;
  out.add(out_path, serialize(*report.pruned));
  out.commit();
  std::cout << prune_table(report);
  return 0;
}

int cmd_analyze(const std::string& model_path, double threshold, std::optional<std::uint64_t> seed) {
  const auto net = parse_network(read_file(model_path));
  EfastConfig cfg;
  cfg.rng_seed = resolve_seed(seed);
  const auto result = input_relevance(net, training_domain(net), sized_for(cfg, net.n_inputs), threshold);
  std::cout << "factor,first_order,total,std_total,irrelevant\n";
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    std::cout << result.names[i] << "," << text::format_double(result.first_order[i]) << ","
              << text::format_double(result.total[i]) << "," << text::format_double(result.total_std[i]) << ","
              << (result.irrelevant[i] ? 1 : 0) << "\n";
  }
  return 0;
}

int cmd_metamodel(const std::string& model_path, const std::string& terms_spec, const std::string& out_path) {
  const auto net = parse_network(read_file(model_path));
  const auto terms = TermSet::parse(terms_spec, net.input_names);
  FactorSpace space;
  if (net.n_inputs == 3) {
    space = MapBounds{}.factor_space();
    for (std::size_t i = 0; i < 3; ++i) space.factors[i].name = net.input_names[i];
  } else {
    space = training_domain(net);
  }
  const auto poly = extract_polynomial([&net](std::span<const double> x) { return forward(net, x); }, space, terms);
  OutputSet out;
  out.add(out_path, serialize(poly));
  out.commit();
  const auto names = net.input_names;
  std::cout << "term,coefficient\n";
  for (const auto& t : poly.terms) {
    std::cout << TermSet{names.size(), {t.exponents}}.describe(names) << "," << text::format_double(t.coefficient)
              << "\n";
  }
  std::cout << "fit_error " << text::format_double(poly.fit_error) << "\n";
  return 0;
}

int cmd_predict(const MapFlags& flags) {
  const auto maps = flags.load();
  const auto op = OperatingPoint::make(flags.odb, flags.edb, flags.ewb);
  const auto p = flags.run(maps, op);
  std::cout << prediction_header() << "\n" << prediction_record(op, p) << "\n";
  return 0;
}

int cmd_simulate(const MapFlags& flags, double tau, double horizon, std::size_t steps) {
  const DynamicsConfig dyn{tau};
  dyn.validate();
  if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be nonnegative");
  if (steps < 1) throw std::invalid_argument("steps must be at least 1");
  const auto maps = flags.load();
  const auto op = OperatingPoint::make(flags.odb, flags.edb, flags.ewb);
  const auto p = flags.run(maps, op);
  std::cout << "t,q_tot_cyc,q_sens_cyc,q_abs_cyc\n";
  const std::size_t n = horizon > 0.0 ? steps : 0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = n ? horizon * static_cast<double>(k) / static_cast<double>(n) : 0.0;
    std::cout << text::format_double(t) << "," << text::format_double(dynamic_capacity(p.q_tot, t, dyn, Channel::total))
              << "," << text::format_double(dynamic_capacity(p.q_sens, t, dyn, Channel::sensible)) << ","
              << text::format_double(dynamic_capacity(p.q_abs, t, dyn, Channel::absorbed)) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural performance-map surrogates with sensitivity pruning and dry-coil correction"};
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string map_path, out_path, model_path, terms = "eq5";
  double threshold = 0.05;
  double noise = 0.0;
  double tau = 0.0, horizon = 0.0;
  std::size_t steps = 100;
  TrainFlags train_flags;
  MapFlags map_flags;

  auto* synth = app.add_subcommand("synth", "Write the synthetic performance map as CSV");
  synth->add_option("--out", out_path, "Output CSV")->required();
  synth->add_option("--seed", seed, "Noise seed");
  synth->add_option("--noise", noise, "Relative noise standard deviation")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train total, sensible and absorbed capacity networks");
  train->add_option("--map", map_path, "Performance map CSV")->required();
  train->add_option("--out", out_path, "Output directory")->required();
  train_flags.add_to(train, true);

  auto* prune = app.add_subcommand("prune", "Prune hidden units by EFAST total sensitivity and retrain");
  prune->add_option("--model", model_path, "Trained network")->required();
  prune->add_option("--map", map_path, "Performance map CSV")->required();
  prune->add_option("--out", out_path, "Pruned network output")->required();
  prune->add_option("--threshold", threshold, "Minimum mean total index to keep a unit")->capture_default_str();
  train_flags.add_to(prune, false);

  auto* analyze = app.add_subcommand("analyze", "EFAST relevance of the network inputs");
  analyze->add_option("--model", model_path, "Trained network")->required();
  analyze->add_option("--threshold", threshold, "Relevance bar on the total index")->capture_default_str();
  analyze->add_option("--seed", seed, "Phase seed");

  auto* metamodel = app.add_subcommand("metamodel", "Extract a polynomial metamodel by spectral regression");
  metamodel->add_option("--model", model_path, "Trained network")->required();
  metamodel->add_option("--terms", terms, "eq5 | eq6 | eq7 | custom:<monomials>")->capture_default_str();
  metamodel->add_option("--out", out_path, "Polynomial output")->required();

  auto* predict_cmd = app.add_subcommand("predict", "Steady-state capacities at one operating point");
  map_flags.add_to(predict_cmd);

  auto* simulate = app.add_subcommand("simulate", "First-order start-up response at one operating point");
  map_flags.add_to(simulate);
  simulate->add_option("--tau", tau, "Start-up time constant, s")->required();
  simulate->add_option("--horizon", horizon, "Simulated time, s")->required();
  simulate->add_option("--steps", steps, "Intervals over the horizon")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*synth) return cmd_synth(out_path, seed, noise);
    if (*train) return cmd_train(map_path, out_path, train_flags);
    if (*prune) return cmd_prune(model_path, map_path, out_path, threshold, train_flags, *prune);
    if (*analyze) return cmd_analyze(model_path, threshold, seed);
    if (*metamodel) return cmd_metamodel(model_path, terms, out_path);
    if (*predict_cmd) return cmd_predict(map_flags);
    if (*simulate) return cmd_simulate(map_flags, tau, horizon, steps);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return kUsageError;
}
