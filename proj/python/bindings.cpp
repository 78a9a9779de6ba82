// Python bindings for the surromap core.

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "surromap/surromap.hpp"

namespace py = pybind11;
using namespace surromap;

namespace {

using PyFunction = std::function<double(std::vector<double>)>;

ScalarFunction wrap(const PyFunction& f) {
  return [f](std::span<const double> x) { return f(std::vector<double>(x.begin(), x.end())); };
}

ScalarFunction wrap(const MlpNetwork& net) {
  return [net](std::span<const double> x) { return forward(net, x); };
}

Dataset make_dataset(py::array_t<double, py::array::c_style | py::array::forcecast> x,
                     py::array_t<double, py::array::c_style | py::array::forcecast> y,
                     std::vector<std::string> input_names, std::string target_name) {
  if (x.ndim() != 2) throw std::invalid_argument("inputs must be a 2-D array");
  if (y.ndim() != 1 || y.shape(0) != x.shape(0)) throw std::invalid_argument("targets must be 1-D with one entry per row");
  Dataset d;
  d.n_inputs = static_cast<std::size_t>(x.shape(1));
  d.inputs.assign(x.data(), x.data() + x.size());
  d.targets.assign(y.data(), y.data() + y.size());
  if (input_names.empty()) {
    for (std::size_t i = 0; i < d.n_inputs; ++i) input_names.push_back("x" + std::to_string(i));
  }
  d.input_names = std::move(input_names);
  d.input_units.assign(d.n_inputs, "");
  d.target_name = std::move(target_name);
  d.validate();
  return d;
}

py::array_t<double> forward_many(const MlpNetwork& net,
                                 py::array_t<double, py::array::c_style | py::array::forcecast> x) {
  if (x.ndim() != 2 || static_cast<std::size_t>(x.shape(1)) != net.n_inputs) {
    throw std::invalid_argument("expected an (n, " + std::to_string(net.n_inputs) + ") array");
  }
  py::array_t<double> out(x.shape(0));
  auto o = out.mutable_unchecked<1>();
  for (py::ssize_t r = 0; r < x.shape(0); ++r) o(r) = forward(net, {x.data() + r * x.shape(1), net.n_inputs});
  return out;
}

std::vector<PerformanceRecord> load_map_text(const std::string& text, bool strict) {
  std::istringstream in(text);
  return load_map(in, LoadOptions{strict});
}

}  // namespace

PYBIND11_MODULE(_surromap, m) {
  m.doc() = "Neural and polynomial surrogates of HVAC performance maps";
  m.attr("__version__") = "0.1.0";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto io_error = py::register_exception<IoError>(m, "IoError", error.ptr());
  py::register_exception<ParseError>(m, "ParseError", io_error.ptr());
  py::register_exception<TrainingDiverged>(m, "TrainingDiverged", error.ptr());
  py::register_exception<DesignCollision>(m, "DesignCollision", PyExc_ValueError);

  // Networks and training

  py::class_<TrainingConfig>(m, "TrainingConfig")
      .def(py::init([](double learning_rate, std::size_t epochs, double weight_decay, std::uint64_t rng_seed,
                       double target_mse) {
             return TrainingConfig{learning_rate, epochs, weight_decay, rng_seed, target_mse};
           }),
           py::arg("learning_rate") = 0.05, py::arg("epochs") = 20000, py::arg("weight_decay") = 0.0,
           py::arg("rng_seed") = 1, py::arg("target_mse") = 0.0)
      .def_readwrite("learning_rate", &TrainingConfig::learning_rate)
      .def_readwrite("epochs", &TrainingConfig::epochs)
      .def_readwrite("weight_decay", &TrainingConfig::weight_decay)
      .def_readwrite("rng_seed", &TrainingConfig::rng_seed)
      .def_readwrite("target_mse", &TrainingConfig::target_mse);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init(&make_dataset), py::arg("inputs"), py::arg("targets"),
           py::arg("input_names") = std::vector<std::string>{}, py::arg("target_name") = "y")
      .def("__len__", &Dataset::size)
      .def_readonly("n_inputs", &Dataset::n_inputs)
      .def_readonly("input_names", &Dataset::input_names)
      .def_readonly("target_name", &Dataset::target_name)
      .def_property_readonly("targets", [](const Dataset& d) { return d.targets; });

  py::class_<MlpNetwork>(m, "MlpNetwork")
      .def_readonly("n_inputs", &MlpNetwork::n_inputs)
      .def_readonly("n_hidden", &MlpNetwork::n_hidden)
      .def_readonly("input_names", &MlpNetwork::input_names)
      .def_readonly("output_name", &MlpNetwork::output_name)
      .def_readonly("trained_with", &MlpNetwork::trained_with)
      .def("parameter_count", &MlpNetwork::parameter_count)
      .def("__call__", [](const MlpNetwork& n, std::vector<double> x) {
        if (x.size() != n.n_inputs) throw std::invalid_argument("wrong number of inputs");
        return forward(n, x);
      })
      .def("forward", &forward_many, py::arg("inputs"))
      .def("hidden_activations", [](const MlpNetwork& n, std::vector<double> x) {
        if (x.size() != n.n_inputs) throw std::invalid_argument("wrong number of inputs");
        return hidden_activations(n, x);
      })
      .def("parameters", [](const MlpNetwork& n) { return parameters(n); })
      .def("set_parameters", [](MlpNetwork& n, std::vector<double> p) { set_parameters(n, p); })
      .def("to_text", [](const MlpNetwork& n) { return serialize(n); })
      .def_static("from_text", [](const std::string& s) { return parse_network(s); })
      .def(py::pickle([](const MlpNetwork& n) { return serialize(n); },
                      [](const std::string& s) { return parse_network(s); }));

  py::class_<TrainingResult>(m, "TrainingResult")
      .def_readonly("net", &TrainingResult::net)
      .def_readonly("loss_history", &TrainingResult::loss_history);

  py::class_<ErrorReport>(m, "ErrorReport")
      .def_readonly("mse", &ErrorReport::mse)
      .def_readonly("max_abs_error", &ErrorReport::max_abs_error)
      .def_readonly("relative_errors", &ErrorReport::relative_errors);

  m.def("param_count", &param_count, py::arg("n_inputs"), py::arg("n_hidden"));
  m.def("initialize_network", &initialize_network, py::arg("data"), py::arg("n_hidden"), py::arg("seed"));
  m.def("train", &train, py::arg("net"), py::arg("data"), py::arg("config") = TrainingConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("train_new", &train_new, py::arg("data"), py::arg("n_hidden"), py::arg("config") = TrainingConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def("evaluate", &evaluate, py::arg("net"), py::arg("data"));
  m.def(
      "prune_hidden_units",
      [](const MlpNetwork& n, std::vector<std::size_t> keep) { return prune_hidden_units(n, keep); },
      py::arg("net"), py::arg("keep"));

  // Sensitivity analysis

  py::class_<Factor>(m, "Factor")
      .def(py::init([](std::string name, double lower, double upper) { return Factor{std::move(name), lower, upper}; }),
           py::arg("name"), py::arg("lower"), py::arg("upper"))
      .def_readwrite("name", &Factor::name)
      .def_readwrite("lower", &Factor::lower)
      .def_readwrite("upper", &Factor::upper);

  py::class_<FactorSpace>(m, "FactorSpace")
      .def(py::init([](std::vector<Factor> f) {
             FactorSpace s{std::move(f)};
             s.validate();
             return s;
           }),
           py::arg("factors"))
      .def_readonly("factors", &FactorSpace::factors)
      .def("__len__", &FactorSpace::size);

  py::class_<EfastConfig>(m, "EfastConfig")
      .def(py::init([](std::size_t samples, std::size_t interference, std::size_t resamplings, std::uint64_t seed) {
             return EfastConfig{samples, interference, resamplings, seed};
           }),
           py::arg("samples_per_curve") = 1025, py::arg("interference") = 4, py::arg("resamplings") = 5,
           py::arg("rng_seed") = 1)
      .def_readwrite("samples_per_curve", &EfastConfig::samples_per_curve)
      .def_readwrite("interference", &EfastConfig::interference)
      .def_readwrite("resamplings", &EfastConfig::resamplings)
      .def_readwrite("rng_seed", &EfastConfig::rng_seed);

  py::class_<SensitivityResult>(m, "SensitivityResult")
      .def_readonly("names", &SensitivityResult::names)
      .def_readonly("first_order", &SensitivityResult::first_order)
      .def_readonly("total", &SensitivityResult::total)
      .def_readonly("first_order_std", &SensitivityResult::first_order_std)
      .def_readonly("total_std", &SensitivityResult::total_std)
      .def_readonly("variance", &SensitivityResult::variance)
      .def_readonly("constant_output", &SensitivityResult::constant_output)
      .def_readonly("irrelevant", &SensitivityResult::irrelevant)
      .def("table", [](const SensitivityResult& r) { return sensitivity_table(r); });

  m.def("min_samples", &min_samples, py::arg("k"), py::arg("interference"));
  m.def("sized_for", &sized_for, py::arg("config"), py::arg("k"));
  m.def(
      "efast_indices",
      [](const PyFunction& f, const FactorSpace& space, const EfastConfig& cfg) {
        return efast_indices(wrap(f), space, cfg);
      },
      py::arg("f"), py::arg("space"), py::arg("config") = EfastConfig{});
  m.def("training_domain", &training_domain, py::arg("net"));
  m.def("input_relevance", &input_relevance, py::arg("net"), py::arg("space"), py::arg("config") = EfastConfig{},
        py::arg("threshold") = 0.05);

  // Pruning

  py::class_<NeuronScore>(m, "NeuronScore")
      .def_readonly("index", &NeuronScore::index)
      .def_readonly("mean_total", &NeuronScore::mean_total)
      .def_readonly("std_total", &NeuronScore::std_total)
      .def_readonly("keep", &NeuronScore::keep)
      .def_readonly("collapsed", &NeuronScore::collapsed);

  py::class_<PruneReport>(m, "PruneReport")
      .def_readonly("scores", &PruneReport::scores)
      .def_property_readonly("keep", [](const PruneReport& r) { return r.selection.keep; })
      .def_property_readonly("degenerate", [](const PruneReport& r) { return r.selection.degenerate; })
      .def_readonly("n_hidden_before", &PruneReport::n_hidden_before)
      .def_readonly("n_hidden_after", &PruneReport::n_hidden_after)
      .def_readonly("param_count_before", &PruneReport::param_count_before)
      .def_readonly("param_count_after", &PruneReport::param_count_after)
      .def_readonly("train_before", &PruneReport::train_before)
      .def_readonly("generalization_before", &PruneReport::generalization_before)
      .def_readonly("train_after", &PruneReport::train_after)
      .def_readonly("generalization_after", &PruneReport::generalization_after)
      .def_readonly("pruned", &PruneReport::pruned)
      .def_readonly("failure", &PruneReport::failure)
      .def("ok", &PruneReport::ok)
      .def("table", [](const PruneReport& r) { return prune_table(r); });

  m.def("hidden_unit_sensitivity", &hidden_unit_sensitivity, py::arg("net"), py::arg("space"),
        py::arg("config") = EfastConfig{}, py::arg("range_samples") = 4096);
  m.def("prune_and_retrain", &prune_and_retrain, py::arg("net"), py::arg("train_data"),
        py::arg("generalization_data"), py::arg("train_config") = TrainingConfig{},
        py::arg("efast_config") = EfastConfig{}, py::arg("threshold") = 0.05,
        py::call_guard<py::gil_scoped_release>());

  // Polynomial metamodels

  py::class_<TermSet>(m, "TermSet")
      .def_readonly("n_variables", &TermSet::n_variables)
      .def_readonly("terms", &TermSet::terms)
      .def_static("hvac_total", &TermSet::hvac_total)
      .def_static("hvac_sensible", &TermSet::hvac_sensible)
      .def_static("hvac_absorbed", &TermSet::hvac_absorbed)
      .def_static(
          "parse", [](const std::string& s, std::vector<std::string> names) { return TermSet::parse(s, names); },
          py::arg("spec"), py::arg("variable_names"))
      .def("describe", [](const TermSet& t, std::vector<std::string> names) { return t.describe(names); });

  py::class_<Term>(m, "Term")
      .def_readonly("exponents", &Term::exponents)
      .def_readonly("coefficient", &Term::coefficient);

  py::class_<PolynomialMetamodel>(m, "PolynomialMetamodel")
      .def_readonly("variables", &PolynomialMetamodel::variables)
      .def_readonly("terms", &PolynomialMetamodel::terms)
      .def_readonly("fit_error", &PolynomialMetamodel::fit_error)
      .def_readonly("warnings", &PolynomialMetamodel::warnings)
      .def("variable_names", &PolynomialMetamodel::variable_names)
      .def("__call__", [](const PolynomialMetamodel& p, std::vector<double> x) {
        if (x.size() != p.variables.size()) throw std::invalid_argument("wrong number of inputs");
        return evaluate_polynomial(p, x);
      })
      .def("to_text", [](const PolynomialMetamodel& p) { return serialize(p); })
      .def_static("from_text", [](const std::string& s) { return parse_metamodel(s); })
      .def(py::pickle([](const PolynomialMetamodel& p) { return serialize(p); },
                      [](const std::string& s) { return parse_metamodel(s); }));

  py::class_<ExtractOptions>(m, "ExtractOptions")
      .def(py::init<>())
      .def_readwrite("frequencies", &ExtractOptions::frequencies)
      .def_readwrite("samples", &ExtractOptions::samples)
      .def_readwrite("guard_degree", &ExtractOptions::guard_degree)
      .def_readwrite("validation_points", &ExtractOptions::validation_points)
      .def_readwrite("seed", &ExtractOptions::seed);

  m.def(
      "extract_polynomial",
      [](const MlpNetwork& net, const FactorSpace& space, const TermSet& terms, const ExtractOptions& o) {
        return extract_polynomial(wrap(net), space, terms, o);
      },
      py::arg("source"), py::arg("space"), py::arg("terms"), py::arg("options") = ExtractOptions{});
  m.def(
      "extract_polynomial",
      [](const PyFunction& f, const FactorSpace& space, const TermSet& terms, const ExtractOptions& o) {
        return extract_polynomial(wrap(f), space, terms, o);
      },
      py::arg("source"), py::arg("space"), py::arg("terms"), py::arg("options") = ExtractOptions{});

  // Split-system capacity prediction

  py::class_<OperatingPoint>(m, "OperatingPoint")
      .def(py::init(&OperatingPoint::make), py::arg("t_odb"), py::arg("t_edb"), py::arg("t_ewb"))
      .def_readonly("t_odb", &OperatingPoint::t_odb)
      .def_readonly("t_edb", &OperatingPoint::t_edb)
      .def_readonly("t_ewb", &OperatingPoint::t_ewb);

  py::class_<MapBounds>(m, "MapBounds")
      .def(py::init<>())
      .def_readwrite("odb_min", &MapBounds::odb_min)
      .def_readwrite("odb_max", &MapBounds::odb_max)
      .def_readwrite("edb_min", &MapBounds::edb_min)
      .def_readwrite("edb_max", &MapBounds::edb_max)
      .def_readwrite("ewb_min", &MapBounds::ewb_min)
      .def_readwrite("ewb_max", &MapBounds::ewb_max)
      .def("contains", &MapBounds::contains)
      .def("factor_space", &MapBounds::factor_space);

  py::class_<CapacityModel>(m, "CapacityModel")
      .def(py::init<MlpNetwork>())
      .def(py::init<PolynomialMetamodel>())
      .def("__call__", &CapacityModel::operator())
      .def_property_readonly("is_polynomial", [](const CapacityModel& c) { return c.polynomial() != nullptr; })
      .def_static("from_text", [](const std::string& s) { return parse_capacity_model(s); });

  py::class_<PerformanceMaps>(m, "PerformanceMaps")
      .def(py::init([](CapacityModel t, CapacityModel s, CapacityModel a) {
             PerformanceMaps maps{std::move(t), std::move(s), std::move(a)};
             maps.validate();
             return maps;
           }),
           py::arg("total"), py::arg("sensible"), py::arg("absorbed"))
      .def_readonly("total", &PerformanceMaps::total)
      .def_readonly("sensible", &PerformanceMaps::sensible)
      .def_readonly("absorbed", &PerformanceMaps::absorbed);

  py::class_<CapacityPrediction>(m, "CapacityPrediction")
      .def_readonly("q_tot", &CapacityPrediction::q_tot)
      .def_readonly("q_sens", &CapacityPrediction::q_sens)
      .def_readonly("q_abs", &CapacityPrediction::q_abs)
      .def_readonly("dry_coil", &CapacityPrediction::dry_coil)
      .def_readonly("t_ewb_opt", &CapacityPrediction::t_ewb_opt)
      .def_readonly("corrected", &CapacityPrediction::corrected)
      .def_readonly("extrapolated", &CapacityPrediction::extrapolated)
      .def_readonly("diagnostic", &CapacityPrediction::diagnostic);

  m.def(
      "predict",
      [](const PerformanceMaps& maps, const OperatingPoint& op, bool correct, std::optional<PerformanceMaps> metamodels,
         bool allow_extrapolation, const MapBounds& bounds) {
        return predict(maps, op, correct, metamodels ? &*metamodels : nullptr, allow_extrapolation, bounds);
      },
      py::arg("maps"), py::arg("op"), py::arg("correct") = true, py::arg("metamodels") = std::nullopt,
      py::arg("allow_extrapolation") = false, py::arg("bounds") = MapBounds{});
  m.def("extract_metamodels", &extract_metamodels, py::arg("maps"), py::arg("bounds") = MapBounds{},
        py::arg("options") = ExtractOptions{});

  py::enum_<Channel>(m, "Channel")
      .value("total", Channel::total)
      .value("sensible", Channel::sensible)
      .value("absorbed", Channel::absorbed);
  m.def(
      "dynamic_capacity",
      [](double q_ss, double t, double tau, Channel ch) { return dynamic_capacity(q_ss, t, DynamicsConfig{tau}, ch); },
      py::arg("q_ss"), py::arg("t"), py::arg("tau"), py::arg("channel") = Channel::total);

  // Performance map data

  py::enum_<Capacity>(m, "Capacity")
      .value("total", Capacity::total)
      .value("sensible", Capacity::sensible)
      .value("absorbed", Capacity::absorbed);

  py::class_<PerformanceRecord>(m, "PerformanceRecord")
      .def_readonly("t_odb", &PerformanceRecord::t_odb)
      .def_readonly("t_edb", &PerformanceRecord::t_edb)
      .def_readonly("t_ewb", &PerformanceRecord::t_ewb)
      .def_readonly("p_tot", &PerformanceRecord::p_tot)
      .def_readonly("p_sens", &PerformanceRecord::p_sens)
      .def_readonly("p_abs", &PerformanceRecord::p_abs)
      .def_readonly("flagged", &PerformanceRecord::flagged);

  py::class_<MapSplit>(m, "MapSplit")
      .def_readonly("train", &MapSplit::train)
      .def_readonly("generalization", &MapSplit::generalization);

  m.def("load_map_file", [](const std::string& path, bool strict) { return load_map_file(path, LoadOptions{strict}); },
        py::arg("path"), py::arg("strict") = false);
  m.def("load_map_text", &load_map_text, py::arg("text"), py::arg("strict") = false);
  m.def(
      "split",
      [](const std::vector<PerformanceRecord>& records, std::vector<double> holdout_odb, double tolerance,
         bool allow_empty_train) {
        return split(records, SplitSpec{std::move(holdout_odb), tolerance, allow_empty_train});
      },
      py::arg("records"), py::arg("holdout_odb") = SplitSpec{}.holdout_odb, py::arg("tolerance") = 0.005,
      py::arg("allow_empty_train") = false);
  m.def(
      "to_dataset", [](const std::vector<PerformanceRecord>& r, Capacity c) { return to_dataset(r, c); },
      py::arg("records"), py::arg("capacity"));
  m.def(
      "generate_synthetic_map",
      [](std::uint64_t seed, double noise) {
        GridSpec grid;
        grid.noise = noise;
        return generate_synthetic_map(grid, seed).records;
      },
      py::arg("seed") = 1, py::arg("noise") = 0.0);
}
