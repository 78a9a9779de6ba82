#include "surromap/hvac.hpp"

#include <cmath>
#include <stdexcept>

#include "surromap/error.hpp"
#include "surromap/text_format.hpp"

namespace surromap {

namespace {

constexpr std::size_t kEwb = 2;

double checked(const CapacityModel& model, const OperatingPoint& op, const char* name) {
  const double q = model(op);
  if (!std::isfinite(q)) throw Error(std::string(name) + " capacity model returned a non-finite value");
  return q;
}

}  // namespace

OperatingPoint OperatingPoint::make(double t_odb, double t_edb, double t_ewb) {
  if (!std::isfinite(t_odb) || !std::isfinite(t_edb) || !std::isfinite(t_ewb)) {
    throw std::invalid_argument("operating point temperatures must be finite");
  }
  if (t_ewb > t_edb) {
    throw std::invalid_argument("wet bulb " + text::format_double(t_ewb) + " exceeds dry bulb " +
                                text::format_double(t_edb));
  }
  return {t_odb, t_edb, t_ewb};
}

bool MapBounds::contains(const OperatingPoint& op) const {
  return op.t_odb >= odb_min && op.t_odb <= odb_max && op.t_edb >= edb_min && op.t_edb <= edb_max &&
         op.t_ewb >= ewb_min && op.t_ewb <= ewb_max;
}

FactorSpace MapBounds::factor_space() const {
  return {{{"t_odb", odb_min, odb_max}, {"t_edb", edb_min, edb_max}, {"t_ewb", ewb_min, ewb_max}}};
}

CapacityModel::CapacityModel(MlpNetwork net) : model_(std::move(net)) {
  const auto& n = std::get<MlpNetwork>(model_);
  n.validate();
  if (n.n_inputs != 3) throw std::invalid_argument("capacity network must have 3 inputs");
}

CapacityModel::CapacityModel(PolynomialMetamodel poly) : model_(std::move(poly)) {
  const auto& p = std::get<PolynomialMetamodel>(model_);
  p.validate();
  if (p.variables.size() != 3) throw std::invalid_argument("capacity polynomial must have 3 variables");
}

double CapacityModel::operator()(const OperatingPoint& op) const {
  const auto x = op.as_array();
  if (const auto* net = network()) return forward(*net, x);
  return evaluate_polynomial(*polynomial(), x);
}

std::vector<std::string> CapacityModel::variable_names() const {
  if (const auto* net = network()) return net->input_names;
  return polynomial()->variable_names();
}

CapacityModel parse_capacity_model(std::string_view text) {
  if (text.find("surromap-mlp") != std::string_view::npos) return CapacityModel(parse_network(text));
  if (text.find("surromap-poly") != std::string_view::npos) return CapacityModel(parse_metamodel(text));
  throw IoError("document is neither a network nor a polynomial model");
}

void PerformanceMaps::validate() const {
  const auto names = total.variable_names();
  if (sensible.variable_names() != names || absorbed.variable_names() != names) {
    throw std::invalid_argument("capacity models disagree on input variable ordering");
  }
}

CapacityPrediction predict_steady_state(const PerformanceMaps& maps, const OperatingPoint& op,
                                        bool allow_extrapolation, const MapBounds& bounds) {
  CapacityPrediction p;
  p.extrapolated = !bounds.contains(op);
  if (p.extrapolated && !allow_extrapolation) {
    throw std::invalid_argument("operating point lies outside the map bounds; extrapolation not enabled");
  }
  p.q_tot = checked(maps.total, op, "total");
  p.q_sens = checked(maps.sensible, op, "sensible");
  p.q_abs = checked(maps.absorbed, op, "absorbed");
  p.dry_coil = p.q_sens > p.q_tot;
  return p;
}

CapacityPrediction correct_dry_coil(const PerformanceMaps& solve_maps, const OperatingPoint& op,
                                    const PerformanceMaps* report_maps, const MapBounds& bounds) {
  const auto* tot = solve_maps.total.polynomial();
  const auto* sens = solve_maps.sensible.polynomial();
  if (!tot || !sens) throw std::invalid_argument("dry-coil correction needs polynomial total and sensible maps");
  const PerformanceMaps& report = report_maps ? *report_maps : solve_maps;

  CapacityPrediction p;
  p.dry_coil = true;
  p.corrected = true;
  p.extrapolated = !bounds.contains(op);

  const auto x = op.as_array();
  const Quadratic residual = restrict_to_variable(*tot, kEwb, x) - restrict_to_variable(*sens, kEwb, x);
  std::optional<double> root;
  if (op.t_edb >= bounds.ewb_min) {
    // Largest root at or below t_edb: the dry/wet boundary approached from the dry side.
    const auto search = solve_univariate(residual, bounds.ewb_min, op.t_edb);
    if (!search.roots.empty()) root = search.roots.back();
    if (!root) p.diagnostic = "clamped, no root (min |F| = " + text::format_double(search.min_abs) + ")";
  } else {
    p.diagnostic = "clamped, no root (empty bracket)";
  }

  if (root) {
    const OperatingPoint at_root{op.t_odb, op.t_edb, *root};
    p.t_ewb_opt = *root;
    p.q_tot = checked(report.total, at_root, "total");
    p.q_abs = checked(report.absorbed, at_root, "absorbed");
  } else {
    p.q_tot = checked(report.total, op, "total");
    p.q_abs = checked(report.absorbed, op, "absorbed");
  }
  p.q_sens = p.q_tot;
  return p;
}

CapacityPrediction predict(const PerformanceMaps& maps, const OperatingPoint& op, bool correct,
                           const PerformanceMaps* metamodels, bool allow_extrapolation, const MapBounds& bounds) {
  auto p = predict_steady_state(maps, op, allow_extrapolation, bounds);
  if (!correct || !p.dry_coil) return p;
  const PerformanceMaps& solve = metamodels ? *metamodels : maps;
  auto c = correct_dry_coil(solve, op, nullptr, bounds);
  c.extrapolated = p.extrapolated;
  return c;
}

PerformanceMaps extract_metamodels(const PerformanceMaps& maps, const MapBounds& bounds,
                                   const ExtractOptions& options) {
  const FactorSpace space = bounds.factor_space();
  auto extract = [&](const CapacityModel& model, const TermSet& terms) {
    const auto f = [&model](std::span<const double> x) { return model(OperatingPoint{x[0], x[1], x[2]}); };
    return CapacityModel(extract_polynomial(f, space, terms, options));
  };
  return {extract(maps.total, TermSet::hvac_total()), extract(maps.sensible, TermSet::hvac_sensible()),
          extract(maps.absorbed, TermSet::hvac_absorbed())};
}

void DynamicsConfig::validate() const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be a positive number of seconds");
}

double dynamic_capacity(double q_ss, double t, const DynamicsConfig& cfg, Channel channel) {
  cfg.validate();
  if (!(t >= 0.0)) throw std::invalid_argument("time must be nonnegative");
  if (channel == Channel::absorbed) return q_ss;
  return -q_ss * std::expm1(-t / cfg.tau);
}

std::string prediction_header() { return "t_odb,t_edb,t_ewb,q_tot,q_sens,q_abs,dry_coil,t_ewb_opt,corrected"; }

std::string prediction_record(const OperatingPoint& op, const CapacityPrediction& p) {
  using text::format_double;
  return format_double(op.t_odb) + "," + format_double(op.t_edb) + "," + format_double(op.t_ewb) + "," +
         format_double(p.q_tot) + "," + format_double(p.q_sens) + "," + format_double(p.q_abs) + "," +
         (p.dry_coil ? "true" : "false") + "," + (p.t_ewb_opt ? format_double(*p.t_ewb_opt) : "") + "," +
         (p.corrected ? "true" : "false");
}

}  // namespace surromap
