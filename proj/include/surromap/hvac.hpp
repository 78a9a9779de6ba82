#pragma once

#include <array>
#include <optional>
#include <string>
#include <variant>

#include "surromap/efast.hpp"
#include "surromap/metamodel.hpp"
#include "surromap/mlp.hpp"

namespace surromap {

/// Air state at the split system, all temperatures in degC.
struct OperatingPoint {
  double t_odb = 0.0;  // outdoor dry bulb
  double t_edb = 0.0;  // entering dry bulb
  double t_ewb = 0.0;  // entering wet bulb

  /// Rejects non-finite values and t_ewb > t_edb.
  static OperatingPoint make(double t_odb, double t_edb, double t_ewb);

  std::array<double, 3> as_array() const { return {t_odb, t_edb, t_ewb}; }
};

/// Manufacturer map domain.
struct MapBounds {
  double odb_min = 12.78, odb_max = 46.11;
  double edb_min = 12.78, edb_max = 35.00;
  double ewb_min = 4.4, ewb_max = 35.00;

  bool contains(const OperatingPoint& op) const;
  FactorSpace factor_space() const;
};

/// A trained network or a polynomial metamodel over (t_odb, t_edb, t_ewb).
class CapacityModel {
 public:
  CapacityModel(MlpNetwork net);
  CapacityModel(PolynomialMetamodel poly);

  double operator()(const OperatingPoint& op) const;

  const PolynomialMetamodel* polynomial() const { return std::get_if<PolynomialMetamodel>(&model_); }
  const MlpNetwork* network() const { return std::get_if<MlpNetwork>(&model_); }
  std::vector<std::string> variable_names() const;

 private:
  std::variant<MlpNetwork, PolynomialMetamodel> model_;
};

/// Loads either a serialized network or a serialized polynomial.
CapacityModel parse_capacity_model(std::string_view text);

struct PerformanceMaps {
  CapacityModel total;
  CapacityModel sensible;
  CapacityModel absorbed;

  void validate() const;
};

struct CapacityPrediction {
  double q_tot = 0.0;
  double q_sens = 0.0;
  double q_abs = 0.0;
  bool dry_coil = false;
  std::optional<double> t_ewb_opt;
  bool corrected = false;
  bool extrapolated = false;
  std::string diagnostic;
};

/// Evaluates the three maps; flags dry_coil when q_sens > q_tot.
CapacityPrediction predict_steady_state(const PerformanceMaps& maps, const OperatingPoint& op,
                                        bool allow_extrapolation = false, const MapBounds& bounds = {});

/// Solves P_tot - P_sens = 0 for t_ewb in [bounds.ewb_min, t_edb] on the
/// polynomial total/sensible maps of `solve_maps` and re-evaluates at the root.
/// Capacities come from `report_maps` when given, else from `solve_maps`.
/// Without an in-bracket root the sensible capacity is clamped to the total.
CapacityPrediction correct_dry_coil(const PerformanceMaps& solve_maps, const OperatingPoint& op,
                                    const PerformanceMaps* report_maps = nullptr, const MapBounds& bounds = {});

/// predict_steady_state() followed, on a dry coil, by correct_dry_coil().
CapacityPrediction predict(const PerformanceMaps& maps, const OperatingPoint& op, bool correct,
                           const PerformanceMaps* metamodels = nullptr, bool allow_extrapolation = false,
                           const MapBounds& bounds = {});

/// Polynomial metamodels of the three maps with the capacity term sets.
PerformanceMaps extract_metamodels(const PerformanceMaps& maps, const MapBounds& bounds = {},
                                   const ExtractOptions& options = {});

struct DynamicsConfig {
  double tau = 0.0;  // start-up time constant, seconds

  void validate() const;
};

enum class Channel { total, sensible, absorbed };

/// First-order start-up response; the absorbed channel is at steady state.
double dynamic_capacity(double q_ss, double t, const DynamicsConfig& cfg, Channel channel);

std::string prediction_header();
std::string prediction_record(const OperatingPoint& op, const CapacityPrediction& p);

}  // namespace surromap
