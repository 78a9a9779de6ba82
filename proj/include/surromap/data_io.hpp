#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surromap/efast.hpp"
#include "surromap/hvac.hpp"
#include "surromap/mlp.hpp"

namespace surromap {

/// One row of a performance map. Temperatures in degC, capacities in kW.
struct PerformanceRecord {
  double t_odb = 0.0;
  double t_edb = 0.0;
  double t_ewb = 0.0;
  double p_tot = 0.0;
  double p_sens = 0.0;
  std::optional<double> p_abs;
  bool flagged = false;  // p_sens > p_tot in the source
};

struct LoadOptions {
  bool strict = false;  // reject p_sens > p_tot instead of flagging
};

/// Parses the map CSV (`t_odb,t_edb,t_ewb,p_tot,p_sens,p_abs`, p_abs optional).
/// Throws ParseError with the 1-based line and column of the first bad field.
std::vector<PerformanceRecord> load_map(std::istream& in, const LoadOptions& options = {});
std::vector<PerformanceRecord> load_map_file(const std::string& path, const LoadOptions& options = {});

void write_map(std::ostream& out, std::span<const PerformanceRecord> records);

struct SplitSpec {
  std::vector<double> holdout_odb{18.33, 29.44, 40.56};
  double tolerance = 0.005;
  bool allow_empty_train = false;  // e.g. splitting a generalization-only extract
};

struct MapSplit {
  std::vector<PerformanceRecord> train;
  std::vector<PerformanceRecord> generalization;
};

/// Rows whose t_odb matches a holdout level go to generalization. An empty
/// training side is rejected unless `allow_empty_train` is set.
MapSplit split(std::span<const PerformanceRecord> records, const SplitSpec& spec);

enum class Capacity { total, sensible, absorbed };

std::string capacity_name(Capacity c);

/// Inputs (t_odb, t_edb, t_ewb); rows without the requested capacity are skipped.
Dataset to_dataset(std::span<const PerformanceRecord> records, Capacity capacity);

// Analytic ground-truth map. Below the dry/wet boundary T*(t_odb, t_edb) the
// coil is dry and p_tot = p_sens; above it p_tot rises and p_sens falls.
// Constants reproduce the published rows at t_odb = 40.56, t_edb = 32.22.
double synthetic_dry_boundary(double t_odb, double t_edb);

struct SyntheticCapacity {
  double p_tot = 0.0;
  double p_sens = 0.0;
  double p_abs = 0.0;
};

SyntheticCapacity synthetic_capacity(double t_odb, double t_edb, double t_ewb);

struct GridSpec {
  std::vector<double> odb{12.78, 18.33, 23.89, 29.44, 32.22, 35.00, 40.56, 46.11};
  std::vector<double> edb{12.78, 18.33, 23.89, 26.67, 32.22, 35.00};
  std::vector<double> ewb{4.4, 12.78, 18.33, 21.11, 23.89, 26.67, 29.44, 32.22};
  double noise = 0.0;  // relative standard deviation of multiplicative noise

  void validate(const MapBounds& bounds = {}) const;
};

struct SyntheticMap {
  std::vector<PerformanceRecord> records;
  std::vector<double> dry_boundary;  // T* for each record
};

/// Grid points with t_ewb > t_edb are skipped.
SyntheticMap generate_synthetic_map(const GridSpec& grid, std::uint64_t seed);

struct Histogram {
  std::string label;
  std::vector<double> edges;  // counts.size() + 1 entries
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max] of the values.
Histogram make_histogram(std::string label, std::span<const double> values, std::size_t bins = 20);

struct SensitivityTable {
  std::string label;
  std::vector<std::string> factors;
  std::vector<double> first_order;
  std::vector<double> total;
  std::vector<double> std_total;

  static SensitivityTable from(std::string label, const SensitivityResult& result);
};

struct PredictionRow {
  OperatingPoint op;
  CapacityPrediction prediction;
};

struct ReportArtifacts {
  std::vector<Histogram> histograms;
  std::vector<SensitivityTable> sensitivities;
  std::vector<PredictionRow> predictions;
};

std::string export_report(const ReportArtifacts& artifacts);
ReportArtifacts import_report(std::string_view text);

}  // namespace surromap
