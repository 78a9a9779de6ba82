#include "surromap/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "surromap/error.hpp"
#include "surromap/random.hpp"
#include "surromap/text_format.hpp"

namespace surromap {

namespace {

constexpr const char* kMapColumns[] = {"t_odb", "t_edb", "t_ewb", "p_tot", "p_sens", "p_abs"};
constexpr const char* kReportHeader = "# surromap report 1";

// Anchor of the synthetic map: t_odb = 40.56, t_edb = 32.22.
constexpr double kAnchorOdb = 40.56;
constexpr double kAnchorEdb = 32.22;
constexpr double kAnchorDryCapacity = 33.17;
constexpr double kAnchorBoundary = 20.6650;
// Wet-coil departures from the dry capacity, d = t_ewb - T*.
constexpr double kTotLinear = 0.925787;
constexpr double kTotQuadratic = 0.0110112;
constexpr double kSensLinear = 1.99725;
constexpr double kSensQuadratic = 0.00806142;

double parse_field(const std::string& field, std::size_t row, std::size_t col) {
  try {
    const double v = text::parse_double(field);
    if (!std::isfinite(v)) throw IoError("non-finite value");
    return v;
  } catch (const IoError& e) {
    throw ParseError(row, col, e.what());
  }
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw IoError("expected true/false, got '" + s + "'");
}

}  // namespace

std::vector<PerformanceRecord> load_map(std::istream& in, const LoadOptions& options) {
  std::vector<PerformanceRecord> records;
  std::string line;
  std::size_t row = 0;
  std::map<std::string, std::size_t> column;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++row;
    if (row == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, ',');
    if (!have_header) {
      for (std::size_t c = 0; c < fields.size(); ++c) column[text::trim(fields[c])] = c;
      for (std::size_t k = 0; k < 5; ++k) {
        if (!column.contains(kMapColumns[k])) {
          throw ParseError(row, fields.size() + 1, std::string("missing column '") + kMapColumns[k] + "'");
        }
      }
      have_header = true;
      continue;
    }
    auto field = [&](const char* name) -> std::optional<std::string> {
      const auto it = column.find(name);
      if (it == column.end()) return std::nullopt;
      if (it->second >= fields.size()) throw ParseError(row, it->second + 1, std::string("missing field ") + name);
      return text::trim(fields[it->second]);
    };
    auto number = [&](const char* name) { return parse_field(*field(name), row, column.at(name) + 1); };
    PerformanceRecord r;
    r.t_odb = number("t_odb");
    r.t_edb = number("t_edb");
    r.t_ewb = number("t_ewb");
    r.p_tot = number("p_tot");
    r.p_sens = number("p_sens");
    if (const auto abs = field("p_abs"); abs && !abs->empty()) {
      r.p_abs = parse_field(*abs, row, column.at("p_abs") + 1);
      if (!(*r.p_abs > 0.0)) throw ParseError(row, column.at("p_abs") + 1, "capacity must be positive");
    }
    if (!(r.p_tot > 0.0)) throw ParseError(row, column.at("p_tot") + 1, "capacity must be positive");
    if (!(r.p_sens > 0.0)) throw ParseError(row, column.at("p_sens") + 1, "capacity must be positive");
    if (r.p_sens > r.p_tot) {
      if (options.strict) throw ParseError(row, column.at("p_sens") + 1, "sensible capacity exceeds total");
      r.flagged = true;
    }
    records.push_back(r);
  }
  return records;
}

std::vector<PerformanceRecord> load_map_file(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open map file '" + path + "'");
  return load_map(in, options);
}

void write_map(std::ostream& out, std::span<const PerformanceRecord> records) {
  out << "t_odb,t_edb,t_ewb,p_tot,p_sens,p_abs\n";
  for (const auto& r : records) {
    using text::format_double;
    out << format_double(r.t_odb) << ',' << format_double(r.t_edb) << ',' << format_double(r.t_ewb) << ','
        << format_double(r.p_tot) << ',' << format_double(r.p_sens) << ',' << (r.p_abs ? format_double(*r.p_abs) : "")
        << '\n';
  }
}

MapSplit split(std::span<const PerformanceRecord> records, const SplitSpec& spec) {
  if (spec.holdout_odb.empty()) throw std::invalid_argument("holdout list is empty");
  if (!(spec.tolerance > 0.0)) throw std::invalid_argument("holdout tolerance must be positive");
  std::vector<double> levels;
  for (const auto& r : records) levels.push_back(r.t_odb);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i] - levels[i - 1] <= spec.tolerance) {
      throw std::invalid_argument("holdout tolerance is not below the gap between t_odb levels " +
                                  text::format_double(levels[i - 1]) + " and " + text::format_double(levels[i]));
    }
  }
  MapSplit out;
  for (const auto& r : records) {
    const bool held = std::any_of(spec.holdout_odb.begin(), spec.holdout_odb.end(),
                                  [&](double h) { return std::abs(r.t_odb - h) <= spec.tolerance; });
    (held ? out.generalization : out.train).push_back(r);
  }
  if (out.train.empty() && !records.empty() && !spec.allow_empty_train) throw std::invalid_argument("training set is empty after the holdout split");
  return out;
}

std::string capacity_name(Capacity c) {
  switch (c) {
    case Capacity::total: return "p_tot";
    case Capacity::sensible: return "p_sens";
    case Capacity::absorbed: return "p_abs";
  }
  return "";
}

Dataset to_dataset(std::span<const PerformanceRecord> records, Capacity capacity) {
  Dataset d;
  d.n_inputs = 3;
  d.input_names = {"t_odb", "t_edb", "t_ewb"};
  d.input_units = {"degC", "degC", "degC"};
  d.target_name = capacity_name(capacity);
  d.target_unit = "kW";
  for (const auto& r : records) {
    const double x[3] = {r.t_odb, r.t_edb, r.t_ewb};
    switch (capacity) {
      case Capacity::total: d.add(x, r.p_tot); break;
      case Capacity::sensible: d.add(x, r.p_sens); break;
      case Capacity::absorbed:
        if (r.p_abs) d.add(x, *r.p_abs);
        break;
    }
  }
  return d;
}

double synthetic_dry_boundary(double t_odb, double t_edb) {
  return kAnchorBoundary + 0.62 * (t_edb - kAnchorEdb) + 0.04 * (t_odb - kAnchorOdb);
}

SyntheticCapacity synthetic_capacity(double t_odb, double t_edb, double t_ewb) {
  const double dry = kAnchorDryCapacity * (1.0 + 0.025 * (t_edb - kAnchorEdb)) * (1.0 - 0.008 * (t_odb - kAnchorOdb));
  const double scale = dry / kAnchorDryCapacity;
  const double d = std::max(0.0, t_ewb - synthetic_dry_boundary(t_odb, t_edb));
  SyntheticCapacity c;
  c.p_tot = dry + scale * d * (kTotLinear + kTotQuadratic * d);
  c.p_sens = dry - scale * d * (kSensLinear + kSensQuadratic * d);
  c.p_abs = 8.0 * (1.0 + 0.015 * (t_odb - 35.0) + 0.006 * (t_ewb - 19.0) + 0.002 * (t_edb - 27.0));
  return c;
}

void GridSpec::validate(const MapBounds& bounds) const {
  auto check = [](const std::vector<double>& levels, double lo, double hi, const char* name) {
    if (levels.empty()) throw std::invalid_argument(std::string(name) + " grid is empty");
    for (double v : levels) {
      if (!(v >= lo && v <= hi)) {
        throw std::invalid_argument(std::string(name) + " level " + text::format_double(v) + " outside [" +
                                    text::format_double(lo) + ", " + text::format_double(hi) + "]");
      }
    }
  };
  check(odb, bounds.odb_min, bounds.odb_max, "t_odb");
  check(edb, bounds.edb_min, bounds.edb_max, "t_edb");
  check(ewb, bounds.ewb_min, bounds.ewb_max, "t_ewb");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw std::invalid_argument("noise must be nonnegative");
}

SyntheticMap generate_synthetic_map(const GridSpec& grid, std::uint64_t seed) {
  grid.validate();
  SyntheticMap map;
  Rng rng(seed);
  for (double odb : grid.odb) {
    for (double edb : grid.edb) {
      for (double ewb : grid.ewb) {
        if (ewb > edb) continue;
        const auto c = synthetic_capacity(odb, edb, ewb);
        PerformanceRecord r{odb, edb, ewb, c.p_tot, c.p_sens, c.p_abs, false};
        if (grid.noise > 0.0) {
          // One factor for both cooling capacities keeps p_sens <= p_tot.
          const double cooling = 1.0 + grid.noise * rng.normal();
          const double electric = 1.0 + grid.noise * rng.normal();
          r.p_tot *= cooling;
          r.p_sens *= cooling;
          *r.p_abs *= electric;
        }
        map.records.push_back(r);
        map.dry_boundary.push_back(synthetic_dry_boundary(odb, edb));
      }
    }
  }
  return map;
}

Histogram make_histogram(std::string label, std::span<const double> values, std::size_t bins) {
  if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  Histogram h;
  h.label = std::move(label);
  double lo = 0.0, hi = 1.0;
  if (!values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges.push_back(b == bins ? hi : lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins));
  }
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

SensitivityTable SensitivityTable::from(std::string label, const SensitivityResult& result) {
  return {std::move(label), result.names, result.first_order, result.total, result.total_std};
}

std::string export_report(const ReportArtifacts& artifacts) {
  using text::format_double;
  std::ostringstream out;
  out << kReportHeader << '\n';
  for (const auto& h : artifacts.histograms) {
    out << "[histogram " << h.label << "]\n";
    out << "bin_lower,bin_upper,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      out << format_double(h.edges[b]) << ',' << format_double(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
    }
  }
  for (const auto& s : artifacts.sensitivities) {
    out << "[sensitivity " << s.label << "]\n";
    out << "factor,first_order,total,std_total\n";
    for (std::size_t i = 0; i < s.factors.size(); ++i) {
      out << s.factors[i] << ',' << format_double(s.first_order[i]) << ',' << format_double(s.total[i]) << ','
          << format_double(s.std_total[i]) << '\n';
    }
  }
  if (!artifacts.predictions.empty()) {
    out << "[predictions]\n" << prediction_header() << '\n';
    for (const auto& p : artifacts.predictions) out << prediction_record(p.op, p.prediction) << '\n';
  }
  return out.str();
}

ReportArtifacts import_report(std::string_view text_in) {
  ReportArtifacts a;
  const auto lines = text::split(text_in, '\n');
  if (lines.empty() || text::trim(lines[0]) != kReportHeader) throw IoError("not a surromap report");
  enum class Section { none, histogram, sensitivity, predictions } section = Section::none;
  bool expect_columns = false;
  for (std::size_t n = 1; n < lines.size(); ++n) {
    const std::string line = text::trim(lines[n]);
    if (line.empty()) continue;
    try {
      if (line.front() == '[') {
        if (line.back() != ']') throw IoError("unterminated section header");
        const std::string body = line.substr(1, line.size() - 2);
        if (body.starts_with("histogram ")) {
          section = Section::histogram;
          a.histograms.push_back({body.substr(10), {}, {}});
        } else if (body.starts_with("sensitivity ")) {
          section = Section::sensitivity;
          a.sensitivities.push_back({body.substr(12), {}, {}, {}, {}});
        } else if (body == "predictions") {
          section = Section::predictions;
        } else {
          throw IoError("unknown section '" + body + "'");
        }
        expect_columns = true;
        continue;
      }
      if (expect_columns) {
        expect_columns = false;
        continue;
      }
      const auto f = text::split(line, ',');
      switch (section) {
        case Section::histogram: {
          if (f.size() != 3) throw IoError("histogram rows have 3 fields");
          auto& h = a.histograms.back();
          const double lo = text::parse_double(f[0]);
          if (h.edges.empty()) h.edges.push_back(lo);
          h.edges.push_back(text::parse_double(f[1]));
          h.counts.push_back(static_cast<std::size_t>(std::stoull(f[2])));
          break;
        }
        case Section::sensitivity: {
          if (f.size() != 4) throw IoError("sensitivity rows have 4 fields");
          auto& s = a.sensitivities.back();
          s.factors.push_back(f[0]);
          s.first_order.push_back(text::parse_double(f[1]));
          s.total.push_back(text::parse_double(f[2]));
          s.std_total.push_back(text::parse_double(f[3]));
          break;
        }
        case Section::predictions: {
          if (f.size() != 9) throw IoError("prediction rows have 9 fields");
          PredictionRow row;
          row.op = {text::parse_double(f[0]), text::parse_double(f[1]), text::parse_double(f[2])};
          row.prediction.q_tot = text::parse_double(f[3]);
          row.prediction.q_sens = text::parse_double(f[4]);
          row.prediction.q_abs = text::parse_double(f[5]);
          row.prediction.dry_coil = parse_bool(f[6]);
          if (!text::trim(f[7]).empty()) row.prediction.t_ewb_opt = text::parse_double(f[7]);
          row.prediction.corrected = parse_bool(f[8]);
          a.predictions.push_back(row);
          break;
        }
        case Section::none: throw IoError("data outside any section");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(n + 1, 1, e.what());
    }
  }
  return a;
}

}  // namespace surromap
