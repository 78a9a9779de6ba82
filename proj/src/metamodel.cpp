#include "surromap/metamodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <set>

#include "surromap/error.hpp"
#include "surromap/random.hpp"
#include "surromap/text_format.hpp"

namespace surromap {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kNegligibleSignature = 1e-12;

unsigned degree(const Exponents& e) { return std::accumulate(e.begin(), e.end(), 0u); }

using Combination = std::vector<int>;

// m and -m occupy the same bin; keep the one whose first nonzero entry is positive.
Combination canonical(Combination m) {
  const auto it = std::find_if(m.begin(), m.end(), [](int v) { return v != 0; });
  if (it != m.end() && *it < 0) {
    for (auto& v : m) v = -v;
  }
  return m;
}

long long combination_frequency(const Combination& m, std::span<const unsigned> freqs) {
  long long f = 0;
  for (std::size_t i = 0; i < m.size(); ++i) f += static_cast<long long>(m[i]) * freqs[i];
  return f;
}

// Every signed combination |m_i| <= e_i produced by prod_i (c_i + h_i sin(w_i s))^e_i.
std::set<Combination> needed_combinations(const TermSet& terms) {
  std::set<Combination> out;
  for (const auto& e : terms.terms) {
    Combination m(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) m[i] = -static_cast<int>(e[i]);
    while (true) {
      out.insert(canonical(m));
      std::size_t i = 0;
      while (i < m.size() && m[i] == static_cast<int>(e[i])) {
        m[i] = -static_cast<int>(e[i]);
        ++i;
      }
      if (i == m.size()) break;
      ++m[i];
    }
  }
  return out;
}

// Canonical nonzero combinations with sum |m_i| <= order.
std::vector<Combination> combinations_up_to(std::size_t n, unsigned order) {
  std::set<Combination> out;
  Combination m(n, -static_cast<int>(order));
  while (true) {
    unsigned total = 0;
    for (int v : m) total += static_cast<unsigned>(std::abs(v));
    if (total >= 1 && total <= order) out.insert(canonical(m));
    std::size_t i = 0;
    while (i < n && m[i] == static_cast<int>(order)) {
      m[i] = -static_cast<int>(order);
      ++i;
    }
    if (i == n) break;
    ++m[i];
  }
  return {out.begin(), out.end()};
}

std::string format_combination(const Combination& m) {
  std::string s = "(";
  for (std::size_t i = 0; i < m.size(); ++i) s += (i ? "," : "") + std::to_string(m[i]);
  return s + ")";
}

bool separates(std::span<const unsigned> freqs, const std::vector<Combination>& combos) {
  std::set<long long> seen;
  for (const auto& m : combos) {
    const long long f = std::llabs(combination_frequency(m, freqs));
    if (f == 0 || !seen.insert(f).second) return false;
  }
  return true;
}

// Enumerates strictly increasing tuples below `top` into freqs[0..pos).
bool search_tuple(std::vector<unsigned>& freqs, std::size_t pos, unsigned top, const std::vector<Combination>& combos) {
  if (pos == 0) return separates(freqs, combos);
  for (unsigned w = pos; w < top; ++w) {
    freqs[pos - 1] = w;
    if (search_tuple(freqs, pos - 1, w, combos)) return true;
  }
  return false;
}

double monomial(const Exponents& e, std::span<const double> x) {
  double v = 1.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (unsigned p = 0; p < e[i]; ++p) v *= x[i];
  }
  return v;
}

std::size_t variable_index(std::string_view name, std::span<const std::string> names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  if (name.size() > 1 && name.front() == 'x') {
    const std::string digits(name.substr(1));
    if (std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      const std::size_t i = std::stoul(digits);
      if (i >= 1 && i <= names.size()) return i - 1;
    }
  }
  throw std::invalid_argument("unknown variable '" + std::string(name) + "' in term set");
}

}  // namespace

void TermSet::validate() const {
  if (n_variables < 1) throw std::invalid_argument("term set needs at least one variable");
  if (terms.empty()) throw std::invalid_argument("term set is empty");
  std::set<Exponents> seen;
  bool has_constant = false;
  for (const auto& e : terms) {
    if (e.size() != n_variables) throw std::invalid_argument("term exponent vector has the wrong length");
    if (!seen.insert(e).second) throw std::invalid_argument("duplicate term in term set");
    if (degree(e) == 0) has_constant = true;
  }
  if (!has_constant) throw std::invalid_argument("term set must include the constant term");
}

unsigned TermSet::max_degree() const {
  unsigned d = 0;
  for (const auto& e : terms) d = std::max(d, degree(e));
  return d;
}

TermSet TermSet::hvac_total() {
  return {3, {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {0, 0, 2}, {0, 2, 0}, {2, 0, 0}}};
}

TermSet TermSet::hvac_sensible() {
  auto t = hvac_total();
  t.terms.push_back({1, 0, 1});
  return t;
}

TermSet TermSet::hvac_absorbed() {
  return {3, {{0, 0, 0}, {0, 0, 1}, {0, 1, 0}, {1, 0, 0}, {0, 0, 2}, {2, 0, 0}, {1, 0, 1}, {0, 1, 2}}};
}

TermSet TermSet::parse(std::string_view spec, std::span<const std::string> variable_names) {
  if (spec == "eq5" || spec == "eq6" || spec == "eq7") {
    if (variable_names.size() != 3) throw std::invalid_argument("capacity term sets need exactly three variables");
    return spec == "eq5" ? hvac_total() : spec == "eq6" ? hvac_sensible() : hvac_absorbed();
  }
  constexpr std::string_view prefix = "custom:";
  if (!spec.starts_with(prefix)) {
    throw std::invalid_argument("term set must be eq5, eq6, eq7 or custom:<monomials>, got '" + std::string(spec) + "'");
  }
  TermSet set{variable_names.size(), {}};
  for (const auto& raw : text::split(spec.substr(prefix.size()), ';')) {
    const std::string mono = text::trim(raw);
    if (mono.empty()) continue;
    Exponents e(variable_names.size(), 0);
    if (mono != "1") {
      for (const auto& factor_raw : text::split(mono, '*')) {
        const std::string factor = text::trim(factor_raw);
        const auto caret = factor.find('^');
        const std::string name = factor.substr(0, caret);
        unsigned power = 1;
        if (caret != std::string::npos) {
          const std::string p = factor.substr(caret + 1);
          if (p.empty() || !std::all_of(p.begin(), p.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            throw std::invalid_argument("bad exponent in term '" + mono + "'");
          }
          power = static_cast<unsigned>(std::stoul(p));
        }
        e[variable_index(name, variable_names)] += power;
      }
    }
    set.terms.push_back(e);
  }
  set.validate();
  return set;
}

std::string TermSet::describe(std::span<const std::string> variable_names) const {
  std::string out;
  for (const auto& e : terms) {
    if (!out.empty()) out += ';';
    std::string mono;
    for (std::size_t i = 0; i < e.size(); ++i) {
      if (e[i] == 0) continue;
      if (!mono.empty()) mono += '*';
      mono += variable_names[i];
      if (e[i] > 1) mono += "^" + std::to_string(e[i]);
    }
    out += mono.empty() ? "1" : mono;
  }
  return out;
}

std::vector<std::string> PolynomialMetamodel::variable_names() const {
  std::vector<std::string> names;
  for (const auto& v : variables) names.push_back(v.name);
  return names;
}

void PolynomialMetamodel::validate() const {
  FactorSpace{variables}.validate();
  TermSet set{variables.size(), {}};
  for (const auto& t : terms) {
    if (!std::isfinite(t.coefficient)) throw std::invalid_argument("polynomial has a non-finite coefficient");
    set.terms.push_back(t.exponents);
  }
  set.validate();
}

double evaluate_polynomial(const PolynomialMetamodel& p, std::span<const double> x, bool* extrapolated) {
  if (x.size() != p.variables.size()) {
    throw std::invalid_argument("point has " + std::to_string(x.size()) + " coordinates, polynomial expects " +
                                std::to_string(p.variables.size()));
  }
  if (extrapolated) {
    *extrapolated = false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] < p.variables[i].lower || x[i] > p.variables[i].upper) *extrapolated = true;
    }
  }
  double y = 0.0;
  for (const auto& t : p.terms) y += t.coefficient * monomial(t.exponents, x);
  return y;
}

double sinusoid_point(const Factor& factor, unsigned frequency, double s) {
  const double center = 0.5 * (factor.lower + factor.upper);
  const double half = 0.5 * (factor.upper - factor.lower);
  return center + half * std::sin(frequency * s);
}

std::vector<double> sinusoid_design(const FactorSpace& space, std::span<const unsigned> frequencies,
                                    std::size_t samples) {
  space.validate();
  const std::size_t k = space.size();
  if (frequencies.size() != k) throw std::invalid_argument("design needs one frequency per variable");
  if (samples < 1) throw std::invalid_argument("design needs at least one sample");
  std::vector<double> out(samples * k);
  for (std::size_t t = 0; t < samples; ++t) {
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t turns = (static_cast<std::size_t>(frequencies[i]) * t) % samples;
      const double s = kTwoPi * static_cast<double>(turns) / static_cast<double>(samples);
      out[t * k + i] = sinusoid_point(space.factors[i], 1, s);
    }
  }
  return out;
}

void check_design(const TermSet& terms, std::span<const unsigned> frequencies, std::size_t samples) {
  terms.validate();
  if (frequencies.size() != terms.n_variables) throw std::invalid_argument("design needs one frequency per variable");
  if (samples < 1) throw std::invalid_argument("design needs at least one sample");
  const auto n = static_cast<long long>(samples);
  std::map<long long, Combination> bins;
  for (const auto& m : needed_combinations(terms)) {
    long long r = combination_frequency(m, frequencies) % n;
    if (r < 0) r += n;
    const long long bin = std::min(r, n - r);
    const auto [it, inserted] = bins.emplace(bin, m);
    if (!inserted) {
      throw DesignCollision(it->second, m,
                            "combination frequencies " + format_combination(it->second) + " and " +
                                format_combination(m) + " share spectral bin " + std::to_string(bin));
    }
  }
}

std::vector<unsigned> choose_frequencies(std::size_t n_variables, unsigned guard_degree) {
  if (n_variables < 1) throw std::invalid_argument("need at least one variable");
  if (guard_degree < 1) throw std::invalid_argument("guard degree must be at least 1");
  const auto combos = combinations_up_to(n_variables, guard_degree);
  constexpr unsigned kSearchLimit = 2000;
  std::vector<unsigned> freqs(n_variables);
  for (unsigned top = static_cast<unsigned>(n_variables); top <= kSearchLimit; ++top) {
    freqs.back() = top;
    if (search_tuple(freqs, n_variables - 1, top, combos)) return freqs;
  }
  throw std::invalid_argument("no admissible frequency set below " + std::to_string(kSearchLimit));
}

std::size_t design_samples(std::span<const unsigned> frequencies, unsigned guard_degree) {
  const unsigned top = frequencies.empty() ? 1u : *std::max_element(frequencies.begin(), frequencies.end());
  return 2 * static_cast<std::size_t>(guard_degree) * top + 1;
}

PolynomialMetamodel extract_polynomial(const ScalarFunction& f, const FactorSpace& space, const TermSet& terms,
                                       const ExtractOptions& options) {
  space.validate();
  terms.validate();
  const std::size_t k = space.size();
  if (terms.n_variables != k) throw std::invalid_argument("term set and factor space disagree on variable count");
  const unsigned guard = options.guard_degree ? options.guard_degree : terms.max_degree() + 2;
  const auto freqs = options.frequencies.empty() ? choose_frequencies(k, guard) : options.frequencies;
  const std::size_t samples = options.samples ? options.samples : design_samples(freqs, guard);
  check_design(terms, freqs, samples);

  const auto design = sinusoid_design(space, freqs, samples);
  std::vector<double> y(samples);
  double mean_square = 0.0;
  for (std::size_t t = 0; t < samples; ++t) {
    y[t] = f(std::span<const double>(design.data() + t * k, k));
    if (!std::isfinite(y[t])) throw Error("source model returned a non-finite value on the design");
    mean_square += y[t] * y[t];
  }
  const double rms = std::sqrt(mean_square / static_cast<double>(samples));

  // Variables are divided by their largest magnitude; pure scaling keeps
  // every monomial inside the term set.
  std::vector<double> scale(k);
  for (std::size_t i = 0; i < k; ++i) {
    scale[i] = std::max(std::abs(space.factors[i].lower), std::abs(space.factors[i].upper));
  }
  const std::size_t nt = terms.terms.size();
  std::vector<std::vector<double>> basis(nt, std::vector<double>(samples));
  std::vector<double> z(k);
  for (std::size_t t = 0; t < samples; ++t) {
    for (std::size_t i = 0; i < k; ++i) z[i] = design[t * k + i] / scale[i];
    for (std::size_t j = 0; j < nt; ++j) basis[j][t] = monomial(terms.terms[j], z);
  }

  // Signature of term j: the harmonic sum_i e_ji w_i, read from the cosine
  // part for even degree and the sine part for odd degree.
  auto signature = [&](std::size_t j, std::span<const double> v) {
    const auto& e = terms.terms[j];
    std::size_t f_sig = 0;
    for (std::size_t i = 0; i < k; ++i) f_sig += static_cast<std::size_t>(e[i]) * freqs[i];
    const bool odd = degree(e) % 2 == 1;
    double acc = 0.0;
    for (std::size_t t = 0; t < samples; ++t) {
      const double s = kTwoPi * static_cast<double>((f_sig * t) % samples) / static_cast<double>(samples);
      acc += v[t] * (odd ? std::sin(s) : std::cos(s));
    }
    return acc / static_cast<double>(samples);
  };

  std::vector<std::size_t> order(nt);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return degree(terms.terms[a]) > degree(terms.terms[b]); });

  PolynomialMetamodel model;
  model.variables = space.factors;
  std::vector<double> coef(nt, 0.0);
  std::vector<std::size_t> solved;
  for (std::size_t j : order) {
    double residual = signature(j, y);
    for (std::size_t m : solved) residual -= signature(j, basis[m]) * coef[m];
    const double diag = signature(j, basis[j]);
    if (std::abs(residual) <= kNegligibleSignature * rms) {
      coef[j] = 0.0;
      model.warnings.push_back("term " + std::to_string(j) + ": negligible signature amplitude, coefficient set to 0");
    } else {
      coef[j] = residual / diag;
    }
    solved.push_back(j);
  }

  for (std::size_t j = 0; j < nt; ++j) {
    double denom = 1.0;
    for (std::size_t i = 0; i < k; ++i) denom *= std::pow(scale[i], static_cast<double>(terms.terms[j][i]));
    model.terms.push_back({terms.terms[j], coef[j] / denom});
  }

  const std::size_t nv = std::max<std::size_t>(options.validation_points, 500);
  Rng rng(options.seed);
  std::vector<double> x(k);
  double sse = 0.0;
  for (std::size_t v = 0; v < nv; ++v) {
    for (std::size_t i = 0; i < k; ++i) x[i] = rng.uniform(space.factors[i].lower, space.factors[i].upper);
    const double d = evaluate_polynomial(model, x) - f(x);
    sse += d * d;
  }
  model.fit_error = std::sqrt(sse / static_cast<double>(nv));
  return model;
}

Quadratic restrict_to_variable(const PolynomialMetamodel& p, std::size_t free_index, std::span<const double> point) {
  if (free_index >= p.variables.size()) throw std::invalid_argument("free variable index out of range");
  if (point.size() != p.variables.size()) throw std::invalid_argument("point dimension does not match polynomial");
  double c[3] = {0.0, 0.0, 0.0};
  for (const auto& t : p.terms) {
    double v = t.coefficient;
    for (std::size_t i = 0; i < point.size(); ++i) {
      if (i == free_index) continue;
      for (unsigned q = 0; q < t.exponents[i]; ++q) v *= point[i];
    }
    const unsigned d = t.exponents[free_index];
    if (d > 2) {
      if (t.coefficient != 0.0) {
        throw std::invalid_argument("free variable '" + p.variables[free_index].name + "' enters with degree " +
                                    std::to_string(d) + " > 2");
      }
      continue;
    }
    c[d] += v;
  }
  return {c[0], c[1], c[2]};
}

RootSearch solve_univariate(const Quadratic& q, double lower, double upper) {
  if (!std::isfinite(lower) || !std::isfinite(upper) || !(lower <= upper)) {
    throw std::invalid_argument("bracket must be finite with lower <= upper");
  }
  RootSearch out;
  std::vector<double> candidates;
  if (q.c2 != 0.0) {
    const double disc = q.c1 * q.c1 - 4.0 * q.c2 * q.c0;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      const double h = -0.5 * (q.c1 + (q.c1 >= 0.0 ? sq : -sq));
      if (h != 0.0) {
        candidates.push_back(h / q.c2);
        candidates.push_back(q.c0 / h);
      } else {
        candidates.push_back(0.0);  // c1 == 0 and c0 == 0
      }
    }
  } else if (q.c1 != 0.0) {
    candidates.push_back(-q.c0 / q.c1);
  }

  const double tol = 1e-12 * std::max({1.0, std::abs(lower), std::abs(upper)});
  for (double r : candidates) {
    if (std::isfinite(r) && r >= lower - tol && r <= upper + tol) out.roots.push_back(std::clamp(r, lower, upper));
  }

  const double f_lo = q(lower);
  const double f_hi = q(upper);
  if ((f_lo < 0.0 && f_hi > 0.0) || (f_lo > 0.0 && f_hi < 0.0)) {
    double a = lower, b = upper, fa = f_lo;
    for (int it = 0; it < 200 && b - a > tol; ++it) {
      const double mid = 0.5 * (a + b);
      const double fm = q(mid);
      if (fm == 0.0) {
        a = b = mid;
        break;
      }
      if ((fm < 0.0) == (fa < 0.0)) {
        a = mid;
        fa = fm;
      } else {
        b = mid;
      }
    }
    const double bisected = 0.5 * (a + b);
    const bool confirmed = std::any_of(out.roots.begin(), out.roots.end(), [&](double r) {
      return std::abs(r - bisected) <= 1e-7 * std::max(1.0, std::abs(r));
    });
    if (!confirmed) out.roots.push_back(bisected);
  }
  std::sort(out.roots.begin(), out.roots.end());
  out.roots.erase(std::unique(out.roots.begin(), out.roots.end()), out.roots.end());

  out.min_abs = std::abs(f_lo);
  out.argmin = lower;
  if (std::abs(f_hi) < out.min_abs) {
    out.min_abs = std::abs(f_hi);
    out.argmin = upper;
  }
  if (q.c2 != 0.0) {
    const double vertex = -q.c1 / (2.0 * q.c2);
    if (vertex > lower && vertex < upper && std::abs(q(vertex)) < out.min_abs) {
      out.min_abs = std::abs(q(vertex));
      out.argmin = vertex;
    }
  }
  for (double r : out.roots) {
    if (std::abs(q(r)) < out.min_abs) {
      out.min_abs = std::abs(q(r));
      out.argmin = r;
    }
  }
  return out;
}

std::string serialize(const PolynomialMetamodel& p) {
  p.validate();
  text::KeyValueDocument doc;
  doc.set("format", std::string("surromap-poly 1"));
  doc.set("n_variables", static_cast<double>(p.variables.size()));
  std::string names;
  std::vector<double> lower, upper;
  for (const auto& v : p.variables) {
    names += (names.empty() ? "" : " ") + v.name;
    lower.push_back(v.lower);
    upper.push_back(v.upper);
  }
  doc.set("variables", names);
  doc.set("lower", lower);
  doc.set("upper", upper);
  doc.set("n_terms", static_cast<double>(p.terms.size()));
  for (std::size_t j = 0; j < p.terms.size(); ++j) {
    std::string line;
    for (unsigned e : p.terms[j].exponents) line += std::to_string(e) + " ";
    doc.set("term." + std::to_string(j), line + text::format_double(p.terms[j].coefficient));
  }
  doc.set("fit_error", p.fit_error);
  return doc.str();
}

PolynomialMetamodel parse_metamodel(std::string_view text) {
  const auto doc = text::KeyValueDocument::parse(text);
  if (!doc.has("format") || doc.get("format") != "surromap-poly 1") throw IoError("not a surromap-poly document");
  const std::size_t nv = doc.get_count("n_variables");
  const auto names = doc.get_words("variables");
  const auto lower = doc.get_doubles("lower");
  const auto upper = doc.get_doubles("upper");
  if (names.size() != nv || lower.size() != nv || upper.size() != nv) {
    throw IoError("variable name/bound count does not match n_variables");
  }
  PolynomialMetamodel p;
  for (std::size_t i = 0; i < nv; ++i) p.variables.push_back({names[i], lower[i], upper[i]});
  const std::size_t nt = doc.get_count("n_terms");
  for (std::size_t j = 0; j < nt; ++j) {
    const auto values = doc.get_doubles("term." + std::to_string(j));
    if (values.size() != nv + 1) throw IoError("term." + std::to_string(j) + " has wrong length");
    Term t;
    for (std::size_t i = 0; i < nv; ++i) {
      if (values[i] < 0.0 || values[i] != std::floor(values[i])) throw IoError("exponent is not a count");
      t.exponents.push_back(static_cast<unsigned>(values[i]));
    }
    t.coefficient = values[nv];
    p.terms.push_back(std::move(t));
  }
  p.fit_error = doc.get_double("fit_error");
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid polynomial document: ") + e.what());
  }
  return p;
}

}  // namespace surromap
