#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "surromap/efast.hpp"

namespace surromap {

using Exponents = std::vector<unsigned>;

/// Monomial exponent vectors of a polynomial model class.
struct TermSet {
  std::size_t n_variables = 0;
  std::vector<Exponents> terms;

  void validate() const;
  unsigned max_degree() const;

  // Capacity term sets over (t_odb, t_edb, t_ewb), in a1..a8 order.
  static TermSet hvac_total();      // 7 terms, pure quadratics
  static TermSet hvac_sensible();   // adds t_ewb * t_odb
  static TermSet hvac_absorbed();   // drops t_edb^2, adds t_ewb * t_odb and t_ewb^2 * t_edb

  /// `eq5`, `eq6`, `eq7` or `custom:<monomials>` where monomials are
  /// `;`-separated products such as `1;t_ewb;t_ewb^2;t_ewb*t_odb`.
  static TermSet parse(std::string_view spec, std::span<const std::string> variable_names);

  std::string describe(std::span<const std::string> variable_names) const;
};

struct Term {
  Exponents exponents;
  double coefficient = 0.0;
};

/// Polynomial in raw variable units: sum_k a_k prod_i x_i^e_ki.
struct PolynomialMetamodel {
  std::vector<Factor> variables;
  std::vector<Term> terms;
  double fit_error = 0.0;  // RMS against the source over a random validation sample
  std::vector<std::string> warnings;

  std::vector<std::string> variable_names() const;
  void validate() const;
};

/// Pure-sinusoid design rejected because two needed combination frequencies
/// land in the same spectral bin.
class DesignCollision : public std::invalid_argument {
 public:
  DesignCollision(std::vector<int> first, std::vector<int> second, const std::string& what)
      : std::invalid_argument(what), first_(std::move(first)), second_(std::move(second)) {}

  // Colliding combinations as signed harmonic multipliers per variable.
  const std::vector<int>& first() const { return first_; }
  const std::vector<int>& second() const { return second_; }

 private:
  std::vector<int> first_;
  std::vector<int> second_;
};

double evaluate_polynomial(const PolynomialMetamodel& p, std::span<const double> x, bool* extrapolated = nullptr);

/// x_i at curve parameter s: center + halfwidth * sin(frequency * s).
double sinusoid_point(const Factor& factor, unsigned frequency, double s);

/// Row-major samples x k matrix; row t uses s_t = 2 pi t / samples.
std::vector<double> sinusoid_design(const FactorSpace& space, std::span<const unsigned> frequencies,
                                    std::size_t samples);

/// Throws DesignCollision when the design cannot separate every combination
/// frequency that the term set's monomials produce.
void check_design(const TermSet& terms, std::span<const unsigned> frequencies, std::size_t samples);

/// Smallest integer frequencies (by largest member) for which every
/// combination of total order <= guard_degree has a distinct frequency.
std::vector<unsigned> choose_frequencies(std::size_t n_variables, unsigned guard_degree);

/// Smallest odd sample count that resolves combinations of order
/// guard_degree without aliasing.
std::size_t design_samples(std::span<const unsigned> frequencies, unsigned guard_degree);

struct ExtractOptions {
  std::vector<unsigned> frequencies;  // empty: choose_frequencies()
  std::size_t samples = 0;            // 0: design_samples()
  unsigned guard_degree = 0;          // 0: term set degree + 2
  std::size_t validation_points = 1000;
  std::uint64_t seed = 1;
};

PolynomialMetamodel extract_polynomial(const ScalarFunction& f, const FactorSpace& space, const TermSet& terms,
                                       const ExtractOptions& options = {});

/// c0 + c1 t + c2 t^2.
struct Quadratic {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;

  double operator()(double t) const { return c0 + t * (c1 + t * c2); }
  Quadratic operator-(const Quadratic& o) const { return {c0 - o.c0, c1 - o.c1, c2 - o.c2}; }
};

/// Collapses `p` onto variable `free_index` with the others fixed at `point`.
/// Throws when the free variable enters with degree above 2.
Quadratic restrict_to_variable(const PolynomialMetamodel& p, std::size_t free_index, std::span<const double> point);

struct RootSearch {
  std::vector<double> roots;  // ascending, inside the bracket
  double min_abs = 0.0;       // min |F| over the bracket
  double argmin = 0.0;
};

RootSearch solve_univariate(const Quadratic& q, double lower, double upper);

std::string serialize(const PolynomialMetamodel& p);
PolynomialMetamodel parse_metamodel(std::string_view text);

}  // namespace surromap
