#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "linforms/cyclic.hpp"
#include "linforms/linsys.hpp"
#include "linforms/numeric.hpp"
#include "linforms/torus.hpp"

namespace linforms {

// x -> (x, kx, k^2 x, ..., k^{d-1} x), T -> T^d
struct PhiKMap {
  std::int64_t k = 1;
  int d = 1;

  static PhiKMap make(std::int64_t k, int d);
};

// Target of the phi_k experiments: T^d with every coordinate at `degree`.
FilteredTorusSpec uniform_spec(int d, int degree);

// Least k0 such that for every k >= k0 the pullback of chi along phi_k has
// zero Haar integral on the domain model (spec (domain_degree,)). nullopt
// means the pullback is trivial on the domain for every k. chi is a t x d
// character of the target (spec uniform_spec(d, target_degree)) and must be
// nontrivial there (Precondition error otherwise).
std::optional<std::int64_t> min_k_threshold(const TupleCharacter& chi,
                                            const LinearFormSystem& system,
                                            int domain_degree,
                                            int target_degree = 2);

// Max over `samples` domain points of the circle distance of w . phi_k(x)
// from 0, over every w in the orthogonal complement of each target block.
// Target spec is uniform_spec(d, domain_degree).
double phi_k_image_check(const PhiKMap& map, const LinearFormSystem& system,
                         int domain_degree, std::uint64_t samples,
                         std::uint64_t seed);

struct BalanceReport {
  std::uint64_t characters = 0;
  std::uint64_t trivial_on_target = 0;
  std::uint64_t vanishing = 0;
  // Indices (as in character_from_index with shape t x d) of characters that
  // are nontrivial on the target but whose pullback is trivial on the domain.
  std::vector<std::uint64_t> violated;
  // Largest |target integral - domain integral|; 1 if anything is violated.
  double max_discrepancy = 0.0;
};

constexpr std::uint64_t kDefaultCharacterBudget = 100'000'000;

BalanceReport phi_k_balance_report(const PhiKMap& map,
                                   const LinearFormSystem& system,
                                   int domain_degree, int freq_bound,
                                   int target_degree = 2,
                                   std::uint64_t budget = kDefaultCharacterBudget);

// Dense polynomial in n with exact rational coefficients, coeffs[e] of n^e.
class RationalPolynomial {
 public:
  RationalPolynomial() = default;
  explicit RationalPolynomial(std::vector<Rational> coeffs);
  static RationalPolynomial constant(const Rational& c);
  static RationalPolynomial variable();

  const std::vector<Rational>& coeffs() const { return coeffs_; }
  // -1 for the zero polynomial.
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  Rational operator()(const Rational& n) const;
  // p(n + shift)
  RationalPolynomial shifted(const Rational& shift) const;
  BigInt denominator_lcm() const;
  std::string to_string() const;

  friend RationalPolynomial operator+(const RationalPolynomial&,
                                      const RationalPolynomial&);
  friend RationalPolynomial operator-(const RationalPolynomial&,
                                      const RationalPolynomial&);
  friend RationalPolynomial operator*(const RationalPolynomial&,
                                      const RationalPolynomial&);
  bool operator==(const RationalPolynomial&) const = default;

 private:
  void trim();
  std::vector<Rational> coeffs_;
};

// Arithmetic in the variable n: + - * / ^, parentheses, rationals, and
// implicit products such as "2n" or "3(n+1)". Division only by constants.
RationalPolynomial parse_polynomial(const std::string& text);

// n -> (g_1(n), ..., g_m(n)) mod 1, with g_j(0) = 0.
struct PolynomialOrbit {
  std::int64_t p = 1;
  std::vector<RationalPolynomial> coords;

  static PolynomialOrbit make(std::int64_t p,
                              std::vector<RationalPolynomial> coords);
  std::size_t dim() const { return coords.size(); }
};

// "n/101; (n^2)/101"
PolynomialOrbit parse_orbit(std::int64_t p, const std::string& coeffs);

struct ConsistencyCertificate {
  bool consistent = false;
  // Either the difference polynomials g_j(n+p) - g_j(n), or the first
  // non-integral coefficient found.
  std::string detail;
};

ConsistencyCertificate verify_consistency(const PolynomialOrbit& orbit);

// E_{n in Z_p^D} chi(g(l_1(n)), ..., g(l_t(n))) for a t x m character.
// Phases are reduced exactly modulo the common denominator Q of g; a sum whose
// phase histogram is invariant under a shift by Q/l (l prime) is returned as
// exactly 0.
Complex weyl_character_sum(const PolynomialOrbit& orbit,
                           const LinearFormSystem& system,
                           const TupleCharacter& chi,
                           std::uint64_t budget = kDefaultEvalBudget);

struct WeylReport {
  std::uint64_t characters = 0;
  std::uint64_t nontrivial = 0;
  double max_abs = 0.0;
  std::optional<TupleCharacter> argmax;
  // Fejer truncation rate at this frequency bound, (1 + log N) / N with the
  // Lipschitz constant left out.
  double truncation_rate = 0.0;
};

// Max |weyl_character_sum| over the characters with entries in
// [-freq_bound, freq_bound] that are nontrivial on build_model(spec, system).
WeylReport weyl_balance_test(const PolynomialOrbit& orbit,
                             const FilteredTorusSpec& spec,
                             const LinearFormSystem& system, int freq_bound,
                             std::uint64_t budget = kDefaultEvalBudget);

namespace serial {

// Enumerates characters one by one with the exact model tests.
BalanceReport phi_k_balance_report(const PhiKMap& map,
                                   const LinearFormSystem& system,
                                   int domain_degree, int freq_bound,
                                   int target_degree = 2);

// Plain floating-point evaluation point by point.
Complex weyl_character_sum(const PolynomialOrbit& orbit,
                           const LinearFormSystem& system,
                           const TupleCharacter& chi);

WeylReport weyl_balance_test(const PolynomialOrbit& orbit,
                             const FilteredTorusSpec& spec,
                             const LinearFormSystem& system, int freq_bound);

}  // namespace serial

}  // namespace linforms
