#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace linforms {

// A system of t integer linear forms in D variables, stored as a t x D
// row-major matrix: row a holds the coefficients of l_a.
class LinearFormSystem {
 public:
  // Validated constructor: t, D >= 1, rows nonzero and pairwise distinct.
  static LinearFormSystem make(std::size_t t, std::size_t D,
                               std::vector<std::int64_t> coeffs,
                               std::string label = {});
  // Only checks the shape. Zero or repeated rows are allowed for
  // experimentation; classification and model building reject them.
  static LinearFormSystem relaxed(std::size_t t, std::size_t D,
                                  std::vector<std::int64_t> coeffs,
                                  std::string label = {});

  std::size_t forms() const { return t_; }
  std::size_t variables() const { return D_; }
  std::int64_t coeff(std::size_t a, std::size_t j) const {
    return coeffs_[a * D_ + j];
  }
  std::span<const std::int64_t> row(std::size_t a) const {
    return {coeffs_.data() + a * D_, D_};
  }
  std::vector<std::int64_t> column(std::size_t j) const;
  const std::vector<std::int64_t>& coefficients() const { return coeffs_; }
  const std::string& label() const { return label_; }

  // l_a(n) for an integer point n in Z^D.
  std::int64_t evaluate(std::size_t a, std::span<const std::int64_t> n) const;

  bool has_zero_row() const;
  bool has_repeated_rows() const;

  bool operator==(const LinearFormSystem& o) const {
    return t_ == o.t_ && D_ == o.D_ && coeffs_ == o.coeffs_;
  }

 private:
  LinearFormSystem(std::size_t t, std::size_t D, std::vector<std::int64_t> c,
                   std::string label)
      : t_(t), D_(D), coeffs_(std::move(c)), label_(std::move(label)) {}

  std::size_t t_;
  std::size_t D_;
  std::vector<std::int64_t> coeffs_;
  std::string label_;
};

// k-term progressions (n1, n1+n2, ..., n1+(k-1)n2); k >= 3.
LinearFormSystem make_ap_system(int k);

// Rows (1, v) for v in {0,1}^d in lexicographic order of v; d in {2, 3}.
// For d = 2 the order is n1, n1+n3, n1+n2, n1+n2+n3.
LinearFormSystem make_cube_system(int d);

// The single form n -> n.
LinearFormSystem make_trivial_system();

// (n1, n2, n1+n2): Schur triples.
LinearFormSystem make_schur_system();

// Least L such that the system has size at most L: max(t, D, max |coeff|).
std::int64_t size(const LinearFormSystem& system);

// Least s <= s_max such that the powers l_a^{s+1} are linearly independent
// over Q, decided by exact fraction-free elimination on their multinomial
// expansions. nullopt means no s <= s_max qualifies. Throws Degenerate for
// zero or repeated forms.
std::optional<int> complexity(const LinearFormSystem& system, int s_max = 4);

// Exponent vectors of all degree-e monomials in D variables, in
// lexicographic order of the exponent vector.
std::vector<std::vector<std::int64_t>> monomial_exponents(std::size_t D, int e);

// "ap:k", "cube:d", "trivial", "schur", "@path" (text file).
LinearFormSystem parse_system_spec(const std::string& spec);

// Text form: first line "t D", then t lines of D integers.
LinearFormSystem read_system(std::istream& in, std::string label = {});
void write_system(std::ostream& out, const LinearFormSystem& system);

}  // namespace linforms
