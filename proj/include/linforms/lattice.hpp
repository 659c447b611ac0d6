#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "linforms/linsys.hpp"
#include "linforms/numeric.hpp"

namespace linforms {

// A subgroup of Z^t held by its Hermite normal form. Basis vectors are rows
// in upper echelon form: pivot columns strictly increase, each pivot is
// positive, and the entries above a pivot lie in [0, pivot). The form is
// unique per lattice, so two lattices are equal iff their bases are equal.
class IntegerLattice {
 public:
  explicit IntegerLattice(std::size_t ambient_dim) : dim_(ambient_dim) {}

  std::size_t ambient_dim() const { return dim_; }
  std::size_t rank() const { return basis_.size(); }
  const std::vector<IntVector>& basis() const { return basis_; }
  const std::vector<std::size_t>& pivots() const { return pivots_; }

  // Exact membership by back-substitution against the echelon basis.
  bool contains(const IntVector& v) const;
  bool contains(const std::vector<std::int64_t>& v) const;

  // Basis as 64-bit rows; throws Numeric if an entry does not fit.
  std::vector<std::vector<std::int64_t>> basis_int64() const;

  bool operator==(const IntegerLattice& o) const {
    return dim_ == o.dim_ && basis_ == o.basis_;
  }

 private:
  friend IntegerLattice lattice_from_generators(std::vector<IntVector>,
                                                std::size_t);
  std::size_t dim_;
  std::vector<IntVector> basis_;
  std::vector<std::size_t> pivots_;
};

IntVector to_int_vector(const std::vector<std::int64_t>& v);

// Componentwise C(v(a), k), with C(x, k) = x(x-1)...(x-k+1)/k! for negative x.
IntVector vector_binomial(const IntVector& v, unsigned k);

// Generators of Lambda^[i]: the products prod_j C(v_j, k_j) over the columns
// v_j of the system, for multi-indices with 1 <= sum k_j <= i, enumerated in
// lexicographic order of (k_1, ..., k_D). Zero products are dropped.
std::vector<IntVector> leibman_generators(const LinearFormSystem& system,
                                          unsigned i);

// Canonical basis of the integer span of `gens`. No generators gives the zero
// lattice.
IntegerLattice lattice_from_generators(std::vector<IntVector> gens,
                                       std::size_t ambient_dim);

// Lambda^[i] as a lattice in Z^t.
IntegerLattice leibman_lattice(const LinearFormSystem& system, unsigned i);

// {w in Z^t : w . b = 0 for all b in the lattice}, via an exact integer
// kernel. Rank is t - rank(lat).
IntegerLattice orthogonal_complement(const IntegerLattice& lat);

IntegerLattice full_lattice(std::size_t dim);

BigInt dot(const IntVector& a, const IntVector& b);

// Text form: "r t" header then r rows of t integers.
void write_lattice(std::ostream& out, const IntegerLattice& lat);
IntegerLattice read_lattice(std::istream& in);

}  // namespace linforms
