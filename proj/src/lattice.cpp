#include "linforms/lattice.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "linforms/error.hpp"

namespace linforms {

namespace {

bool is_zero(const IntVector& v) {
  return std::all_of(v.begin(), v.end(), [](const BigInt& x) { return x == 0; });
}

void axpy(IntVector& y, const BigInt& q, const IntVector& x) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] -= q * x[k];
}

// In-place row Hermite normal form; returns the pivot columns. Rows past the
// rank are removed.
std::vector<std::size_t> hermite_rows(std::vector<IntVector>& rows,
                                      std::size_t cols) {
  std::erase_if(rows, is_zero);
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows.size(); ++c) {
    // Euclid on column c among rows r.. until a single nonzero entry is left.
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t i = r; i < rows.size(); ++i) {
        if (rows[i][c] == 0) continue;
        if (best == rows.size() ||
            mpz_cmpabs(rows[i][c].get_mpz_t(), rows[best][c].get_mpz_t()) < 0)
          best = i;
      }
      if (best == rows.size()) break;
      std::swap(rows[r], rows[best]);
      bool done = true;
      for (std::size_t i = r + 1; i < rows.size(); ++i) {
        if (rows[i][c] == 0) continue;
        BigInt q;
        mpz_fdiv_q(q.get_mpz_t(), rows[i][c].get_mpz_t(), rows[r][c].get_mpz_t());
        axpy(rows[i], q, rows[r]);
        if (rows[i][c] != 0) done = false;
      }
      if (done) break;
    }
    if (rows[r][c] == 0) continue;
    if (rows[r][c] < 0)
      for (auto& x : rows[r]) x = -x;
    for (std::size_t j = 0; j < r; ++j) {
      BigInt q;
      mpz_fdiv_q(q.get_mpz_t(), rows[j][c].get_mpz_t(), rows[r][c].get_mpz_t());
      if (q != 0) axpy(rows[j], q, rows[r]);
    }
    pivots.push_back(c);
    ++r;
  }
  rows.resize(r);
  return pivots;
}

}  // namespace

IntVector to_int_vector(const std::vector<std::int64_t>& v) {
  IntVector out;
  out.reserve(v.size());
  for (auto x : v) out.emplace_back(static_cast<long>(x));
  return out;
}

BigInt dot(const IntVector& a, const IntVector& b) {
  require(a.size() == b.size(), ErrorKind::Dimension, "dot: length mismatch");
  BigInt s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

bool IntegerLattice::contains(const IntVector& v) const {
  require(v.size() == dim_, ErrorKind::Dimension,
          "vector length " + std::to_string(v.size()) + " != ambient dim " +
              std::to_string(dim_));
  IntVector w = v;
  for (std::size_t i = 0; i < basis_.size(); ++i) {
    const std::size_t c = pivots_[i];
    if (w[c] == 0) continue;
    if (!mpz_divisible_p(w[c].get_mpz_t(), basis_[i][c].get_mpz_t()))
      return false;
    BigInt q;
    mpz_divexact(q.get_mpz_t(), w[c].get_mpz_t(), basis_[i][c].get_mpz_t());
    axpy(w, q, basis_[i]);
  }
  return is_zero(w);
}

bool IntegerLattice::contains(const std::vector<std::int64_t>& v) const {
  return contains(to_int_vector(v));
}

std::vector<std::vector<std::int64_t>> IntegerLattice::basis_int64() const {
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& row : basis_) {
    std::vector<std::int64_t> r;
    for (const auto& x : row) r.push_back(to_int64(x));
    out.push_back(std::move(r));
  }
  return out;
}

IntVector vector_binomial(const IntVector& v, unsigned k) {
  IntVector out(v.size());
  for (std::size_t a = 0; a < v.size(); ++a)
    mpz_bin_ui(out[a].get_mpz_t(), v[a].get_mpz_t(), k);
  return out;
}

std::vector<IntVector> leibman_generators(const LinearFormSystem& system,
                                          unsigned i) {
  require(i >= 1, ErrorKind::InvalidParameter, "Leibman degree must be >= 1");
  const std::size_t D = system.variables();
  const std::size_t t = system.forms();

  // binoms[j][k] = C(v_j, k) for k = 0..i
  std::vector<std::vector<IntVector>> binoms(D);
  for (std::size_t j = 0; j < D; ++j) {
    const IntVector col = to_int_vector(system.column(j));
    for (unsigned k = 0; k <= i; ++k) binoms[j].push_back(vector_binomial(col, k));
  }

  std::vector<IntVector> gens;
  std::vector<unsigned> idx(D, 0);
  while (true) {
    unsigned total = 0;
    for (auto k : idx) total += k;
    if (total >= 1 && total <= i) {
      IntVector prod(t, BigInt(1));
      for (std::size_t j = 0; j < D; ++j)
        for (std::size_t a = 0; a < t; ++a) prod[a] *= binoms[j][idx[j]][a];
      if (!is_zero(prod)) gens.push_back(std::move(prod));
    }
    // Lexicographic odometer over {0..i}^D, last index fastest.
    std::size_t pos = D;
    while (pos > 0) {
      --pos;
      if (idx[pos] < i) {
        ++idx[pos];
        break;
      }
      idx[pos] = 0;
      if (pos == 0) return gens;
    }
  }
}

IntegerLattice lattice_from_generators(std::vector<IntVector> gens,
                                       std::size_t ambient_dim) {
  for (const auto& g : gens)
    require(g.size() == ambient_dim, ErrorKind::Dimension,
            "generator length " + std::to_string(g.size()) +
                " != ambient dim " + std::to_string(ambient_dim));
  IntegerLattice lat(ambient_dim);
  lat.pivots_ = hermite_rows(gens, ambient_dim);
  lat.basis_ = std::move(gens);
  return lat;
}

IntegerLattice leibman_lattice(const LinearFormSystem& system, unsigned i) {
  return lattice_from_generators(leibman_generators(system, i), system.forms());
}

IntegerLattice full_lattice(std::size_t dim) {
  std::vector<IntVector> gens;
  for (std::size_t a = 0; a < dim; ++a) {
    IntVector e(dim, BigInt(0));
    e[a] = 1;
    gens.push_back(std::move(e));
  }
  return lattice_from_generators(std::move(gens), dim);
}

IntegerLattice orthogonal_complement(const IntegerLattice& lat) {
  const std::size_t t = lat.ambient_dim();
  const std::size_t r = lat.rank();
  // Row a of the augmented matrix is [ B^T row a | e_a ]. Unimodular row
  // operations that clear the left block leave a basis of the kernel on the
  // right.
  std::vector<IntVector> aug;
  for (std::size_t a = 0; a < t; ++a) {
    IntVector row(r + t, BigInt(0));
    for (std::size_t i = 0; i < r; ++i) row[i] = lat.basis()[i][a];
    row[r + a] = 1;
    aug.push_back(std::move(row));
  }
  const auto piv = hermite_rows(aug, r + t);
  std::vector<IntVector> kernel;
  for (std::size_t i = 0; i < aug.size(); ++i) {
    if (piv[i] < r) continue;
    kernel.emplace_back(aug[i].begin() + static_cast<std::ptrdiff_t>(r),
                        aug[i].end());
  }
  return lattice_from_generators(std::move(kernel), t);
}

void write_lattice(std::ostream& out, const IntegerLattice& lat) {
  out << lat.rank() << ' ' << lat.ambient_dim() << '\n';
  for (const auto& row : lat.basis()) {
    for (std::size_t k = 0; k < row.size(); ++k)
      out << (k ? " " : "") << row[k].get_str();
    out << '\n';
  }
}

IntegerLattice read_lattice(std::istream& in) {
  long long r = -1, t = -1;
  if (!(in >> r >> t) || r < 0 || t < 1)
    fail(ErrorKind::Parse, "lattice header must be 'r t'");
  std::vector<IntVector> gens(static_cast<std::size_t>(r),
                              IntVector(static_cast<std::size_t>(t)));
  for (auto& row : gens)
    for (auto& x : row) {
      std::string tok;
      if (!(in >> tok) || x.set_str(tok, 10) != 0)
        fail(ErrorKind::Parse, "malformed lattice body");
    }
  return lattice_from_generators(std::move(gens), static_cast<std::size_t>(t));
}

}  // namespace linforms
