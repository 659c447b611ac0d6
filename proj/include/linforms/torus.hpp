#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linforms/lattice.hpp"
#include "linforms/linsys.hpp"
#include "linforms/numeric.hpp"
#include "linforms/pattern.hpp"

namespace linforms {

// T^m where coordinate j carries the maximal degree-d_j filtration; the whole
// torus has the product filtration. X_2 is {1, 2}.
struct FilteredTorusSpec {
  std::vector<int> degrees;

  static FilteredTorusSpec make(std::vector<int> degrees);
  std::size_t dim() const { return degrees.size(); }
  std::string to_string() const;
};

// "1,2" -> {1, 2}
FilteredTorusSpec parse_torus_spec(const std::string& text);

// The Leibman subtorus X^Lambda in (T^m)^t. Coordinate j of every tuple slot
// is driven by the lattice Lambda^[d_j]; a point has coordinate j of slot a
// equal to sum_i theta_i V_j[i][a] mod 1 with V_j the basis of that lattice.
class LeibmanTorusModel {
 public:
  const FilteredTorusSpec& spec() const { return spec_; }
  const LinearFormSystem& system() const { return system_; }
  std::size_t forms() const { return system_.forms(); }
  std::size_t coords() const { return spec_.dim(); }
  // Entries per sampled point: t * m, laid out as x[a * m + j].
  std::size_t point_size() const { return forms() * coords(); }

  const std::vector<IntegerLattice>& blocks() const { return blocks_; }
  const std::vector<std::int64_t>& block_basis(std::size_t j) const {
    return basis_[j];
  }
  std::size_t block_rank(std::size_t j) const { return blocks_[j].rank(); }
  std::size_t dimension() const;

  // Haar point number `index` of the stream `seed`.
  void sample(std::uint64_t seed, std::uint64_t index,
              std::span<double> out) const;

 private:
  friend LeibmanTorusModel build_model(const FilteredTorusSpec&,
                                       const LinearFormSystem&);
  LeibmanTorusModel(FilteredTorusSpec spec, LinearFormSystem system)
      : spec_(std::move(spec)), system_(std::move(system)) {}

  FilteredTorusSpec spec_;
  LinearFormSystem system_;
  std::vector<IntegerLattice> blocks_;
  // Row-major rank_j x t copies of each block basis, for exact character
  // tests and fast sampling.
  std::vector<std::vector<std::int64_t>> basis_;
  std::vector<std::vector<double>> basis_f_;
};

// Rejects systems with a zero form (its coordinate projection would not be
// onto T^m).
LeibmanTorusModel build_model(const FilteredTorusSpec& spec,
                              const LinearFormSystem& system);

// count points, each of point_size() doubles, concatenated.
std::vector<double> sample_haar(const LeibmanTorusModel& model,
                                std::uint64_t seed, std::size_t count);

// A character of (T^m)^t: x -> e(sum_{a,j} M[a][j] x_a(j)).
struct TupleCharacter {
  std::size_t t = 0;
  std::size_t m = 0;
  std::vector<std::int64_t> freq;  // row-major t x m

  static TupleCharacter zero(std::size_t t, std::size_t m) {
    return {t, m, std::vector<std::int64_t>(t * m, 0)};
  }
  std::int64_t at(std::size_t a, std::size_t j) const { return freq[a * m + j]; }
  Complex operator()(std::span<const double> x) const;
  bool operator==(const TupleCharacter&) const = default;
};

// Character number `index` among all t x m frequency matrices with entries in
// [-bound, bound], entry order row-major with the last entry varying fastest.
TupleCharacter character_from_index(std::size_t t, std::size_t m, int bound,
                                    std::uint64_t index);
std::uint64_t character_count(std::size_t t, std::size_t m, int bound);

// True iff chi is identically 1 on the model, i.e. sum_a M[a][j] v(a) = 0 for
// every coordinate j and every basis vector v of block j. Then the Haar
// integral of chi is 1; otherwise it is 0.
bool character_trivial_on_model(const TupleCharacter& chi,
                                const LeibmanTorusModel& model);

struct TrigTerm {
  std::vector<std::int64_t> freq;
  Complex coeff;
};

// f(x) = sum_n c_n e(n . x) on T^m.
struct TrigPolynomial {
  std::size_t m = 0;
  std::vector<TrigTerm> terms;

  Complex operator()(std::span<const double> x) const;
  const TrigTerm* find(const std::vector<std::int64_t>& freq) const;
};

// Lines "n_1 ... n_m  re im"; m is taken from the first line.
TrigPolynomial read_trig(std::istream& in);
void write_trig(std::ostream& out, const TrigPolynomial& f);

// Step function on T^m: value on the half-open cell containing x is
// values[floor(q x_1), ..., floor(q x_m)], row-major with x_1 slowest.
struct GridFunction {
  std::size_t m = 1;
  std::size_t q = 1;
  std::vector<Complex> values;

  static GridFunction constant(std::size_t m, std::size_t q, Complex v);
  std::size_t cells() const { return values.size(); }
  std::size_t cell_index(std::span<const double> x) const;
  Complex operator()(std::span<const double> x) const {
    return values[cell_index(x)];
  }
  Complex mean() const;
};

// Header "m q" then q^m values; a value is "v" or "re im" consistently.
GridFunction read_grid(std::istream& in);
void write_grid(std::ostream& out, const GridFunction& g);

constexpr std::uint64_t kDefaultTermBudget = 10'000'000;

// Exact Haar average of f(y_1)...f(y_t) over the model: expands the t-fold
// product and keeps the frequency tuples whose character is trivial on the
// model. Frequencies are handled exactly, coefficients in floating point.
// `pattern` conjugates the marked slots. Throws Budget if terms^t > budget.
Complex exact_trig_average(const TrigPolynomial& f,
                           const LeibmanTorusModel& model,
                           const std::optional<ConjugationPattern>& pattern = {},
                           std::uint64_t budget = kDefaultTermBudget);

using TorusFunction = std::function<Complex(std::span<const double>)>;

struct McEstimate {
  Complex estimate;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

// Monte-Carlo mean of prod_a f(x_a) (conjugated per pattern) over Haar
// samples. Samples are processed in fixed chunks whose partial sums are
// combined in chunk order, so the result does not depend on thread count.
McEstimate mc_average(const TorusFunction& f, const LeibmanTorusModel& model,
                      const std::optional<ConjugationPattern>& pattern,
                      std::uint64_t samples, std::uint64_t seed);

// Sample means of every character with entries in [-bound, bound], indexed as
// in character_from_index.
std::vector<Complex> mc_character_means(const LeibmanTorusModel& model,
                                        int bound, std::uint64_t samples,
                                        std::uint64_t seed);

struct FourierTruncation {
  TrigPolynomial poly;
  double sup_error = 0.0;  // max over grid points x = k/q
};

// Fejer-weighted discrete Fourier truncation to frequencies in [-N, N]^m.
// Requires 1 <= N <= q/2 (Resolution error otherwise).
FourierTruncation fourier_truncate(const GridFunction& f, int N);

namespace serial {

// Single loop over all samples; the reference for the chunked version.
McEstimate mc_average(const TorusFunction& f, const LeibmanTorusModel& model,
                      const std::optional<ConjugationPattern>& pattern,
                      std::uint64_t samples, std::uint64_t seed);

std::vector<Complex> mc_character_means(const LeibmanTorusModel& model,
                                        int bound, std::uint64_t samples,
                                        std::uint64_t seed);

}  // namespace serial

}  // namespace linforms
