#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "linforms/linsys.hpp"
#include "linforms/numeric.hpp"
#include "linforms/pattern.hpp"

namespace linforms {

// A function Z_N -> C. `bounded` asserts |f| <= 1 everywhere.
struct CyclicFunction {
  std::vector<Complex> values;
  bool bounded = false;

  std::size_t modulus() const { return values.size(); }
  Complex operator()(std::int64_t x) const;

  static CyclicFunction make(std::vector<Complex> values);
  static CyclicFunction constant(std::size_t N, Complex v);
  // Indicator of `members` reduced mod N.
  static CyclicFunction indicator(std::size_t N,
                                 const std::vector<std::int64_t>& members);
};

// "N" then N lines of "re im" or "v".
CyclicFunction read_cyclic(std::istream& in);
void write_cyclic(std::ostream& out, const CyclicFunction& f);

constexpr std::uint64_t kDefaultEvalBudget = 1'000'000'000;

// (1/N^D) sum over n in Z_N^D of prod_a f(l_a(n)), with the slots marked by
// `pattern` conjugated. Work is split into N chunks by the first variable and
// the compensated chunk sums are added in chunk order.
Complex sol_discrete(const CyclicFunction& f, const LinearFormSystem& system,
                     const std::optional<ConjugationPattern>& pattern = {},
                     std::uint64_t budget = kDefaultEvalBudget);

// ||f||_{U^d}^{2^d} for d in {2, 3}, O(N^d).
double gowers_norm_pow(const CyclicFunction& f, int d);

// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime(std::uint64_t n);

// x -> e(x^2 / p)
CyclicFunction quadratic_phase(std::uint64_t p);

// Indicator of the integers strictly between p/3 and 2p/3.
CyclicFunction sumfree_interval(std::uint64_t p);

// "quadphase", "sumfree", "const:<v>", "indicator:3,4" or "@file".
CyclicFunction parse_cyclic_function(const std::string& spec, std::size_t N);

namespace serial {

Complex sol_discrete(const CyclicFunction& f, const LinearFormSystem& system,
                     const std::optional<ConjugationPattern>& pattern = {},
                     std::uint64_t budget = kDefaultEvalBudget);

double gowers_norm_pow(const CyclicFunction& f, int d);

}  // namespace serial

}  // namespace linforms
