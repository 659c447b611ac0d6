#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "linforms/cyclic.hpp"
#include "linforms/linsys.hpp"
#include "linforms/torus.hpp"

namespace linforms {

// Smallest admissible set size ceil(alpha p). A 1e-9 slack absorbs the
// rounding in decimal alphas such as 0.4 * 5.
std::size_t min_set_size(double alpha, std::size_t p);

struct DiscreteCandidate {
  std::size_t p = 0;
  std::vector<char> members;  // members[x] != 0 iff x in A
  // Number of n in Z_p^D with every l_a(n) in A (or the weighted sum for a
  // fractional candidate, then count is unused), over p^D.
  std::uint64_t count = 0;
  std::uint64_t points = 1;
  double objective = 0.0;
  std::string method;  // exhaustive, interval, local-search, fractional
  bool exact = false;  // true iff objective is the exact minimum
  std::vector<double> values;  // fractional candidates only

  std::size_t size() const;
  std::vector<std::int64_t> elements() const;
};

constexpr std::uint64_t kDefaultSubsetBudget = 10'000'000;

// Exact minimum of the indicator objective over |A| >= ceil(alpha p).
// Requires p <= 64 and C(p, k) within `budget`.
DiscreteCandidate m_discrete_exhaustive(const LinearFormSystem& system,
                                        std::size_t p, double alpha,
                                        std::uint64_t budget = kDefaultSubsetBudget);

struct SearchOptions {
  int restarts = 10;
  int steps = 1000;  // swaps per local search
  std::uint64_t seed = 1;
};

// Upper bound: best of the two interval seeds and `restarts` random sets, each
// improved by best single swaps.
DiscreteCandidate m_discrete_search(const LinearFormSystem& system,
                                    std::size_t p, double alpha,
                                    const SearchOptions& opts);

// Exact minimum over f: Z_p -> {0, 1/q, ..., 1} with mean >= alpha.
DiscreteCandidate m_discrete_fractional(const LinearFormSystem& system,
                                        std::size_t p, double alpha, int levels,
                                        std::uint64_t budget = 200'000);

struct AnnealOptions {
  int temperatures = 40;
  int proposals = 200;
  double sigma = 0.2;
  std::uint64_t crn_samples = 20'000;  // fixed sample set during the search
  std::uint64_t samples = 100'000;     // fresh samples for the final estimate
  std::uint64_t seed = 1;
};

struct TorusCandidate {
  GridFunction f;
  double mean = 0.0;
  double objective = 0.0;
  double std_error = 0.0;
  bool exact = false;  // constant candidates have exact objective alpha^t
  std::string method;  // constant or anneal
};

// Upper bound on the torus minimum by simulated annealing on a q^m grid.
TorusCandidate m_torus_search(const LinearFormSystem& system,
                              const FilteredTorusSpec& spec, double alpha,
                              std::size_t q, const AnnealOptions& opts);

// Euclidean projection of values in [0,1] onto {mean >= alpha}.
void project_mean(std::vector<double>& values, double alpha);

struct ConvergenceRow {
  std::string group;  // Z_<p> or torus_<d1>_<d2>...
  double alpha = 0.0;
  std::string system;
  std::string method;
  double estimate = 0.0;
  double std_error = 0.0;
  bool exact = false;
  std::uint64_t seed = 0;
  double seconds = 0.0;

  bool operator==(const ConvergenceRow&) const = default;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;

  void append(ConvergenceRow row) { rows.push_back(std::move(row)); }
  // Equality of every column except wall time.
  bool same_results(const ConvergenceTable& other) const;
};

inline constexpr const char* kConvergenceHeader =
    "group,alpha,system,method,estimate,stderr,exact,seed,seconds";

void write_csv(std::ostream& out, const ConvergenceTable& table);
ConvergenceTable read_csv(std::istream& in);

struct ConvergenceOptions {
  std::uint64_t subset_budget = kDefaultSubsetBudget;
  int fractional_levels = 2;  // 0 disables the fractional rows
  std::uint64_t fractional_budget = 200'000;
  SearchOptions search;
  AnnealOptions anneal;
  std::size_t grid = 32;
};

// One row per prime (exhaustive when feasible, local search otherwise), a
// fractional row where feasible, and one torus row.
ConvergenceTable convergence_experiment(const LinearFormSystem& system,
                                        double alpha,
                                        const std::vector<std::size_t>& primes,
                                        const FilteredTorusSpec& spec,
                                        const ConvergenceOptions& opts);

namespace serial {

// Gosper enumeration in one loop.
DiscreteCandidate m_discrete_exhaustive(const LinearFormSystem& system,
                                        std::size_t p, double alpha,
                                        std::uint64_t budget = kDefaultSubsetBudget);

}  // namespace serial

}  // namespace linforms
