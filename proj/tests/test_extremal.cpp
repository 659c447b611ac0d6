#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "linforms/error.hpp"
#include "linforms/extremal.hpp"

using namespace linforms;

namespace {

// Minimum of the 3-AP count over all subsets of size >= k, by brute force.
double brute_min_ap3(std::size_t p, std::size_t k) {
  double best = 2.0;
  for (std::uint64_t A = 0; A < (std::uint64_t{1} << p); ++A) {
    if (static_cast<std::size_t>(__builtin_popcountll(A)) < k) continue;
    std::uint64_t c = 0;
    for (std::size_t x = 0; x < p; ++x)
      for (std::size_t d = 0; d < p; ++d)
        c += ((A >> x) & 1) && ((A >> ((x + d) % p)) & 1) && ((A >> ((x + 2 * d) % p)) & 1);
    best = std::min(best, double(c) / double(p * p));
  }
  return best;
}

}  // namespace

TEST_CASE("minimum set size") {
  CHECK(min_set_size(0.4, 5) == 2);
  CHECK(min_set_size(0.4, 11) == 5);
  CHECK(min_set_size(0.0, 7) == 0);
  CHECK(min_set_size(1.0, 7) == 7);
  CHECK(min_set_size(0.5, 7) == 4);
}

TEST_CASE("exhaustive minima for 3-AP") {
  const auto ap3 = make_ap_system(3);
  const auto c5 = m_discrete_exhaustive(ap3, 5, 0.4);
  CHECK(c5.objective == 2.0 / 25);
  CHECK(c5.count == 2);
  CHECK(c5.points == 25);
  CHECK(c5.exact);
  CHECK(c5.method == "exhaustive");
  CHECK(c5.size() == 2);
  const auto c11 = m_discrete_exhaustive(ap3, 11, 0.4);
  CHECK(c11.objective == 9.0 / 121);
  for (std::size_t p : {5, 7, 11, 13})
    for (double alpha : {0.3, 0.5})
      CHECK(m_discrete_exhaustive(ap3, p, alpha).objective ==
            doctest::Approx(brute_min_ap3(p, min_set_size(alpha, p))).epsilon(1e-15));
}

TEST_CASE("exhaustive extremes") {
  const auto ap3 = make_ap_system(3);
  CHECK(m_discrete_exhaustive(ap3, 7, 0.0).objective == 0.0);
  CHECK(m_discrete_exhaustive(ap3, 7, 1.0).objective == 1.0);
}

TEST_CASE("exhaustive guards") {
  CHECK_THROWS_AS(m_discrete_exhaustive(make_ap_system(3), 67, 0.4), Error);
  try {
    m_discrete_exhaustive(make_ap_system(3), 41, 0.4, 1000);
    FAIL("expected budget error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Budget);
  }
  CHECK_THROWS_AS(m_discrete_exhaustive(make_ap_system(3), 5, 1.5), Error);
}

TEST_CASE("serial exhaustive agrees") {
  for (const auto& sys : {make_ap_system(3), make_schur_system(), make_ap_system(4)}) {
    const auto a = m_discrete_exhaustive(sys, 13, 0.4);
    const auto b = serial::m_discrete_exhaustive(sys, 13, 0.4);
    CHECK(a.objective == b.objective);
    CHECK(a.members == b.members);
  }
}

TEST_CASE("local search is an upper bound that finds small optima") {
  const auto ap3 = make_ap_system(3);
  SearchOptions opts;
  opts.restarts = 10;
  const auto s5 = m_discrete_search(ap3, 5, 0.4, opts);
  CHECK(s5.objective == 2.0 / 25);
  CHECK_FALSE(s5.exact);
  for (std::size_t p : {7, 11, 13}) {
    const auto s = m_discrete_search(ap3, p, 0.4, opts);
    const auto e = m_discrete_exhaustive(ap3, p, 0.4);
    CHECK(s.objective >= e.objective);
    CHECK(s.size() >= min_set_size(0.4, p));
    // The reported objective is the count of the returned set.
    CHECK(s.objective == double(s.count) / double(s.points));
  }
  const auto a = m_discrete_search(ap3, 41, 0.4, opts);
  const auto b = m_discrete_search(ap3, 41, 0.4, opts);
  CHECK(a.members == b.members);
}

TEST_CASE("search at the density extremes is exact") {
  SearchOptions opts;
  const auto lo = m_discrete_search(make_ap_system(3), 11, 0.0, opts);
  CHECK(lo.objective == 0.0);
  CHECK(lo.exact);
  const auto hi = m_discrete_search(make_ap_system(3), 11, 1.0, opts);
  CHECK(hi.objective == 1.0);
  CHECK(hi.exact);
}

TEST_CASE("fractional minimum lies below the indicator minimum") {
  const auto ap3 = make_ap_system(3);
  const auto f = m_discrete_fractional(ap3, 5, 0.4, 2);
  CHECK(f.exact);
  CHECK(f.method == "fractional");
  CHECK(f.objective <= 2.0 / 25 + 1e-15);
  double mean = 0;
  for (double v : f.values) mean += v;
  CHECK(mean / 5 >= 0.4 - 1e-12);
  // levels = 1 is the indicator problem.
  CHECK(m_discrete_fractional(ap3, 5, 0.4, 1).objective == doctest::Approx(2.0 / 25));
  CHECK_THROWS_AS(m_discrete_fractional(ap3, 41, 0.4, 3, 1000), Error);
}

TEST_CASE("projection onto the mean constraint") {
  std::vector<double> v{0.0, 0.2, 1.0, 0.5};
  project_mean(v, 0.6);
  double s = 0;
  for (double x : v) {
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
    s += x;
  }
  CHECK(s / 4 >= 0.6);
  CHECK(s / 4 == doctest::Approx(0.6).epsilon(1e-9));
  std::vector<double> already{0.9, 0.9};
  project_mean(already, 0.5);
  CHECK(already == std::vector<double>{0.9, 0.9});
}

TEST_CASE("torus search at the density extremes") {
  AnnealOptions opts;
  opts.temperatures = 5;
  opts.proposals = 20;
  opts.crn_samples = 2000;
  opts.samples = 5000;
  const auto spec = FilteredTorusSpec::make({1});
  const auto zero = m_torus_search(make_ap_system(3), spec, 0.0, 16, opts);
  CHECK(zero.objective == 0.0);
  CHECK(zero.exact);
  const auto one = m_torus_search(make_ap_system(3), spec, 1.0, 16, opts);
  CHECK(one.objective == 1.0);
  CHECK(one.exact);
}

TEST_CASE("torus search at one half stays below the constant bound") {
  AnnealOptions opts;
  opts.crn_samples = 5000;
  opts.samples = 20000;
  const auto c = m_torus_search(make_ap_system(3), FilteredTorusSpec::make({1}), 0.5, 16, opts);
  CHECK(c.objective <= 0.125 + 2 * c.std_error);
  CHECK(c.mean >= 0.5 - 1e-9);
  for (const auto& v : c.f.values) {
    CHECK(v.real() >= 0.0);
    CHECK(v.real() <= 1.0);
  }
}

TEST_CASE("convergence table CSV round-trip") {
  ConvergenceTable t;
  t.append({"Z_5", 0.4, "ap:3", "exhaustive", 0.08, 0.0, true, 0, 0.001});
  t.append({"torus_1", 0.4, "ap:3", "anneal", 0.1 / 3, 1e-17, false,
            18446744073709551615ULL, 12.5});
  std::stringstream ss;
  write_csv(ss, t);
  CHECK(ss.str().rfind(std::string(kConvergenceHeader) + "\n", 0) == 0);
  const auto back = read_csv(ss);
  CHECK(back.rows == t.rows);
  std::istringstream bad("group,alpha\nZ_5,0.4\n");
  CHECK_THROWS_AS(read_csv(bad), Error);
  std::istringstream short_row(std::string(kConvergenceHeader) + "\nZ_5,0.4,ap:3\n");
  CHECK_THROWS_AS(read_csv(short_row), Error);
}

TEST_CASE("system labels with commas survive the CSV") {
  ConvergenceTable t;
  t.append({"Z_5", 0.4, "@a,b.sys", "exhaustive", 0.08, 0.0, true, 0, 0.0});
  std::stringstream ss;
  write_csv(ss, t);
  const auto back = read_csv(ss);
  REQUIRE(back.rows.size() == 1);
  CHECK(back.rows[0].system == "@a;b.sys");
}

TEST_CASE("convergence experiment is reproducible") {
  ConvergenceOptions opts;
  opts.anneal.temperatures = 5;
  opts.anneal.proposals = 20;
  opts.anneal.crn_samples = 2000;
  opts.anneal.samples = 5000;
  opts.search.seed = 17;
  const auto spec = FilteredTorusSpec::make({1});
  const auto a = convergence_experiment(make_ap_system(3), 0.4, {5, 11}, spec, opts);
  const auto b = convergence_experiment(make_ap_system(3), 0.4, {5, 11}, spec, opts);
  CHECK(a.same_results(b));
  REQUIRE(a.rows.size() == 5);
  CHECK(a.rows[0].group == "Z_5");
  CHECK(a.rows[0].method == "exhaustive");
  CHECK(a.rows.back().group == "torus_1");
  CHECK_THROWS_AS(convergence_experiment(make_ap_system(3), 0.4, {9}, spec, opts), Error);
}
