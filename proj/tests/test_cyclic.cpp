#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "linforms/cyclic.hpp"
#include "linforms/error.hpp"
#include "linforms/rng.hpp"

using namespace linforms;

namespace {

CyclicFunction random_function(std::size_t N, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::vector<Complex> v(N);
  for (auto& z : v) z = Complex(rng.uniform() * 2 - 1, rng.uniform() * 2 - 1);
  return CyclicFunction::make(v);
}

// Direct count of 3-term progressions x, x+d, x+2d inside A, over N^2.
double ap3_density(const std::vector<std::int64_t>& A, std::int64_t N) {
  std::vector<char> in(N, 0);
  for (auto a : A) in[((a % N) + N) % N] = 1;
  std::int64_t c = 0;
  for (std::int64_t x = 0; x < N; ++x)
    for (std::int64_t d = 0; d < N; ++d)
      c += in[x] && in[(x + d) % N] && in[(x + 2 * d) % N];
  return double(c) / double(N * N);
}

}  // namespace

TEST_CASE("primality") {
  CHECK(is_prime(2));
  CHECK(is_prime(13));
  CHECK(is_prime(101));
  CHECK(is_prime(2305843009213693951ULL));
  CHECK_FALSE(is_prime(1));
  CHECK_FALSE(is_prime(91));
  CHECK_FALSE(is_prime(3215031751ULL));
}

TEST_CASE("quadratic phase Gowers norms at 13") {
  const auto f = quadratic_phase(13);
  CHECK(std::abs(gowers_norm_pow(f, 2) - 1.0 / 13) < 1e-12);
  CHECK(std::abs(gowers_norm_pow(f, 3) - 1.0) < 1e-12);
  CHECK_THROWS_AS(gowers_norm_pow(f, 4), Error);
  CHECK_THROWS_AS(gowers_norm_pow(f, 1), Error);
}

TEST_CASE("Gauss sum magnitude") {
  const auto f = quadratic_phase(7);
  const Complex mean = sol_discrete(f, make_trivial_system());
  CHECK(std::abs(mean) == doctest::Approx(0.37796447300922725).epsilon(1e-14));
}

TEST_CASE("Gowers norm of a constant") {
  const auto f = CyclicFunction::constant(9, Complex(0.5, 0.0));
  CHECK(gowers_norm_pow(f, 2) == doctest::Approx(1.0 / 16));
  CHECK(gowers_norm_pow(f, 3) == doctest::Approx(1.0 / 256));
}

TEST_CASE("Gowers norm equals the alternating cube average") {
  for (std::size_t N : {8, 13}) {
    const auto f = random_function(N, N);
    const auto c2 = sol_discrete(f, make_cube_system(2),
                                 ConjugationPattern::alternating(4));
    const auto c3 = sol_discrete(f, make_cube_system(3),
                                 ConjugationPattern::alternating(8));
    CHECK(std::abs(gowers_norm_pow(f, 2) - c2.real()) < 1e-9);
    CHECK(std::abs(gowers_norm_pow(f, 3) - c3.real()) < 1e-9);
    CHECK(std::abs(c2.imag()) < 1e-9);
  }
}

TEST_CASE("sumfree interval") {
  const auto f7 = sumfree_interval(7);
  CHECK(f7.values[3] == Complex(1.0));
  CHECK(f7.values[4] == Complex(1.0));
  CHECK(f7.values[2] == Complex(0.0));
  CHECK(f7.values[5] == Complex(0.0));
  const auto f = sumfree_interval(101);
  int members = 0;
  for (auto v : f.values) members += v == Complex(1.0);
  CHECK(members == 34);
  CHECK(sol_discrete(f, make_schur_system()) == Complex(0.0));
  CHECK(sol_discrete(f7, make_schur_system()) == Complex(0.0));
  CHECK(sol_discrete(f, make_trivial_system()).real() ==
        doctest::Approx(34.0 / 101).epsilon(1e-14));
  CHECK_THROWS_AS(sumfree_interval(9), Error);
  CHECK_THROWS_AS(sumfree_interval(3), Error);
}

TEST_CASE("3-AP count agrees with a direct loop") {
  const std::vector<std::int64_t> A{0, 1, 3, 4, 9};
  for (std::int64_t N : {10, 11, 12}) {
    const auto f = CyclicFunction::indicator(N, A);
    const Complex v = sol_discrete(f, make_ap_system(3));
    CHECK(v.real() == doctest::Approx(ap3_density(A, N)).epsilon(1e-14));
  }
}

TEST_CASE("serial references agree") {
  const auto f = random_function(13, 99);
  for (const auto& sys : {make_ap_system(4), make_cube_system(3), make_schur_system()}) {
    const auto pat = ConjugationPattern::alternating(sys.forms());
    CHECK(std::abs(sol_discrete(f, sys, pat) - serial::sol_discrete(f, sys, pat)) < 1e-14);
  }
  CHECK(gowers_norm_pow(f, 3) == doctest::Approx(serial::gowers_norm_pow(f, 3)).epsilon(1e-13));
  CHECK(gowers_norm_pow(f, 2) == doctest::Approx(serial::gowers_norm_pow(f, 2)).epsilon(1e-13));
}

TEST_CASE("evaluation budget") {
  const auto f = CyclicFunction::constant(50, 1.0);
  try {
    sol_discrete(f, make_cube_system(3), {}, 1000);
    FAIL("expected budget error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Budget);
  }
}

TEST_CASE("function specs and text round-trip") {
  CHECK(parse_cyclic_function("const:0.5", 4).values ==
        std::vector<Complex>(4, Complex(0.5)));
  const auto ind = parse_cyclic_function("indicator:1,-1", 5);
  CHECK(ind.values[1] == Complex(1.0));
  CHECK(ind.values[4] == Complex(1.0));
  CHECK_THROWS_AS(parse_cyclic_function("const:x", 4), Error);
  CHECK_THROWS_AS(parse_cyclic_function("const:1e999", 4), Error);
  CHECK_THROWS_AS(parse_cyclic_function("wobble", 4), Error);

  const auto f = random_function(6, 4);
  std::stringstream ss;
  write_cyclic(ss, f);
  CHECK(read_cyclic(ss).values == f.values);
  std::istringstream real_only("3\n1\n0.5\n-1\n");
  CHECK(read_cyclic(real_only).values ==
        std::vector<Complex>{Complex(1.0), Complex(0.5), Complex(-1.0)});
  std::istringstream bad("3\n1\n");
  CHECK_THROWS_AS(read_cyclic(bad), Error);
}

TEST_CASE("boundedness flag") {
  CHECK(CyclicFunction::make({Complex(1.0), Complex(0.0, -1.0)}).bounded);
  CHECK_FALSE(CyclicFunction::make({Complex(2.0)}).bounded);
  CHECK_THROWS_AS(CyclicFunction::make({}), Error);
}
