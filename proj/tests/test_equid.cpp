#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "linforms/equid.hpp"
#include "linforms/error.hpp"
#include "linforms/rng.hpp"

using namespace linforms;

namespace {

// Rows M_1 = 0, M_2 = (1,-1,-1,1) on the U^2 system, stored slot-major.
TupleCharacter u2_obstruction() { return {4, 2, {0, 1, 0, -1, 0, -1, 0, 1}}; }

std::uint64_t index_of(const TupleCharacter& chi, int bound) {
  std::uint64_t idx = 0;
  for (auto f : chi.freq) idx = idx * (2 * bound + 1) + static_cast<std::uint64_t>(f + bound);
  return idx;
}

bool violated(const BalanceReport& r, std::uint64_t idx) {
  return std::binary_search(r.violated.begin(), r.violated.end(), idx);
}

}  // namespace

TEST_CASE("character index helper matches the enumeration order") {
  const auto chi = u2_obstruction();
  CHECK(character_from_index(4, 2, 3, index_of(chi, 3)) == chi);
}

TEST_CASE("min_k thresholds") {
  const TupleCharacter m{1, 2, {-3, 1}};
  CHECK(min_k_threshold(m, make_trivial_system(), 2) == 4);
  const auto u2 = make_cube_system(2);
  CHECK(min_k_threshold(u2_obstruction(), u2, 2) == 1);
  CHECK_FALSE(min_k_threshold(u2_obstruction(), u2, 1).has_value());
  // No positive root at all.
  CHECK(min_k_threshold(TupleCharacter{1, 2, {3, 1}}, make_trivial_system(), 2) == 1);
}

TEST_CASE("min_k rejects characters trivial on the target") {
  try {
    min_k_threshold(TupleCharacter::zero(1, 2), make_trivial_system(), 2);
    FAIL("expected precondition error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Precondition);
  }
}

TEST_CASE("balance report around the threshold") {
  const TupleCharacter m{1, 2, {-3, 1}};
  const auto idx = index_of(m, 3);
  const auto at3 = phi_k_balance_report(PhiKMap::make(3, 2), make_trivial_system(), 2, 3);
  CHECK(violated(at3, idx));
  CHECK(at3.max_discrepancy == 1.0);
  for (std::int64_t k = 4; k <= 24; ++k) {
    const auto r = phi_k_balance_report(PhiKMap::make(k, 2), make_trivial_system(), 2, 3);
    CHECK_FALSE(violated(r, idx));
  }
}

TEST_CASE("balance report counts add up") {
  const auto r = phi_k_balance_report(PhiKMap::make(10, 2), make_ap_system(3), 2, 2);
  CHECK(r.characters == 15625);
  CHECK(r.violated.empty());
  CHECK(r.trivial_on_target + r.vanishing + r.violated.size() == r.characters);
  CHECK(std::is_sorted(r.violated.begin(), r.violated.end()));
  const auto k1 = phi_k_balance_report(PhiKMap::make(1, 2), make_ap_system(3), 2, 1);
  CHECK_FALSE(k1.violated.empty());
}

TEST_CASE("balance report budget") {
  try {
    phi_k_balance_report(PhiKMap::make(2, 3), make_ap_system(4), 2, 5, 2, 1000);
    FAIL("expected budget error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Budget);
  }
}

TEST_CASE("phi_k images stay on the target subtorus") {
  CHECK(phi_k_image_check(PhiKMap::make(1, 1), make_ap_system(3), 1, 1000, 1) == 0.0);
  for (const auto& sys : {make_ap_system(4), make_cube_system(2)}) {
    CHECK(phi_k_image_check(PhiKMap::make(2, 2), sys, 2, 10'000, 3) <= 1e-9);
    CHECK(phi_k_image_check(PhiKMap::make(7, 3), sys, 2, 10'000, 4) <= 1e-9);
  }
}

TEST_CASE("PhiKMap validation") {
  CHECK_THROWS_AS(PhiKMap::make(0, 2), Error);
  CHECK_THROWS_AS(PhiKMap::make(2, 0), Error);
  CHECK_THROWS_AS(PhiKMap::make(1 << 20, 4), Error);
}

TEST_CASE("polynomial arithmetic") {
  const auto n = RationalPolynomial::variable();
  const auto p = parse_polynomial("(2*n^2 + n)/7");
  CHECK(p == (RationalPolynomial::constant(Rational(2, 7)) * n * n +
              RationalPolynomial::constant(Rational(1, 7)) * n));
  CHECK(p.degree() == 2);
  CHECK(p(Rational(3)) == Rational(3));
  CHECK(p.denominator_lcm() == 7);
  CHECK((p.shifted(Rational(7)) - p) == parse_polynomial("4*n + 15"));
  CHECK(parse_polynomial("n - n") == RationalPolynomial());
  CHECK(parse_polynomial("-(n^3)/2")(Rational(2)) == Rational(-4));
  for (const char* bad : {"", "n +", "(n", "n^", "n^x", "n/0", "m", "n^99999"})
    CHECK_THROWS_AS(parse_polynomial(bad), Error);
}

TEST_CASE("consistency certificates") {
  CHECK(verify_consistency(parse_orbit(7, "3*n/7; (2*n^2 + n)/7")).consistent);
  const auto bad = verify_consistency(parse_orbit(7, "n^2/14"));
  CHECK_FALSE(bad.consistent);
  CHECK_FALSE(bad.detail.empty());
  for (std::int64_t p : {5, 13, 101})
    CHECK(verify_consistency(parse_orbit(p, "n^2/" + std::to_string(p))).consistent);
  CHECK_THROWS_AS(parse_orbit(7, "1 + n/7"), Error);
}

TEST_CASE("consistent orbits are periodic at random points") {
  const auto orbit = parse_orbit(11, "n/11; (3*n^2 + 5*n)/11");
  REQUIRE(verify_consistency(orbit).consistent);
  CounterRng rng(8, 0);
  for (int i = 0; i < 100; ++i) {
    const Rational x(static_cast<long>(rng.below(1'000'000)) - 500'000);
    for (const auto& g : orbit.coords) {
      const Rational diff = g(x + 11) - g(x);
      CHECK(diff.get_den() == 1);
    }
  }
}

TEST_CASE("Weyl sums of simple orbits") {
  const auto orbit = parse_orbit(7, "n/7; n^2/7");
  const auto triv = make_trivial_system();
  CHECK(std::abs(weyl_character_sum(orbit, triv, TupleCharacter{1, 2, {1, 0}})) < 1e-15);
  CHECK(std::abs(weyl_character_sum(orbit, triv, TupleCharacter{1, 2, {0, 1}})) ==
        doctest::Approx(0.37796447300922725).epsilon(1e-13));

  const auto spec = FilteredTorusSpec::make({1, 2});
  const auto rep = weyl_balance_test(orbit, spec, triv, 1);
  CHECK(rep.max_abs == doctest::Approx(0.37796447300922725).epsilon(1e-13));
  CHECK(rep.nontrivial == 8);

  const auto zero = parse_orbit(7, "0*n; 0*n");
  CHECK(weyl_balance_test(zero, spec, triv, 1).max_abs == doctest::Approx(1.0));

  const auto linear = parse_orbit(13, "n/13");
  CHECK(weyl_balance_test(linear, FilteredTorusSpec::make({1}), triv, 5).max_abs == 0.0);
}

TEST_CASE("Weyl sums on 3-AP at p=101 are small") {
  const auto orbit = parse_orbit(101, "n/101; (n^2)/101");
  const auto rep = weyl_balance_test(orbit, FilteredTorusSpec::make({1, 2}),
                                     make_ap_system(3), 2);
  CHECK(rep.max_abs <= 2.0 / std::sqrt(101.0));
  CHECK(rep.truncation_rate > 0.0);
}

TEST_CASE("Weyl sums need a consistent orbit") {
  const auto orbit = parse_orbit(7, "n^2/14");
  CHECK_THROWS_AS(weyl_character_sum(orbit, make_trivial_system(), TupleCharacter{1, 1, {1}}),
                  Error);
}

TEST_CASE("serial references agree") {
  const auto map = PhiKMap::make(5, 2);
  const auto a = phi_k_balance_report(map, make_cube_system(2), 2, 1);
  const auto b = serial::phi_k_balance_report(map, make_cube_system(2), 2, 1);
  CHECK(a.violated == b.violated);
  CHECK(a.vanishing == b.vanishing);
  CHECK(a.trivial_on_target == b.trivial_on_target);

  const auto orbit = parse_orbit(13, "n/13; (n^2)/13");
  const auto spec = FilteredTorusSpec::make({1, 2});
  const auto w = weyl_balance_test(orbit, spec, make_ap_system(3), 1);
  const auto ws = serial::weyl_balance_test(orbit, spec, make_ap_system(3), 1);
  CHECK(w.max_abs == doctest::Approx(ws.max_abs).epsilon(1e-12));
  CHECK(w.nontrivial == ws.nontrivial);
}
