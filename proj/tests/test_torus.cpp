#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "linforms/error.hpp"
#include "linforms/torus.hpp"

using namespace linforms;

namespace {

// (1 + cos 2 pi x_1) / 2 on T^m.
TrigPolynomial raised_cosine(std::size_t m) {
  std::vector<std::int64_t> z(m, 0), e = z, me = z;
  e[0] = 1;
  me[0] = -1;
  return {m, {{z, 0.5}, {e, 0.25}, {me, 0.25}}};
}

GridFunction grid_of(std::size_t q, auto&& fn) {
  GridFunction g = GridFunction::constant(1, q, 0.0);
  for (std::size_t k = 0; k < q; ++k)
    g.values[k] = fn(static_cast<double>(k) / static_cast<double>(q));
  return g;
}

}  // namespace

TEST_CASE("torus spec parsing") {
  CHECK(parse_torus_spec("1,2").degrees == std::vector<int>{1, 2});
  CHECK(parse_torus_spec("3").to_string() == "3");
  for (const char* bad : {"", "0", "1,,2", "a", "1,-1"})
    CHECK_THROWS_AS(parse_torus_spec(bad), Error);
}

TEST_CASE("model dimensions for the 4-AP system") {
  const auto ap4 = make_ap_system(4);
  CHECK(build_model(FilteredTorusSpec::make({1}), ap4).dimension() == 2);
  CHECK(build_model(FilteredTorusSpec::make({2}), ap4).dimension() == 3);
  CHECK(build_model(FilteredTorusSpec::make({1, 2}), ap4).dimension() == 5);
  CHECK(build_model(FilteredTorusSpec::make({3}), ap4).dimension() == 4);
}

TEST_CASE("samples lie on the subtorus") {
  const auto model = build_model(FilteredTorusSpec::make({1, 2}), make_ap_system(4));
  const auto pts = sample_haar(model, 11, 500);
  const std::size_t t = model.forms(), m = model.coords();
  REQUIRE(pts.size() == 500 * t * m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto comp = orthogonal_complement(model.blocks()[j]);
    for (const auto& w : comp.basis_int64()) {
      for (std::size_t s = 0; s < 500; ++s) {
        double acc = 0;
        for (std::size_t a = 0; a < t; ++a)
          acc += static_cast<double>(w[a]) * pts[s * t * m + a * m + j];
        CHECK(circle_dist(acc) < 1e-9);
      }
    }
  }
  for (double x : pts) CHECK((x >= 0.0 && x < 1.0));
}

TEST_CASE("character enumeration") {
  CHECK(character_count(2, 1, 2) == 25);
  CHECK(character_count(3, 2, 1) == 729);
  std::set<std::vector<std::int64_t>> seen;
  bool zero = false;
  for (std::uint64_t i = 0; i < 25; ++i) {
    const auto chi = character_from_index(2, 1, 2, i);
    seen.insert(chi.freq);
    zero = zero || chi == TupleCharacter::zero(2, 1);
    for (auto f : chi.freq) CHECK(std::abs(f) <= 2);
  }
  CHECK(seen.size() == 25);
  CHECK(zero);
}

TEST_CASE("character triviality on the 3-AP degree-1 model") {
  const auto model = build_model(FilteredTorusSpec::make({1}), make_ap_system(3));
  TupleCharacter chi{3, 1, {1, -2, 1}};
  CHECK(character_trivial_on_model(chi, model));
  chi.freq = {1, -1, 0};
  CHECK_FALSE(character_trivial_on_model(chi, model));
  const auto full = build_model(FilteredTorusSpec::make({2}), make_ap_system(3));
  CHECK_FALSE(character_trivial_on_model(TupleCharacter{3, 1, {1, -2, 1}}, full));
}

TEST_CASE("exact averages of the raised cosine") {
  const auto f1 = raised_cosine(1);
  const auto ap3 = build_model(FilteredTorusSpec::make({1}), make_ap_system(3));
  CHECK(exact_trig_average(f1, ap3).real() == doctest::Approx(0.125).epsilon(1e-14));
  const auto ap4 = build_model(FilteredTorusSpec::make({1}), make_ap_system(4));
  CHECK(exact_trig_average(f1, ap4).real() == doctest::Approx(9.0 / 128).epsilon(1e-14));
  const auto ap4x2 =
      build_model(FilteredTorusSpec::make({1, 2}), make_ap_system(4));
  const Complex v = exact_trig_average(raised_cosine(2), ap4x2);
  CHECK(v.real() == doctest::Approx(9.0 / 128).epsilon(1e-14));
  CHECK(std::abs(v.imag()) < 1e-15);
}

TEST_CASE("exact average of a pure character is the dichotomy") {
  const auto model = build_model(FilteredTorusSpec::make({1}), make_ap_system(3));
  TrigPolynomial e1{1, {{{1}, 1.0}}};
  // e(x) e(x+y) e(x+2y) is a nontrivial character.
  CHECK(std::abs(exact_trig_average(e1, model)) < 1e-15);
  // With the middle factor conjugated, the exponent vector is (1,-1,1).
  const auto pat = parse_pattern("+,-,+", 3);
  CHECK(std::abs(exact_trig_average(e1, model, pat)) < 1e-15);
}

TEST_CASE("term budget") {
  const auto model = build_model(FilteredTorusSpec::make({1}), make_ap_system(5));
  try {
    exact_trig_average(raised_cosine(1), model, {}, 10);
    FAIL("expected budget error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Budget);
  }
}

TEST_CASE("Monte Carlo agrees with the exact value") {
  const auto model = build_model(FilteredTorusSpec::make({1, 2}), make_ap_system(4));
  const auto f = raised_cosine(2);
  const auto mc = mc_average([&](std::span<const double> x) { return f(x); }, model,
                             {}, 200'000, 5);
  CHECK(mc.samples == 200'000);
  CHECK(std::abs(mc.estimate.real() - 9.0 / 128) <= 4 * mc.std_error);
}

TEST_CASE("character means follow the dichotomy") {
  const auto model = build_model(FilteredTorusSpec::make({1}), make_ap_system(3));
  const std::uint64_t n = 20'000;
  const auto means = mc_character_means(model, 1, n, 3);
  REQUIRE(means.size() == character_count(3, 1, 1));
  for (std::uint64_t i = 0; i < means.size(); ++i) {
    const auto chi = character_from_index(3, 1, 1, i);
    const double target = character_trivial_on_model(chi, model) ? 1.0 : 0.0;
    CHECK(std::abs(means[i] - target) <= 4.0 / std::sqrt(double(n)));
  }
}

TEST_CASE("Fejer truncation of a half-interval indicator") {
  const auto g = grid_of(64, [](double x) { return x < 0.5 ? 1.0 : 0.0; });
  const auto ft = fourier_truncate(g, 8);
  const auto* c0 = ft.poly.find({0});
  REQUIRE(c0 != nullptr);
  CHECK(c0->coeff.real() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(ft.sup_error == doctest::Approx(0.43056).epsilon(1e-4));
}

TEST_CASE("Fejer truncation of a single character") {
  const auto g = grid_of(64, [](double x) { return expi(x); });
  const auto ft = fourier_truncate(g, 4);
  REQUIRE(ft.poly.terms.size() == 1);
  CHECK(ft.poly.terms[0].freq == std::vector<std::int64_t>{1});
  CHECK(std::abs(ft.poly.terms[0].coeff - Complex(0.8)) < 1e-12);
  CHECK(ft.sup_error == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("grid cells") {
  const GridFunction g = GridFunction::constant(2, 4, 1.0);
  CHECK(g.cells() == 16);
  const double x[2] = {0.3, 0.99};
  CHECK(g.cell_index(x) == 1 * 4 + 3);
  CHECK(g.mean() == Complex(1.0));
}

TEST_CASE("grid and trig round-trips") {
  GridFunction g = GridFunction::constant(2, 3, 0.0);
  for (std::size_t i = 0; i < g.cells(); ++i) g.values[i] = 0.125 * double(i);
  std::stringstream ss;
  write_grid(ss, g);
  const auto g2 = read_grid(ss);
  CHECK(g2.m == 2);
  CHECK(g2.q == 3);
  CHECK(g2.values == g.values);

  const auto f = raised_cosine(2);
  std::stringstream ts;
  write_trig(ts, f);
  const auto f2 = read_trig(ts);
  REQUIRE(f2.terms.size() == f.terms.size());
  for (std::size_t i = 0; i < f.terms.size(); ++i) {
    CHECK(f2.terms[i].freq == f.terms[i].freq);
    CHECK(f2.terms[i].coeff == f.terms[i].coeff);
  }
  std::istringstream bad("1 4\n0.1 0.2");
  CHECK_THROWS_AS(read_grid(bad), Error);
}
