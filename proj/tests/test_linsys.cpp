#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "linforms/error.hpp"
#include "linforms/linsys.hpp"

using namespace linforms;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Numeric;
}

}  // namespace

TEST_CASE("named systems have the expected coefficients") {
  const auto ap = make_ap_system(4);
  CHECK(ap.forms() == 4);
  CHECK(ap.variables() == 2);
  CHECK(ap.column(1) == std::vector<std::int64_t>{0, 1, 2, 3});

  const auto cube = make_cube_system(2);
  CHECK(cube.forms() == 4);
  CHECK(cube.variables() == 3);
  CHECK(cube.coefficients() ==
        std::vector<std::int64_t>{1, 0, 0, 1, 0, 1, 1, 1, 0, 1, 1, 1});

  const auto schur = make_schur_system();
  const std::vector<std::int64_t> n{5, 7};
  CHECK(schur.evaluate(0, n) == 5);
  CHECK(schur.evaluate(1, n) == 7);
  CHECK(schur.evaluate(2, n) == 12);
}

TEST_CASE("size is the max of t, D and |coefficients|") {
  CHECK(size(make_ap_system(3)) == 3);
  CHECK(size(make_ap_system(5)) == 5);
  CHECK(size(make_cube_system(3)) == 8);
  CHECK(size(LinearFormSystem::make(2, 1, {1, -9})) == 9);
}

TEST_CASE("complexity of the standard systems") {
  CHECK(complexity(make_ap_system(3)) == 1);
  CHECK(complexity(make_ap_system(4)) == 2);
  CHECK(complexity(make_ap_system(5)) == 3);
  CHECK(complexity(make_cube_system(2)) == 1);
  CHECK(complexity(make_cube_system(3)) == 2);
  CHECK(complexity(make_trivial_system()) == 0);
  CHECK(complexity(make_schur_system()) == 1);
  CHECK_FALSE(complexity(make_ap_system(5), 2).has_value());
}

TEST_CASE("two non-proportional forms have complexity zero") {
  CHECK(complexity(LinearFormSystem::make(2, 2, {1, 0, 0, 1})) == 0);
}

TEST_CASE("monomial exponents enumerate all compositions") {
  CHECK(monomial_exponents(2, 2).size() == 3);
  CHECK(monomial_exponents(3, 2).size() == 6);
  for (const auto& e : monomial_exponents(3, 4)) {
    std::int64_t s = 0;
    for (auto x : e) s += x;
    CHECK(s == 4);
  }
}

TEST_CASE("degenerate systems are rejected") {
  CHECK(kind_of([] { LinearFormSystem::make(2, 2, {1, 0, 0, 0}); }) ==
        ErrorKind::Degenerate);
  CHECK(kind_of([] { LinearFormSystem::make(2, 1, {3, 3}); }) ==
        ErrorKind::Degenerate);
  CHECK(kind_of([] { LinearFormSystem::make(2, 2, {1, 0, 0}); }) ==
        ErrorKind::Dimension);
  CHECK(kind_of([] { make_ap_system(2); }) == ErrorKind::InvalidParameter);
  CHECK(kind_of([] { make_cube_system(4); }) == ErrorKind::InvalidParameter);
  CHECK_NOTHROW(LinearFormSystem::relaxed(2, 2, {1, 0, 0, 0}));
}

TEST_CASE("system text round-trip") {
  const auto sys = make_ap_system(5);
  std::stringstream ss;
  write_system(ss, sys);
  CHECK(ss.str().rfind("5 2\n", 0) == 0);
  const auto back = read_system(ss);
  CHECK(back == sys);
}

TEST_CASE("malformed system text is a parse error") {
  for (const char* text : {"", "2", "2 2\n1 0\n0", "2 2\n1 0 0 x", "1 1\n1 9"}) {
    std::istringstream in(text);
    CHECK(kind_of([&] { read_system(in); }) == ErrorKind::Parse);
  }
}

TEST_CASE("system spec parsing") {
  CHECK(parse_system_spec("ap:4") == make_ap_system(4));
  CHECK(parse_system_spec("cube:3") == make_cube_system(3));
  CHECK(parse_system_spec("trivial") == make_trivial_system());
  CHECK(parse_system_spec("schur") == make_schur_system());
  CHECK(kind_of([] { parse_system_spec("ap:x"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_system_spec("hexagon"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { parse_system_spec("@/nonexistent/file"); }) == ErrorKind::Parse);
}
