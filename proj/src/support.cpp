#include "linforms/error.hpp"
#include "linforms/numeric.hpp"
#include "linforms/pattern.hpp"

#include <bit>
#include <limits>
#include <sstream>

namespace linforms {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidParameter: return "invalid-parameter";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Degenerate: return "degenerate-system";
    case ErrorKind::Precondition: return "precondition";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Resolution: return "resolution";
    case ErrorKind::Budget: return "budget";
    case ErrorKind::Numeric: return "numeric";
  }
  return "unknown";
}

std::int64_t to_int64(const BigInt& x) {
  if (!mpz_fits_slong_p(x.get_mpz_t()))
    fail(ErrorKind::Numeric, "integer " + x.get_str() + " exceeds 64 bits");
  return x.get_si();
}

ConjugationPattern ConjugationPattern::alternating(std::size_t t) {
  ConjugationPattern p;
  p.signs.resize(t);
  for (std::size_t a = 0; a < t; ++a)
    p.signs[a] = (std::popcount(a) % 2 == 0) ? 1 : -1;
  return p;
}

ConjugationPattern ConjugationPattern::plain(std::size_t t) {
  return {std::vector<int>(t, 1)};
}

ConjugationPattern parse_pattern(const std::string& text, std::size_t t) {
  if (text == "alt") return ConjugationPattern::alternating(t);
  ConjugationPattern p;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "+" || item == "+1" || item == "1")
      p.signs.push_back(1);
    else if (item == "-" || item == "-1")
      p.signs.push_back(-1);
    else
      fail(ErrorKind::Parse, "bad pattern entry '" + item + "'");
  }
  require(p.size() == t, ErrorKind::Dimension,
          "pattern has " + std::to_string(p.size()) + " entries, system has " +
              std::to_string(t) + " forms");
  return p;
}

}  // namespace linforms
