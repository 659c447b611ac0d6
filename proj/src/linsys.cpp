#include "linforms/linsys.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "linforms/error.hpp"
#include "linforms/numeric.hpp"

namespace linforms {

namespace {

void check_shape(std::size_t t, std::size_t D, std::size_t n) {
  require(t >= 1 && D >= 1, ErrorKind::Dimension,
          "a system needs t >= 1 forms and D >= 1 variables");
  require(n == t * D, ErrorKind::Dimension,
          "coefficient count " + std::to_string(n) + " != t*D = " +
              std::to_string(t * D));
}

// Rank over Q by fraction-free (Bareiss) elimination. The matrix is consumed.
std::size_t exact_rank(std::vector<std::vector<BigInt>> m) {
  const std::size_t rows = m.size();
  if (rows == 0) return 0;
  const std::size_t cols = m[0].size();
  BigInt prev = 1;
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t piv = r;
    while (piv < rows && m[piv][c] == 0) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[r]);
    for (std::size_t i = r + 1; i < rows; ++i) {
      for (std::size_t j = c + 1; j < cols; ++j) {
        BigInt v = m[r][c] * m[i][j] - m[i][c] * m[r][j];
        mpz_divexact(v.get_mpz_t(), v.get_mpz_t(), prev.get_mpz_t());
        m[i][j] = v;
      }
      m[i][c] = 0;
    }
    prev = m[r][c];
    ++r;
  }
  return r;
}

void exponents_rec(std::size_t D, int remaining, std::vector<std::int64_t>& cur,
                   std::vector<std::vector<std::int64_t>>& out) {
  const std::size_t j = cur.size();
  if (j + 1 == D) {
    cur.push_back(remaining);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    cur.push_back(e);
    exponents_rec(D, remaining - e, cur, out);
    cur.pop_back();
  }
}

}  // namespace

LinearFormSystem LinearFormSystem::relaxed(std::size_t t, std::size_t D,
                                           std::vector<std::int64_t> coeffs,
                                           std::string label) {
  check_shape(t, D, coeffs.size());
  return LinearFormSystem(t, D, std::move(coeffs), std::move(label));
}

LinearFormSystem LinearFormSystem::make(std::size_t t, std::size_t D,
                                        std::vector<std::int64_t> coeffs,
                                        std::string label) {
  auto sys = relaxed(t, D, std::move(coeffs), std::move(label));
  require(!sys.has_zero_row(), ErrorKind::Degenerate,
          "system contains a zero form");
  require(!sys.has_repeated_rows(), ErrorKind::Degenerate,
          "system contains repeated forms");
  return sys;
}

std::vector<std::int64_t> LinearFormSystem::column(std::size_t j) const {
  std::vector<std::int64_t> col(t_);
  for (std::size_t a = 0; a < t_; ++a) col[a] = coeff(a, j);
  return col;
}

std::int64_t LinearFormSystem::evaluate(std::size_t a,
                                        std::span<const std::int64_t> n) const {
  std::int64_t s = 0;
  for (std::size_t j = 0; j < D_; ++j) s += coeff(a, j) * n[j];
  return s;
}

bool LinearFormSystem::has_zero_row() const {
  for (std::size_t a = 0; a < t_; ++a) {
    auto r = row(a);
    if (std::all_of(r.begin(), r.end(), [](auto c) { return c == 0; }))
      return true;
  }
  return false;
}

bool LinearFormSystem::has_repeated_rows() const {
  std::set<std::vector<std::int64_t>> seen;
  for (std::size_t a = 0; a < t_; ++a) {
    auto r = row(a);
    if (!seen.emplace(r.begin(), r.end()).second) return true;
  }
  return false;
}

LinearFormSystem make_ap_system(int k) {
  require(k >= 3, ErrorKind::InvalidParameter,
          "progression length must be >= 3, got " + std::to_string(k));
  std::vector<std::int64_t> c;
  for (int i = 0; i < k; ++i) {
    c.push_back(1);
    c.push_back(i);
  }
  return LinearFormSystem::make(k, 2, std::move(c),
                                "ap:" + std::to_string(k));
}

LinearFormSystem make_cube_system(int d) {
  require(d == 2 || d == 3, ErrorKind::InvalidParameter,
          "cube systems are supported for d in {2,3}, got " +
              std::to_string(d));
  const std::size_t t = std::size_t{1} << d;
  std::vector<std::int64_t> c;
  for (std::size_t v = 0; v < t; ++v) {
    c.push_back(1);
    // Most significant bit first, so row order is lexicographic in v.
    for (int b = d - 1; b >= 0; --b) c.push_back((v >> b) & 1u);
  }
  return LinearFormSystem::make(t, d + 1, std::move(c),
                                "cube:" + std::to_string(d));
}

LinearFormSystem make_trivial_system() {
  return LinearFormSystem::make(1, 1, {1}, "trivial");
}

LinearFormSystem make_schur_system() {
  return LinearFormSystem::make(3, 2, {1, 0, 0, 1, 1, 1}, "schur");
}

std::int64_t size(const LinearFormSystem& system) {
  std::int64_t L = std::max<std::int64_t>(system.forms(), system.variables());
  for (auto c : system.coefficients()) L = std::max<std::int64_t>(L, std::llabs(c));
  return L;
}

std::vector<std::vector<std::int64_t>> monomial_exponents(std::size_t D, int e) {
  std::vector<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> cur;
  exponents_rec(D, e, cur, out);
  return out;
}

std::optional<int> complexity(const LinearFormSystem& system, int s_max) {
  require(s_max >= 0, ErrorKind::InvalidParameter, "s_max must be >= 0");
  require(!system.has_zero_row(), ErrorKind::Degenerate,
          "zero form: powers can never be independent");
  require(!system.has_repeated_rows(), ErrorKind::Degenerate,
          "repeated form: powers can never be independent");

  const std::size_t t = system.forms();
  const std::size_t D = system.variables();
  for (int s = 0; s <= s_max; ++s) {
    const int e = s + 1;
    const auto monos = monomial_exponents(D, e);
    if (monos.size() < t) continue;
    BigInt efact;
    mpz_fac_ui(efact.get_mpz_t(), e);
    std::vector<std::vector<BigInt>> m(t, std::vector<BigInt>(monos.size()));
    for (std::size_t a = 0; a < t; ++a) {
      for (std::size_t k = 0; k < monos.size(); ++k) {
        // multinomial(e; k_1..k_D) * prod c_j^{k_j}
        BigInt term = efact;
        for (std::size_t j = 0; j < D; ++j) {
          BigInt f;
          mpz_fac_ui(f.get_mpz_t(), monos[k][j]);
          mpz_divexact(term.get_mpz_t(), term.get_mpz_t(), f.get_mpz_t());
          BigInt pw;
          BigInt base = static_cast<long>(system.coeff(a, j));
          mpz_pow_ui(pw.get_mpz_t(), base.get_mpz_t(), monos[k][j]);
          term *= pw;
        }
        m[a][k] = term;
      }
    }
    if (exact_rank(std::move(m)) == t) return s;
  }
  return std::nullopt;
}

LinearFormSystem read_system(std::istream& in, std::string label) {
  long long t = 0, D = 0;
  if (!(in >> t >> D) || t < 1 || D < 1)
    fail(ErrorKind::Parse, "system header must be 't D' with t, D >= 1");
  std::vector<std::int64_t> c(static_cast<std::size_t>(t * D));
  for (auto& x : c)
    if (!(in >> x)) fail(ErrorKind::Parse, "system body truncated or malformed");
  std::string extra;
  if (in >> extra) fail(ErrorKind::Parse, "trailing data after system body");
  return LinearFormSystem::make(t, D, std::move(c), std::move(label));
}

void write_system(std::ostream& out, const LinearFormSystem& system) {
  out << system.forms() << ' ' << system.variables() << '\n';
  for (std::size_t a = 0; a < system.forms(); ++a) {
    auto r = system.row(a);
    for (std::size_t j = 0; j < r.size(); ++j) out << (j ? " " : "") << r[j];
    out << '\n';
  }
}

LinearFormSystem parse_system_spec(const std::string& spec) {
  auto int_after = [&](std::size_t pos) {
    try {
      std::size_t used = 0;
      int v = std::stoi(spec.substr(pos), &used);
      if (pos + used != spec.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, "bad system spec '" + spec + "'");
    }
  };
  if (spec.rfind("ap:", 0) == 0) return make_ap_system(int_after(3));
  if (spec.rfind("cube:", 0) == 0) return make_cube_system(int_after(5));
  if (spec == "trivial") return make_trivial_system();
  if (spec == "schur") return make_schur_system();
  if (!spec.empty() && spec[0] == '@') {
    std::ifstream f(spec.substr(1));
    if (!f) fail(ErrorKind::Parse, "cannot open system file " + spec.substr(1));
    return read_system(f, spec.substr(1));
  }
  fail(ErrorKind::Parse, "unknown system spec '" + spec + "'");
}

}  // namespace linforms
