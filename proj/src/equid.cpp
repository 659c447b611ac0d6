#include "linforms/equid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "linforms/error.hpp"
#include "linforms/lattice.hpp"
#include "linforms/rng.hpp"

namespace linforms {

namespace {

std::uint64_t checked_pow(std::uint64_t base, std::size_t e, std::uint64_t cap,
                          const std::string& what) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < e; ++i) {
    if (r > cap / base)
      fail(ErrorKind::Budget, what + " exceeds budget " + std::to_string(cap));
    r *= base;
  }
  return r;
}

void check_degree(int degree, const char* name) {
  require(degree >= 1, ErrorKind::InvalidParameter,
          std::string(name) + " must be >= 1");
}

// Positive integers k that are roots of every polynomial in `polys`
// (coefficients low to high, none identically zero).
std::vector<BigInt> common_positive_roots(
    const std::vector<std::vector<BigInt>>& polys) {
  const auto& p = polys.front();
  std::size_t low = 0;
  while (p[low] == 0) ++low;
  BigInt a0 = abs(p[low]);
  require(a0 <= BigInt("1000000000000000000"), ErrorKind::Budget,
          "root search: constant coefficient too large");
  auto eval = [](const std::vector<BigInt>& q, const BigInt& k) {
    BigInt s = 0;
    for (std::size_t i = q.size(); i-- > 0;) s = s * k + q[i];
    return s;
  };
  std::vector<BigInt> cand;
  for (BigInt d = 1; d * d <= a0; ++d) {
    if (a0 % d != 0) continue;
    cand.push_back(d);
    if (d * d != a0) cand.push_back(a0 / d);
  }
  std::vector<BigInt> roots;
  for (const auto& k : cand) {
    bool all = true;
    for (const auto& q : polys)
      if (eval(q, k) != 0) {
        all = false;
        break;
      }
    if (all) roots.push_back(k);
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<std::vector<std::int64_t>> basis_rows(const IntegerLattice& lat) {
  return lat.basis_int64();
}

std::int64_t checked_k_power(std::int64_t k, int d) {
  __int128 v = 1;
  for (int i = 1; i < d; ++i) {
    v *= k;
    require(v <= (__int128{1} << 40), ErrorKind::InvalidParameter,
            "k^(d-1) too large");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

PhiKMap PhiKMap::make(std::int64_t k, int d) {
  require(k >= 1, ErrorKind::InvalidParameter, "k must be >= 1");
  require(d >= 1, ErrorKind::InvalidParameter, "d must be >= 1");
  checked_k_power(k, d);
  return PhiKMap{k, d};
}

FilteredTorusSpec uniform_spec(int d, int degree) {
  require(d >= 1, ErrorKind::InvalidParameter, "d must be >= 1");
  return FilteredTorusSpec::make(std::vector<int>(d, degree));
}

std::optional<std::int64_t> min_k_threshold(const TupleCharacter& chi,
                                            const LinearFormSystem& system,
                                            int domain_degree,
                                            int target_degree) {
  check_degree(domain_degree, "domain degree");
  check_degree(target_degree, "target degree");
  const std::size_t t = system.forms();
  require(chi.t == t && chi.m >= 1 && chi.freq.size() == t * chi.m,
          ErrorKind::Dimension, "character must be t x d");
  const int d = static_cast<int>(chi.m);
  const auto target = build_model(uniform_spec(d, target_degree), system);
  require(!character_trivial_on_model(chi, target), ErrorKind::Precondition,
          "character is trivial on the target model");

  // Pullback along phi_k has frequency n(k)_a = sum_i M[a][i] k^i, so its dot
  // product with a domain generator v is a polynomial in k.
  const auto domain = leibman_lattice(system, domain_degree);
  std::vector<std::vector<BigInt>> polys;
  for (const auto& v : domain.basis()) {
    std::vector<BigInt> q(d, BigInt(0));
    for (int i = 0; i < d; ++i)
      for (std::size_t a = 0; a < t; ++a)
        q[i] += BigInt(static_cast<long>(chi.at(a, i))) * v[a];
    if (std::any_of(q.begin(), q.end(), [](const BigInt& c) { return c != 0; }))
      polys.push_back(std::move(q));
  }
  if (polys.empty()) return std::nullopt;
  const auto roots = common_positive_roots(polys);
  if (roots.empty()) return 1;
  return to_int64(roots.back()) + 1;
}

double phi_k_image_check(const PhiKMap& map, const LinearFormSystem& system,
                         int domain_degree, std::uint64_t samples,
                         std::uint64_t seed) {
  check_degree(domain_degree, "domain degree");
  require(samples >= 1, ErrorKind::InvalidParameter, "samples must be >= 1");
  const auto domain =
      build_model(FilteredTorusSpec::make({domain_degree}), system);
  const auto target = build_model(uniform_spec(map.d, domain_degree), system);
  const std::size_t t = system.forms();

  // Complements per target block, all equal here but kept per block so the
  // check follows the target model rather than assuming its shape.
  std::vector<std::vector<std::vector<std::int64_t>>> comps;
  for (const auto& block : target.blocks())
    comps.push_back(basis_rows(orthogonal_complement(block)));

  std::vector<double> kpow(map.d);
  for (int i = 0; i < map.d; ++i)
    kpow[i] = static_cast<double>(checked_k_power(map.k, i + 1));

  double worst = 0.0;
#pragma omp parallel
  {
    std::vector<double> x(domain.point_size()), y(t);
    double local = 0.0;
#pragma omp for schedule(static)
    for (std::int64_t s = 0; s < static_cast<std::int64_t>(samples); ++s) {
      domain.sample(seed, s, x);
      for (int i = 0; i < map.d; ++i) {
        for (std::size_t a = 0; a < t; ++a) y[a] = frac(kpow[i] * x[a]);
        for (const auto& w : comps[i]) {
          double v = 0.0;
          for (std::size_t a = 0; a < t; ++a) v += static_cast<double>(w[a]) * y[a];
          local = std::max(local, circle_dist(v));
        }
      }
    }
#pragma omp critical
    worst = std::max(worst, local);
  }
  return worst;
}

BalanceReport phi_k_balance_report(const PhiKMap& map,
                                   const LinearFormSystem& system,
                                   int domain_degree, int freq_bound,
                                   int target_degree, std::uint64_t budget) {
  check_degree(domain_degree, "domain degree");
  check_degree(target_degree, "target degree");
  require(freq_bound >= 1, ErrorKind::InvalidParameter,
          "freq_bound must be >= 1");
  const std::size_t t = system.forms();
  const std::size_t d = static_cast<std::size_t>(map.d);
  const std::uint64_t base = 2 * static_cast<std::uint64_t>(freq_bound) + 1;
  BalanceReport report;
  report.characters = checked_pow(base, t * d, budget, "character enumeration");

  const auto target_rows = basis_rows(leibman_lattice(system, target_degree));
  const auto domain_rows = basis_rows(leibman_lattice(system, domain_degree));
  const std::size_t r = domain_rows.size();

  // Per column vector c in [-B, B]^t: orthogonality to the target block,
  // dot products with the domain generators, and its share of the character
  // index at each coordinate.
  const std::uint64_t ncols = checked_pow(base, t, budget, "column enumeration");
  std::vector<char> orth(ncols);
  std::vector<std::int64_t> dots(ncols * r);
  std::vector<std::uint64_t> contrib(d * ncols);
  std::vector<std::uint64_t> place(t * d);
  for (std::size_t e = 0; e < t * d; ++e) {
    std::uint64_t v = 1;
    for (std::size_t s = e + 1; s < t * d; ++s) v *= base;
    place[e] = v;
  }
  std::vector<std::int64_t> c(t);
  for (std::uint64_t id = 0; id < ncols; ++id) {
    std::uint64_t rem = id;
    for (std::size_t a = t; a-- > 0;) {
      c[a] = static_cast<std::int64_t>(rem % base) - freq_bound;
      rem /= base;
    }
    bool o = true;
    for (const auto& v : target_rows) {
      std::int64_t s = 0;
      for (std::size_t a = 0; a < t; ++a) s += c[a] * v[a];
      if (s != 0) {
        o = false;
        break;
      }
    }
    orth[id] = o;
    for (std::size_t g = 0; g < r; ++g) {
      std::int64_t s = 0;
      for (std::size_t a = 0; a < t; ++a) s += c[a] * domain_rows[g][a];
      dots[id * r + g] = s;
    }
    for (std::size_t i = 0; i < d; ++i) {
      std::uint64_t idx = 0;
      for (std::size_t a = 0; a < t; ++a)
        idx += static_cast<std::uint64_t>(c[a] + freq_bound) * place[a * d + i];
      contrib[i * ncols + id] = idx;
    }
  }

  std::vector<__int128> kpow(d);
  for (std::size_t i = 0; i < d; ++i)
    kpow[i] = checked_k_power(map.k, static_cast<int>(i) + 1);

  struct Part {
    std::uint64_t trivial = 0, vanishing = 0;
    std::vector<std::uint64_t> violated;
  };
  std::vector<Part> parts(ncols);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t c0 = 0; c0 < static_cast<std::int64_t>(ncols); ++c0) {
    Part& part = parts[c0];
    std::vector<std::uint64_t> col(d, 0);
    col[0] = static_cast<std::uint64_t>(c0);
    while (true) {
      bool trivial = true;
      for (std::size_t i = 0; i < d && trivial; ++i) trivial = orth[col[i]];
      if (trivial) {
        ++part.trivial;
      } else {
        bool vanishes = false;
        for (std::size_t g = 0; g < r && !vanishes; ++g) {
          __int128 s = 0;
          for (std::size_t i = 0; i < d; ++i) s += kpow[i] * dots[col[i] * r + g];
          vanishes = s != 0;
        }
        if (vanishes) {
          ++part.vanishing;
        } else {
          std::uint64_t idx = 0;
          for (std::size_t i = 0; i < d; ++i) idx += contrib[i * ncols + col[i]];
          part.violated.push_back(idx);
        }
      }
      std::size_t pos = d;
      while (pos > 1 && ++col[pos - 1] == ncols) col[--pos] = 0;
      if (pos <= 1) break;
    }
  }
  for (auto& part : parts) {
    report.trivial_on_target += part.trivial;
    report.vanishing += part.vanishing;
    report.violated.insert(report.violated.end(), part.violated.begin(),
                           part.violated.end());
  }
  std::sort(report.violated.begin(), report.violated.end());
  report.max_discrepancy = report.violated.empty() ? 0.0 : 1.0;
  return report;
}

RationalPolynomial::RationalPolynomial(std::vector<Rational> coeffs)
    : coeffs_(std::move(coeffs)) {
  for (auto& c : coeffs_) c.canonicalize();
  trim();
}

RationalPolynomial RationalPolynomial::constant(const Rational& c) {
  return RationalPolynomial({c});
}

RationalPolynomial RationalPolynomial::variable() {
  return RationalPolynomial({Rational(0), Rational(1)});
}

void RationalPolynomial::trim() {
  while (!coeffs_.empty() && coeffs_.back() == 0) coeffs_.pop_back();
}

Rational RationalPolynomial::operator()(const Rational& n) const {
  Rational s = 0;
  for (std::size_t e = coeffs_.size(); e-- > 0;) s = s * n + coeffs_[e];
  return s;
}

RationalPolynomial RationalPolynomial::shifted(const Rational& shift) const {
  // Horner in polynomial arithmetic: p(n + s).
  const RationalPolynomial x({shift, Rational(1)});
  RationalPolynomial out;
  for (std::size_t e = coeffs_.size(); e-- > 0;)
    out = out * x + constant(coeffs_[e]);
  return out;
}

BigInt RationalPolynomial::denominator_lcm() const {
  BigInt l = 1;
  for (const auto& c : coeffs_) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), c.get_den_mpz_t());
  return l;
}

std::string RationalPolynomial::to_string() const {
  if (coeffs_.empty()) return "0";
  std::string s;
  for (std::size_t e = coeffs_.size(); e-- > 0;) {
    if (coeffs_[e] == 0) continue;
    Rational c = coeffs_[e];
    if (s.empty()) {
      if (c < 0) s += "-";
    } else {
      s += c < 0 ? " - " : " + ";
    }
    c = abs(c);
    const bool unit = c == 1 && e > 0;
    if (!unit) s += c.get_str();
    if (e > 0) s += unit ? "n" : "*n";
    if (e > 1) s += "^" + std::to_string(e);
  }
  return s;
}

RationalPolynomial operator+(const RationalPolynomial& a,
                             const RationalPolynomial& b) {
  std::vector<Rational> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0);
  for (std::size_t e = 0; e < a.coeffs_.size(); ++e) c[e] += a.coeffs_[e];
  for (std::size_t e = 0; e < b.coeffs_.size(); ++e) c[e] += b.coeffs_[e];
  return RationalPolynomial(std::move(c));
}

RationalPolynomial operator-(const RationalPolynomial& a,
                             const RationalPolynomial& b) {
  return a + b * RationalPolynomial::constant(-1);
}

RationalPolynomial operator*(const RationalPolynomial& a,
                             const RationalPolynomial& b) {
  if (a.coeffs_.empty() || b.coeffs_.empty()) return {};
  std::vector<Rational> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0);
  for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
    for (std::size_t j = 0; j < b.coeffs_.size(); ++j)
      c[i + j] += a.coeffs_[i] * b.coeffs_[j];
  return RationalPolynomial(std::move(c));
}

namespace {

class PolyParser {
 public:
  explicit PolyParser(const std::string& text) : s_(text) {}

  RationalPolynomial parse() {
    RationalPolynomial p = expr();
    skip();
    if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
    return p;
  }

 private:
  [[noreturn]] void error(const std::string& what) {
    fail(ErrorKind::Parse, "polynomial '" + s_ + "' at offset " +
                               std::to_string(pos_) + ": " + what);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  char peek() {
    skip();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  RationalPolynomial expr() {
    RationalPolynomial p = term();
    while (true) {
      const char c = peek();
      if (c == '+') {
        ++pos_;
        p = p + term();
      } else if (c == '-') {
        ++pos_;
        p = p - term();
      } else {
        return p;
      }
    }
  }

  RationalPolynomial term() {
    RationalPolynomial p = unary();
    while (true) {
      const char c = peek();
      if (c == '*') {
        ++pos_;
        p = p * unary();
      } else if (c == '/') {
        ++pos_;
        const RationalPolynomial q = unary();
        if (q.degree() != 0) error("division by a non-constant or zero");
        p = p * RationalPolynomial::constant(1 / q.coeffs()[0]);
      } else if (c == 'n' || c == '(' || std::isdigit(static_cast<unsigned char>(c))) {
        p = p * unary();
      } else {
        return p;
      }
    }
  }

  RationalPolynomial unary() {
    const char c = peek();
    if (c == '-') {
      ++pos_;
      return RationalPolynomial::constant(-1) * unary();
    }
    if (c == '+') {
      ++pos_;
      return unary();
    }
    return power();
  }

  RationalPolynomial power() {
    RationalPolynomial base = primary();
    if (peek() != '^') return base;
    ++pos_;
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) error("exponent must be a nonnegative integer");
    if (pos_ - start > 3) error("exponent too large");
    const int e = std::stoi(s_.substr(start, pos_ - start));
    if (e > 64) error("exponent too large");
    RationalPolynomial out = RationalPolynomial::constant(1);
    for (int i = 0; i < e; ++i) out = out * base;
    return out;
  }

  RationalPolynomial primary() {
    const char c = peek();
    if (c == 'n') {
      ++pos_;
      return RationalPolynomial::variable();
    }
    if (c == '(') {
      ++pos_;
      RationalPolynomial p = expr();
      if (peek() != ')') error("missing ')'");
      ++pos_;
      return p;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    error(c ? "unexpected '" + std::string(1, c) + "'" : "unexpected end");
  }

  RationalPolynomial number() {
    std::string digits;
    std::size_t scale = 0;
    bool dot = false;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) {
      if (s_[pos_] == '.') {
        if (dot) error("malformed number");
        dot = true;
      } else {
        digits += s_[pos_];
        if (dot) ++scale;
      }
      ++pos_;
    }
    if (digits.empty()) error("malformed number");
    BigInt num(digits, 10), den = 1;
    for (std::size_t i = 0; i < scale; ++i) den *= 10;
    return RationalPolynomial::constant(Rational(num, den));
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace

RationalPolynomial parse_polynomial(const std::string& text) {
  return PolyParser(text).parse();
}

PolynomialOrbit PolynomialOrbit::make(std::int64_t p,
                                      std::vector<RationalPolynomial> coords) {
  require(p >= 1, ErrorKind::InvalidParameter, "orbit modulus must be >= 1");
  require(!coords.empty(), ErrorKind::InvalidParameter,
          "orbit needs at least one coordinate");
  for (std::size_t j = 0; j < coords.size(); ++j)
    require(coords[j](0) == 0, ErrorKind::InvalidParameter,
            "coordinate " + std::to_string(j + 1) + " has g(0) != 0");
  return PolynomialOrbit{p, std::move(coords)};
}

PolynomialOrbit parse_orbit(std::int64_t p, const std::string& coeffs) {
  std::vector<RationalPolynomial> coords;
  std::stringstream ss(coeffs);
  std::string item;
  while (std::getline(ss, item, ';')) coords.push_back(parse_polynomial(item));
  return PolynomialOrbit::make(p, std::move(coords));
}

ConsistencyCertificate verify_consistency(const PolynomialOrbit& orbit) {
  ConsistencyCertificate cert;
  std::string diffs;
  for (std::size_t j = 0; j < orbit.dim(); ++j) {
    const auto& g = orbit.coords[j];
    const RationalPolynomial diff = g.shifted(Rational(orbit.p)) - g;
    for (std::size_t e = 0; e < diff.coeffs().size(); ++e) {
      if (diff.coeffs()[e].get_den() != 1) {
        cert.detail = "coordinate " + std::to_string(j + 1) + ": coefficient of n^" +
                      std::to_string(e) + " in g(n+" + std::to_string(orbit.p) +
                      ") - g(n) is " + diff.coeffs()[e].get_str();
        return cert;
      }
    }
    diffs += (j ? "; " : "") + diff.to_string();
  }
  cert.consistent = true;
  cert.detail = diffs;
  return cert;
}

namespace {

struct PhaseTables {
  std::int64_t Q = 1;
  // G[j][x] = Q g_j(x) mod Q for x in [0, p)
  std::vector<std::vector<std::int64_t>> G;
};

PhaseTables phase_tables(const PolynomialOrbit& orbit) {
  const auto cert = verify_consistency(orbit);
  require(cert.consistent, ErrorKind::Precondition,
          "orbit is not p-periodic mod 1: " + cert.detail);
  require(orbit.p <= 100'000'000, ErrorKind::Budget, "p too large to tabulate");
  BigInt Q = 1;
  for (const auto& g : orbit.coords)
    mpz_lcm(Q.get_mpz_t(), Q.get_mpz_t(), g.denominator_lcm().get_mpz_t());
  require(Q <= 10'000'000, ErrorKind::Budget,
          "common denominator " + Q.get_str() + " too large for exact phases");
  PhaseTables tab;
  tab.Q = to_int64(Q);
  for (const auto& g : orbit.coords) {
    std::vector<std::int64_t> row(orbit.p);
    for (std::int64_t x = 0; x < orbit.p; ++x) {
      const Rational v = g(Rational(x)) * Q;
      BigInt r;
      mpz_fdiv_r(r.get_mpz_t(), v.get_num_mpz_t(), Q.get_mpz_t());
      row[x] = to_int64(r);
    }
    tab.G.push_back(std::move(row));
  }
  return tab;
}

std::vector<std::int64_t> prime_factors(std::int64_t n) {
  std::vector<std::int64_t> out;
  for (std::int64_t f = 2; f * f <= n; ++f)
    if (n % f == 0) {
      out.push_back(f);
      while (n % f == 0) n /= f;
    }
  if (n > 1) out.push_back(n);
  return out;
}

// Distinct tuples u(n) = (G_j[l_a(n) mod p])_{a,j} with multiplicities.
struct TupleTable {
  std::size_t width = 0;
  std::vector<std::int64_t> u;  // row-major, one row per distinct tuple
  std::vector<std::uint64_t> count;
  std::uint64_t points = 0;
  std::size_t size() const { return count.size(); }
};

TupleTable tuple_table(const PhaseTables& tab, const PolynomialOrbit& orbit,
                       const LinearFormSystem& system, std::uint64_t budget) {
  const std::size_t t = system.forms();
  const std::size_t D = system.variables();
  const std::size_t m = orbit.dim();
  const auto p = static_cast<std::uint64_t>(orbit.p);
  TupleTable out;
  out.width = t * m;
  out.points = checked_pow(p, D, budget, "p^D");
  std::map<std::vector<std::int64_t>, std::uint64_t> seen;
  std::vector<std::int64_t> n(D, 0), key(t * m);
  while (true) {
    for (std::size_t a = 0; a < t; ++a) {
      std::int64_t r = system.evaluate(a, n) % orbit.p;
      if (r < 0) r += orbit.p;
      for (std::size_t j = 0; j < m; ++j) key[a * m + j] = tab.G[j][r];
    }
    ++seen[key];
    std::size_t pos = D;
    while (pos > 0 && ++n[pos - 1] == orbit.p) n[--pos] = 0;
    if (pos == 0) break;
  }
  for (const auto& [k, c] : seen) {
    out.u.insert(out.u.end(), k.begin(), k.end());
    out.count.push_back(c);
  }
  return out;
}

// Exact-zero test plus compensated evaluation from a phase histogram.
Complex histogram_sum(const std::vector<std::uint64_t>& hist,
                      const std::vector<std::int64_t>& primes,
                      const std::vector<Complex>& roots, std::uint64_t points) {
  const auto Q = static_cast<std::int64_t>(hist.size());
  for (auto l : primes) {
    const std::int64_t s = Q / l;
    bool periodic = true;
    for (std::int64_t r = 0; r < Q && periodic; ++r)
      periodic = hist[r] == hist[(r + s) % Q];
    if (periodic) return 0.0;
  }
  KahanSum<Complex> sum;
  for (std::int64_t r = 0; r < Q; ++r)
    if (hist[r]) sum.add(static_cast<double>(hist[r]) * roots[r]);
  return sum.value() / static_cast<double>(points);
}

std::vector<Complex> unit_roots(std::int64_t Q) {
  std::vector<Complex> roots(Q);
  for (std::int64_t r = 0; r < Q; ++r)
    roots[r] = expi(static_cast<double>(r) / static_cast<double>(Q));
  return roots;
}

void check_character(const TupleCharacter& chi, const PolynomialOrbit& orbit,
                     const LinearFormSystem& system) {
  require(chi.t == system.forms() && chi.m == orbit.dim() &&
              chi.freq.size() == chi.t * chi.m,
          ErrorKind::Dimension, "character must be t x m");
}

void check_orbit_spec(const PolynomialOrbit& orbit,
                      const FilteredTorusSpec& spec) {
  require(orbit.dim() == spec.dim(), ErrorKind::Dimension,
          "orbit dimension does not match the torus spec");
  for (std::size_t j = 0; j < spec.dim(); ++j)
    require(orbit.coords[j].degree() <= spec.degrees[j],
            ErrorKind::InvalidParameter,
            "coordinate " + std::to_string(j + 1) + " has degree above " +
                std::to_string(spec.degrees[j]));
}

double truncation_rate(int N) {
  return (1.0 + std::log(static_cast<double>(N))) / static_cast<double>(N);
}

}  // namespace

Complex weyl_character_sum(const PolynomialOrbit& orbit,
                           const LinearFormSystem& system,
                           const TupleCharacter& chi, std::uint64_t budget) {
  check_character(chi, orbit, system);
  const PhaseTables tab = phase_tables(orbit);
  const TupleTable tuples = tuple_table(tab, orbit, system, budget);
  const std::int64_t Q = tab.Q;
  std::vector<std::uint64_t> hist(Q, 0);
  for (std::size_t u = 0; u < tuples.size(); ++u) {
    __int128 ph = 0;
    for (std::size_t e = 0; e < tuples.width; ++e)
      ph += static_cast<__int128>(chi.freq[e]) * tuples.u[u * tuples.width + e];
    std::int64_t r = static_cast<std::int64_t>(ph % Q);
    if (r < 0) r += Q;
    hist[r] += tuples.count[u];
  }
  return histogram_sum(hist, prime_factors(Q), unit_roots(Q), tuples.points);
}

WeylReport weyl_balance_test(const PolynomialOrbit& orbit,
                             const FilteredTorusSpec& spec,
                             const LinearFormSystem& system, int freq_bound,
                             std::uint64_t budget) {
  require(freq_bound >= 1, ErrorKind::InvalidParameter,
          "freq_bound must be >= 1");
  check_orbit_spec(orbit, spec);
  const auto model = build_model(spec, system);
  const PhaseTables tab = phase_tables(orbit);
  const TupleTable tuples = tuple_table(tab, orbit, system, budget);
  const std::int64_t Q = tab.Q;
  const auto primes = prime_factors(Q);
  const auto roots = unit_roots(Q);
  const std::size_t t = system.forms();
  const std::size_t m = orbit.dim();
  const std::size_t L = t * m;
  const std::uint64_t base = 2 * static_cast<std::uint64_t>(freq_bound) + 1;

  WeylReport report;
  report.characters =
      checked_pow(base, L, kDefaultCharacterBudget, "character enumeration");
  report.truncation_rate = truncation_rate(freq_bound);

  // Characters are walked in index order inside fixed chunks sharing their
  // leading entries. phase[e][u] holds sum_{e' < e} M_e' u_e' mod Q, so a
  // change in entry e only refreshes levels above e.
  std::size_t inner = 0;
  std::uint64_t chunk_size = 1;
  while (inner < L && chunk_size < 128) {
    chunk_size *= base;
    ++inner;
  }
  const std::uint64_t chunks = report.characters / chunk_size;
  const std::size_t U = tuples.size();

  struct Part {
    std::uint64_t nontrivial = 0;
    double best = -1.0;
    std::uint64_t arg = 0;
  };
  std::vector<Part> parts(chunks);

#pragma omp parallel
  {
    std::vector<std::vector<std::int64_t>> phase(L + 1, std::vector<std::int64_t>(U));
    std::vector<std::uint64_t> hist(Q);
#pragma omp for schedule(dynamic)
    for (std::int64_t ch = 0; ch < static_cast<std::int64_t>(chunks); ++ch) {
      Part& part = parts[ch];
      const std::uint64_t first = static_cast<std::uint64_t>(ch) * chunk_size;
      TupleCharacter chi = character_from_index(t, m, freq_bound, first);
      std::fill(phase[0].begin(), phase[0].end(), 0);
      std::size_t dirty = 0;  // levels above `dirty` need recomputing
      for (std::uint64_t idx = first; idx < first + chunk_size; ++idx) {
        if (idx != first) {
          // Odometer step on the trailing `inner` entries.
          std::size_t pos = L;
          while (true) {
            --pos;
            if (chi.freq[pos] < freq_bound) {
              ++chi.freq[pos];
              break;
            }
            chi.freq[pos] = -freq_bound;
          }
          dirty = std::min(dirty, pos);
        }
        for (std::size_t e = dirty; e < L; ++e) {
          const std::int64_t M = chi.freq[e];
          const std::int64_t* prev = phase[e].data();
          std::int64_t* next = phase[e + 1].data();
          for (std::size_t u = 0; u < U; ++u) {
            std::int64_t v = (prev[u] + M * tuples.u[u * L + e]) % Q;
            next[u] = v < 0 ? v + Q : v;
          }
        }
        dirty = L;
        if (character_trivial_on_model(chi, model)) continue;
        ++part.nontrivial;
        std::fill(hist.begin(), hist.end(), 0);
        const std::int64_t* ph = phase[L].data();
        for (std::size_t u = 0; u < U; ++u) hist[ph[u]] += tuples.count[u];
        const double a = std::abs(histogram_sum(hist, primes, roots, tuples.points));
        if (a > part.best) {
          part.best = a;
          part.arg = idx;
        }
      }
    }
  }
  double best = -1.0;
  std::uint64_t arg = 0;
  for (const auto& part : parts) {
    report.nontrivial += part.nontrivial;
    if (part.best > best) {
      best = part.best;
      arg = part.arg;
    }
  }
  if (report.nontrivial > 0) {
    report.max_abs = best;
    report.argmax = character_from_index(t, m, freq_bound, arg);
  }
  return report;
}

namespace serial {

BalanceReport phi_k_balance_report(const PhiKMap& map,
                                   const LinearFormSystem& system,
                                   int domain_degree, int freq_bound,
                                   int target_degree) {
  const std::size_t t = system.forms();
  const std::size_t d = static_cast<std::size_t>(map.d);
  const auto target = build_model(uniform_spec(map.d, target_degree), system);
  const auto domain = leibman_lattice(system, domain_degree);
  BalanceReport report;
  report.characters = character_count(t, d, freq_bound);
  for (std::uint64_t idx = 0; idx < report.characters; ++idx) {
    const auto chi = character_from_index(t, d, freq_bound, idx);
    if (character_trivial_on_model(chi, target)) {
      ++report.trivial_on_target;
      continue;
    }
    IntVector pull(t);
    for (std::size_t a = 0; a < t; ++a) {
      BigInt s = 0, kp = 1;
      for (std::size_t i = 0; i < d; ++i) {
        s += kp * static_cast<long>(chi.at(a, i));
        kp *= static_cast<long>(map.k);
      }
      pull[a] = s;
    }
    const bool vanishes = std::any_of(
        domain.basis().begin(), domain.basis().end(),
        [&](const IntVector& v) { return dot(pull, v) != 0; });
    if (vanishes)
      ++report.vanishing;
    else
      report.violated.push_back(idx);
  }
  report.max_discrepancy = report.violated.empty() ? 0.0 : 1.0;
  return report;
}

Complex weyl_character_sum(const PolynomialOrbit& orbit,
                           const LinearFormSystem& system,
                           const TupleCharacter& chi) {
  check_character(chi, orbit, system);
  const auto cert = verify_consistency(orbit);
  require(cert.consistent, ErrorKind::Precondition,
          "orbit is not p-periodic mod 1: " + cert.detail);
  const std::size_t t = system.forms();
  const std::size_t D = system.variables();
  const std::size_t m = orbit.dim();
  std::vector<std::vector<double>> g(m, std::vector<double>(orbit.p));
  for (std::size_t j = 0; j < m; ++j)
    for (std::int64_t x = 0; x < orbit.p; ++x) {
      const Rational v = orbit.coords[j](Rational(x));
      BigInt fl;
      mpz_fdiv_q(fl.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
      g[j][x] = Rational(v - fl).get_d();
    }
  std::vector<std::int64_t> n(D, 0);
  KahanSum<Complex> sum;
  std::uint64_t points = 0;
  while (true) {
    double phase = 0.0;
    for (std::size_t a = 0; a < t; ++a) {
      std::int64_t r = system.evaluate(a, n) % orbit.p;
      if (r < 0) r += orbit.p;
      for (std::size_t j = 0; j < m; ++j)
        phase += static_cast<double>(chi.at(a, j)) * g[j][r];
    }
    sum.add(expi(frac(phase)));
    ++points;
    std::size_t pos = D;
    while (pos > 0 && ++n[pos - 1] == orbit.p) n[--pos] = 0;
    if (pos == 0) break;
  }
  return sum.value() / static_cast<double>(points);
}

WeylReport weyl_balance_test(const PolynomialOrbit& orbit,
                             const FilteredTorusSpec& spec,
                             const LinearFormSystem& system, int freq_bound) {
  check_orbit_spec(orbit, spec);
  const auto model = build_model(spec, system);
  const std::size_t t = system.forms();
  const std::size_t m = orbit.dim();
  WeylReport report;
  report.characters = character_count(t, m, freq_bound);
  report.truncation_rate = truncation_rate(freq_bound);
  double best = -1.0;
  for (std::uint64_t idx = 0; idx < report.characters; ++idx) {
    const auto chi = character_from_index(t, m, freq_bound, idx);
    if (character_trivial_on_model(chi, model)) continue;
    ++report.nontrivial;
    const double a = std::abs(serial::weyl_character_sum(orbit, system, chi));
    if (a > best) {
      best = a;
      report.argmax = chi;
    }
  }
  if (report.nontrivial > 0) report.max_abs = best;
  return report;
}

}  // namespace serial

}  // namespace linforms
