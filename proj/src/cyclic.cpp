#include "linforms/cyclic.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "linforms/error.hpp"

namespace linforms {

namespace {

std::int64_t mod(std::int64_t x, std::int64_t n) {
  const std::int64_t r = x % n;
  return r < 0 ? r + n : r;
}

bool is_cube_system(const LinearFormSystem& system) {
  for (int d : {2, 3})
    if (system.forms() == (std::size_t{1} << d) &&
        system.variables() == static_cast<std::size_t>(d + 1) &&
        system == make_cube_system(d))
      return true;
  return false;
}

void check_inputs(const CyclicFunction& f, const LinearFormSystem& system,
                  const std::optional<ConjugationPattern>& pattern,
                  std::uint64_t budget) {
  const std::uint64_t N = f.modulus();
  require(N >= 1, ErrorKind::InvalidParameter, "modulus must be >= 1");
  if (pattern)
    require(pattern->size() == system.forms(), ErrorKind::Dimension,
            "pattern length does not match the number of forms");
  std::uint64_t work = 1;
  for (std::size_t j = 0; j < system.variables(); ++j) {
    if (work > budget / N) {
      std::string msg = "N^D = " + std::to_string(N) + "^" +
                        std::to_string(system.variables()) +
                        " exceeds the evaluation budget " +
                        std::to_string(budget);
      if (is_cube_system(system))
        msg += "; use the gowers command for cube systems";
      fail(ErrorKind::Budget, msg);
    }
    work *= N;
  }
}

// Table of f and conj f so the inner loop has no branches on the pattern.
struct SlotTables {
  std::vector<const Complex*> slot;
  std::vector<Complex> plain, conj;
};

SlotTables slot_tables(const CyclicFunction& f, std::size_t t,
                       const std::optional<ConjugationPattern>& pattern) {
  SlotTables tab;
  tab.plain = f.values;
  tab.conj.resize(f.values.size());
  for (std::size_t x = 0; x < f.values.size(); ++x)
    tab.conj[x] = std::conj(f.values[x]);
  for (std::size_t a = 0; a < t; ++a)
    tab.slot.push_back(pattern && pattern->conjugated(a) ? tab.conj.data()
                                                         : tab.plain.data());
  return tab;
}

// Sum over all n with n_0 fixed. Residues are updated incrementally: an
// odometer step at digit j (including the digits that wrap) changes every
// form by c_{a,j} mod N.
KahanSum<Complex> chunk_sum(const SlotTables& tab,
                            const LinearFormSystem& system, std::int64_t N,
                            std::int64_t n0) {
  const std::size_t t = system.forms();
  const std::size_t D = system.variables();
  std::vector<std::int64_t> r(t), step(t * D);
  for (std::size_t a = 0; a < t; ++a) {
    r[a] = mod(system.coeff(a, 0) * n0, N);
    for (std::size_t j = 0; j < D; ++j) step[a * D + j] = mod(system.coeff(a, j), N);
  }
  std::vector<std::int64_t> digit(D, 0);
  KahanSum<Complex> sum;
  while (true) {
    Complex prod = 1.0;
    for (std::size_t a = 0; a < t; ++a) prod *= tab.slot[a][r[a]];
    sum.add(prod);
    std::size_t pos = D;
    while (pos > 1) {
      --pos;
      for (std::size_t a = 0; a < t; ++a) {
        r[a] += step[a * D + pos];
        if (r[a] >= N) r[a] -= N;
      }
      if (++digit[pos] < N) break;
      digit[pos] = 0;
      if (pos == 1) return sum;
    }
    if (D == 1) return sum;
  }
}

double u2_of(const std::vector<Complex>& g) {
  const std::size_t N = g.size();
  KahanSum<double> outer;
  for (std::size_t h = 0; h < N; ++h) {
    KahanSum<Complex> inner;
    for (std::size_t x = 0; x < N; ++x)
      inner.add(g[(x + h) % N] * std::conj(g[x]));
    outer.add(std::norm(inner.value() / static_cast<double>(N)));
  }
  return outer.value() / static_cast<double>(N);
}

std::vector<Complex> difference(const std::vector<Complex>& g, std::size_t h) {
  const std::size_t N = g.size();
  std::vector<Complex> out(N);
  for (std::size_t x = 0; x < N; ++x) out[x] = g[(x + h) % N] * std::conj(g[x]);
  return out;
}

double clamp_norm(double raw) {
  if (raw < 0.0) {
    if (raw < -1e-12)
      std::clog << "gowers_norm_pow: raw value " << raw << " clamped to 0\n";
    return 0.0;
  }
  return raw;
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t powmod(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod(r, a, m);
    a = mulmod(a, a, m);
    e >>= 1;
  }
  return r;
}

}  // namespace

Complex CyclicFunction::operator()(std::int64_t x) const {
  return values[mod(x, static_cast<std::int64_t>(values.size()))];
}

CyclicFunction CyclicFunction::make(std::vector<Complex> values) {
  require(!values.empty(), ErrorKind::InvalidParameter,
          "a cyclic function needs N >= 1 values");
  CyclicFunction f{std::move(values), true};
  for (const auto& v : f.values) {
    require(std::isfinite(v.real()) && std::isfinite(v.imag()),
            ErrorKind::Numeric, "non-finite function value");
    if (std::abs(v) > 1.0 + 1e-12) f.bounded = false;
  }
  return f;
}

CyclicFunction CyclicFunction::constant(std::size_t N, Complex v) {
  return make(std::vector<Complex>(N, v));
}

CyclicFunction CyclicFunction::indicator(
    std::size_t N, const std::vector<std::int64_t>& members) {
  std::vector<Complex> v(N, 0.0);
  for (auto x : members) v[mod(x, static_cast<std::int64_t>(N))] = 1.0;
  return make(std::move(v));
}

CyclicFunction read_cyclic(std::istream& in) {
  long long N = 0;
  if (!(in >> N) || N < 1) fail(ErrorKind::Parse, "cyclic header must be 'N'");
  std::vector<double> nums;
  double v;
  while (in >> v) nums.push_back(v);
  if (!in.eof()) fail(ErrorKind::Parse, "malformed cyclic function value");
  const auto n = static_cast<std::size_t>(N);
  std::vector<Complex> values(n);
  if (nums.size() == n) {
    for (std::size_t k = 0; k < n; ++k) values[k] = nums[k];
  } else if (nums.size() == 2 * n) {
    for (std::size_t k = 0; k < n; ++k) values[k] = {nums[2 * k], nums[2 * k + 1]};
  } else {
    fail(ErrorKind::Parse, "expected " + std::to_string(n) + " values, got " +
                               std::to_string(nums.size()) + " numbers");
  }
  return CyclicFunction::make(std::move(values));
}

void write_cyclic(std::ostream& out, const CyclicFunction& f) {
  out.precision(17);
  out << f.modulus() << '\n';
  for (const auto& z : f.values) out << z.real() << ' ' << z.imag() << '\n';
}

Complex sol_discrete(const CyclicFunction& f, const LinearFormSystem& system,
                     const std::optional<ConjugationPattern>& pattern,
                     std::uint64_t budget) {
  check_inputs(f, system, pattern, budget);
  const auto N = static_cast<std::int64_t>(f.modulus());
  const SlotTables tab = slot_tables(f, system.forms(), pattern);
  std::vector<KahanSum<Complex>> parts(N);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t n0 = 0; n0 < N; ++n0)
    parts[n0] = chunk_sum(tab, system, N, n0);
  KahanSum<Complex> total;
  for (const auto& p : parts) total.add(p);
  double denom = 1.0;
  for (std::size_t j = 0; j < system.variables(); ++j)
    denom *= static_cast<double>(N);
  return total.value() / denom;
}

double gowers_norm_pow(const CyclicFunction& f, int d) {
  require(d == 2 || d == 3, ErrorKind::InvalidParameter,
          "gowers_norm_pow supports d in {2,3}");
  const std::size_t N = f.modulus();
  require(N >= 1, ErrorKind::InvalidParameter, "modulus must be >= 1");
  std::vector<double> parts(N);
  if (d == 2) {
#pragma omp parallel for schedule(static)
    for (std::int64_t h = 0; h < static_cast<std::int64_t>(N); ++h) {
      KahanSum<Complex> inner;
      for (std::size_t x = 0; x < N; ++x)
        inner.add(f.values[(x + h) % N] * std::conj(f.values[x]));
      parts[h] = std::norm(inner.value() / static_cast<double>(N));
    }
  } else {
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t h = 0; h < static_cast<std::int64_t>(N); ++h)
      parts[h] = u2_of(difference(f.values, h));
  }
  KahanSum<double> total;
  for (double v : parts) total.add(v);
  return clamp_norm(total.value() / static_cast<double>(N));
}

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (std::uint64_t a : {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37}) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s && composite; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) composite = false;
    }
    if (composite) return false;
  }
  return true;
}

CyclicFunction quadratic_phase(std::uint64_t p) {
  require(is_prime(p), ErrorKind::InvalidParameter,
          std::to_string(p) + " is not prime");
  require(p <= 100'000'000, ErrorKind::Budget, "modulus too large to tabulate");
  std::vector<Complex> v(p);
  for (std::uint64_t x = 0; x < p; ++x)
    v[x] = expi(static_cast<double>(mulmod(x, x, p)) / static_cast<double>(p));
  return CyclicFunction::make(std::move(v));
}

CyclicFunction sumfree_interval(std::uint64_t p) {
  require(p >= 5, ErrorKind::InvalidParameter, "sumfree_interval needs p >= 5");
  require(is_prime(p), ErrorKind::InvalidParameter,
          std::to_string(p) + " is not prime");
  require(p <= 100'000'000, ErrorKind::Budget, "modulus too large to tabulate");
  const std::uint64_t lo = p / 3 + 1;
  const std::uint64_t hi = (2 * p + 2) / 3 - 1;  // ceil(2p/3) - 1
  std::vector<Complex> v(p, 0.0);
  for (std::uint64_t x = lo; x <= hi; ++x) v[x] = 1.0;
  return CyclicFunction::make(std::move(v));
}

CyclicFunction parse_cyclic_function(const std::string& spec, std::size_t N) {
  if (spec == "quadphase") return quadratic_phase(N);
  if (spec == "sumfree") return sumfree_interval(N);
  if (spec.rfind("const:", 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string s = spec.substr(6);
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return CyclicFunction::constant(N, v);
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, "bad constant in '" + spec + "'");
    }
  }
  if (spec.rfind("indicator:", 0) == 0) {
    std::vector<std::int64_t> members;
    std::stringstream ss(spec.substr(10));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        members.push_back(std::stoll(item));
      } catch (const std::exception&) {
        fail(ErrorKind::Parse, "bad member '" + item + "'");
      }
    }
    return CyclicFunction::indicator(N, members);
  }
  if (!spec.empty() && spec[0] == '@') {
    std::ifstream in(spec.substr(1));
    if (!in) fail(ErrorKind::Parse, "cannot open " + spec.substr(1));
    CyclicFunction f = read_cyclic(in);
    require(N == 0 || f.modulus() == N, ErrorKind::Dimension,
            "file modulus " + std::to_string(f.modulus()) + " != N = " +
                std::to_string(N));
    return f;
  }
  fail(ErrorKind::Parse, "unknown function '" + spec + "'");
}

namespace serial {

Complex sol_discrete(const CyclicFunction& f, const LinearFormSystem& system,
                     const std::optional<ConjugationPattern>& pattern,
                     std::uint64_t budget) {
  check_inputs(f, system, pattern, budget);
  const auto N = static_cast<std::int64_t>(f.modulus());
  const std::size_t t = system.forms();
  const std::size_t D = system.variables();
  std::vector<std::int64_t> n(D, 0);
  KahanSum<Complex> total;
  while (true) {
    Complex prod = 1.0;
    for (std::size_t a = 0; a < t; ++a) {
      Complex v = f(system.evaluate(a, n));
      if (pattern && pattern->conjugated(a)) v = std::conj(v);
      prod *= v;
    }
    total.add(prod);
    std::size_t pos = D;
    while (pos > 0 && ++n[pos - 1] == N) n[--pos] = 0;
    if (pos == 0) break;
  }
  double denom = 1.0;
  for (std::size_t j = 0; j < D; ++j) denom *= static_cast<double>(N);
  return total.value() / denom;
}

double gowers_norm_pow(const CyclicFunction& f, int d) {
  require(d == 2 || d == 3, ErrorKind::InvalidParameter,
          "gowers_norm_pow supports d in {2,3}");
  const std::size_t N = f.modulus();
  if (d == 2) return clamp_norm(u2_of(f.values));
  KahanSum<double> total;
  for (std::size_t h = 0; h < N; ++h) total.add(u2_of(difference(f.values, h)));
  return clamp_norm(total.value() / static_cast<double>(N));
}

}  // namespace serial

}  // namespace linforms
