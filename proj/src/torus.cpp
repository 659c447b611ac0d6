#include "linforms/torus.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "linforms/error.hpp"
#include "linforms/rng.hpp"

namespace linforms {

namespace {

constexpr std::uint64_t kChunk = 4096;

std::uint64_t ipow_checked(std::uint64_t base, std::size_t e,
                           std::uint64_t cap) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < e; ++i) {
    if (base != 0 && r > cap / base) return cap + 1;
    r *= base;
  }
  return r;
}

Complex slot_value(const TorusFunction& f, std::span<const double> x,
                   std::size_t t, std::size_t m,
                   const std::optional<ConjugationPattern>& pattern) {
  Complex prod = 1.0;
  for (std::size_t a = 0; a < t; ++a) {
    Complex v = f(x.subspan(a * m, m));
    if (pattern && pattern->conjugated(a)) v = std::conj(v);
    prod *= v;
  }
  return prod;
}

McEstimate finish(const KahanSum<Complex>& sum, const KahanSum<double>& sq,
                  std::uint64_t n) {
  McEstimate r;
  r.samples = n;
  r.estimate = sum.value() / static_cast<double>(n);
  if (n > 1) {
    double var = (sq.value() - static_cast<double>(n) * std::norm(r.estimate)) /
                 static_cast<double>(n - 1);
    r.std_error = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
  }
  return r;
}

void check_pattern(const std::optional<ConjugationPattern>& pattern,
                   std::size_t t) {
  if (pattern)
    require(pattern->size() == t, ErrorKind::Dimension,
            "pattern length does not match the number of forms");
}

}  // namespace

FilteredTorusSpec FilteredTorusSpec::make(std::vector<int> degrees) {
  require(!degrees.empty(), ErrorKind::InvalidParameter,
          "a filtered torus needs at least one coordinate");
  for (int d : degrees)
    require(d >= 1, ErrorKind::InvalidParameter,
            "filtration degrees must be >= 1");
  return FilteredTorusSpec{std::move(degrees)};
}

std::string FilteredTorusSpec::to_string() const {
  std::string s;
  for (std::size_t j = 0; j < degrees.size(); ++j)
    s += (j ? "," : "") + std::to_string(degrees[j]);
  return s;
}

FilteredTorusSpec parse_torus_spec(const std::string& text) {
  std::vector<int> d;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      d.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, "bad torus spec '" + text + "'");
    }
  }
  return FilteredTorusSpec::make(std::move(d));
}

std::size_t LeibmanTorusModel::dimension() const {
  std::size_t d = 0;
  for (const auto& b : blocks_) d += b.rank();
  return d;
}

LeibmanTorusModel build_model(const FilteredTorusSpec& spec,
                              const LinearFormSystem& system) {
  require(!system.has_zero_row(), ErrorKind::Degenerate,
          "system has a zero form; its coordinate projection is not onto");
  LeibmanTorusModel model(spec, system);
  std::map<int, IntegerLattice> cache;
  for (int d : spec.degrees) {
    auto it = cache.find(d);
    if (it == cache.end())
      it = cache.emplace(d, leibman_lattice(system, static_cast<unsigned>(d)))
               .first;
    model.blocks_.push_back(it->second);
    std::vector<std::int64_t> flat;
    std::vector<double> flat_f;
    for (const auto& row : it->second.basis_int64())
      for (auto x : row) {
        flat.push_back(x);
        flat_f.push_back(static_cast<double>(x));
      }
    model.basis_.push_back(std::move(flat));
    model.basis_f_.push_back(std::move(flat_f));
  }
  return model;
}

void LeibmanTorusModel::sample(std::uint64_t seed, std::uint64_t index,
                               std::span<double> out) const {
  const std::size_t t = forms();
  const std::size_t m = coords();
  CounterRng rng(seed, index);
  double theta[64];
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t r = blocks_[j].rank();
    require(r <= 64, ErrorKind::Dimension, "block rank above 64");
    for (std::size_t i = 0; i < r; ++i) theta[i] = rng.uniform();
    const double* V = basis_f_[j].data();
    for (std::size_t a = 0; a < t; ++a) {
      double s = 0.0;
      for (std::size_t i = 0; i < r; ++i) s += theta[i] * V[i * t + a];
      out[a * m + j] = frac(s);
    }
  }
}

std::vector<double> sample_haar(const LeibmanTorusModel& model,
                                std::uint64_t seed, std::size_t count) {
  require(count >= 1, ErrorKind::InvalidParameter, "sample count must be >= 1");
  const std::size_t ps = model.point_size();
  std::vector<double> pts(count * ps);
#pragma omp parallel for schedule(static)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(count); ++s)
    model.sample(seed, static_cast<std::uint64_t>(s),
                 std::span<double>(pts.data() + s * ps, ps));
  return pts;
}

Complex TupleCharacter::operator()(std::span<const double> x) const {
  double phase = 0.0;
  for (std::size_t k = 0; k < freq.size(); ++k)
    phase += static_cast<double>(freq[k]) * x[k];
  return expi(frac(phase));
}

std::uint64_t character_count(std::size_t t, std::size_t m, int bound) {
  return ipow_checked(2 * static_cast<std::uint64_t>(bound) + 1, t * m,
                      ~std::uint64_t{0} / 2);
}

TupleCharacter character_from_index(std::size_t t, std::size_t m, int bound,
                                    std::uint64_t index) {
  TupleCharacter chi = TupleCharacter::zero(t, m);
  const std::uint64_t base = 2 * static_cast<std::uint64_t>(bound) + 1;
  for (std::size_t k = t * m; k-- > 0;) {
    chi.freq[k] = static_cast<std::int64_t>(index % base) - bound;
    index /= base;
  }
  return chi;
}

bool character_trivial_on_model(const TupleCharacter& chi,
                                const LeibmanTorusModel& model) {
  require(chi.t == model.forms() && chi.m == model.coords(),
          ErrorKind::Dimension, "character shape does not match the model");
  const std::size_t t = chi.t;
  for (std::size_t j = 0; j < chi.m; ++j) {
    const auto& V = model.block_basis(j);
    for (std::size_t i = 0; i < model.block_rank(j); ++i) {
      __int128 s = 0;
      for (std::size_t a = 0; a < t; ++a)
        s += static_cast<__int128>(chi.at(a, j)) * V[i * t + a];
      if (s != 0) return false;
    }
  }
  return true;
}

Complex TrigPolynomial::operator()(std::span<const double> x) const {
  Complex s = 0.0;
  for (const auto& term : terms) {
    double phase = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      phase += static_cast<double>(term.freq[j]) * x[j];
    s += term.coeff * expi(frac(phase));
  }
  return s;
}

const TrigTerm* TrigPolynomial::find(
    const std::vector<std::int64_t>& freq) const {
  for (const auto& term : terms)
    if (term.freq == freq) return &term;
  return nullptr;
}

TrigPolynomial read_trig(std::istream& in) {
  TrigPolynomial f;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<double> nums;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        nums.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        fail(ErrorKind::Parse, "bad trig polynomial token '" + tok + "'");
      }
    }
    if (nums.empty()) continue;
    require(nums.size() >= 3, ErrorKind::Parse,
            "trig line needs 'n_1 ... n_m re im'");
    const std::size_t m = nums.size() - 2;
    if (f.terms.empty()) f.m = m;
    require(m == f.m, ErrorKind::Parse, "inconsistent frequency dimension");
    TrigTerm term;
    for (std::size_t j = 0; j < m; ++j) {
      require(nums[j] == std::floor(nums[j]), ErrorKind::Parse,
              "frequencies must be integers");
      term.freq.push_back(static_cast<std::int64_t>(nums[j]));
    }
    term.coeff = {nums[m], nums[m + 1]};
    f.terms.push_back(std::move(term));
  }
  require(!f.terms.empty(), ErrorKind::Parse, "empty trig polynomial");
  return f;
}

void write_trig(std::ostream& out, const TrigPolynomial& f) {
  out.precision(17);
  for (const auto& term : f.terms) {
    for (auto n : term.freq) out << n << ' ';
    out << ' ' << term.coeff.real() << ' ' << term.coeff.imag() << '\n';
  }
}

GridFunction GridFunction::constant(std::size_t m, std::size_t q, Complex v) {
  const std::uint64_t n = ipow_checked(q, m, 100'000'000);
  require(n <= 100'000'000, ErrorKind::Budget, "grid too large");
  return {m, q, std::vector<Complex>(n, v)};
}

std::size_t GridFunction::cell_index(std::span<const double> x) const {
  std::size_t idx = 0;
  for (std::size_t j = 0; j < m; ++j) {
    auto c = static_cast<std::size_t>(frac(x[j]) * static_cast<double>(q));
    idx = idx * q + std::min(c, q - 1);
  }
  return idx;
}

Complex GridFunction::mean() const {
  KahanSum<Complex> s;
  for (const auto& v : values) s.add(v);
  return s.value() / static_cast<double>(values.size());
}

GridFunction read_grid(std::istream& in) {
  long long m = 0, q = 0;
  if (!(in >> m >> q) || m < 1 || q < 1)
    fail(ErrorKind::Parse, "grid header must be 'm q'");
  GridFunction g = GridFunction::constant(m, q, 0.0);
  std::vector<double> nums;
  double v;
  while (in >> v) nums.push_back(v);
  if (!in.eof()) fail(ErrorKind::Parse, "malformed grid value");
  if (nums.size() == g.cells()) {
    for (std::size_t k = 0; k < nums.size(); ++k) g.values[k] = nums[k];
  } else if (nums.size() == 2 * g.cells()) {
    for (std::size_t k = 0; k < g.cells(); ++k)
      g.values[k] = {nums[2 * k], nums[2 * k + 1]};
  } else {
    fail(ErrorKind::Parse, "grid has " + std::to_string(nums.size()) +
                               " values, expected q^m = " +
                               std::to_string(g.cells()));
  }
  for (const auto& z : g.values)
    require(std::isfinite(z.real()) && std::isfinite(z.imag()),
            ErrorKind::Parse, "grid values must be finite");
  return g;
}

void write_grid(std::ostream& out, const GridFunction& g) {
  out.precision(17);
  out << g.m << ' ' << g.q << '\n';
  const bool real = std::all_of(g.values.begin(), g.values.end(),
                                [](const Complex& z) { return z.imag() == 0; });
  for (const auto& z : g.values) {
    if (real)
      out << z.real() << '\n';
    else
      out << z.real() << ' ' << z.imag() << '\n';
  }
}

Complex exact_trig_average(const TrigPolynomial& f,
                           const LeibmanTorusModel& model,
                           const std::optional<ConjugationPattern>& pattern,
                           std::uint64_t budget) {
  const std::size_t t = model.forms();
  const std::size_t m = model.coords();
  require(f.m == m, ErrorKind::Dimension,
          "trig polynomial dimension does not match the torus");
  check_pattern(pattern, t);
  const std::size_t J = f.terms.size();
  if (J == 0) return 0.0;
  require(ipow_checked(J, t, budget) <= budget, ErrorKind::Budget,
          "term expansion (#terms)^t exceeds budget " + std::to_string(budget));

  // Constraint rows: one per (coordinate j, basis vector v of block j).
  struct Constraint {
    std::size_t j;
    std::vector<std::int64_t> v;
  };
  std::vector<Constraint> cons;
  for (std::size_t j = 0; j < m; ++j) {
    const auto& V = model.block_basis(j);
    for (std::size_t i = 0; i < model.block_rank(j); ++i)
      cons.push_back({j, std::vector<std::int64_t>(V.begin() + i * t,
                                                   V.begin() + (i + 1) * t)});
  }
  const std::size_t nc = cons.size();

  // Depth-first over slot choices with running constraint sums.
  std::vector<std::vector<__int128>> partial(t + 1,
                                             std::vector<__int128>(nc, 0));
  std::vector<Complex> coeff(t + 1, 1.0);
  std::vector<std::size_t> choice(t, 0);
  KahanSum<Complex> total;
  std::size_t depth = 0;
  while (true) {
    if (depth == t) {
      if (std::all_of(partial[t].begin(), partial[t].end(),
                      [](__int128 s) { return s == 0; }))
        total.add(coeff[t]);
      // backtrack
      while (depth > 0 && choice[depth - 1] + 1 == J) {
        choice[depth - 1] = 0;
        --depth;
      }
      if (depth == 0) break;
      ++choice[depth - 1];
      --depth;
    }
    const std::size_t a = depth;
    const auto& term = f.terms[choice[a]];
    const bool conj = pattern && pattern->conjugated(a);
    const int sign = conj ? -1 : 1;
    for (std::size_t c = 0; c < nc; ++c)
      partial[a + 1][c] =
          partial[a][c] + static_cast<__int128>(sign * term.freq[cons[c].j]) *
                              cons[c].v[a];
    coeff[a + 1] = coeff[a] * (conj ? std::conj(term.coeff) : term.coeff);
    ++depth;
  }
  return total.value();
}

McEstimate mc_average(const TorusFunction& f, const LeibmanTorusModel& model,
                      const std::optional<ConjugationPattern>& pattern,
                      std::uint64_t samples, std::uint64_t seed) {
  require(samples >= 1, ErrorKind::InvalidParameter, "samples must be >= 1");
  const std::size_t t = model.forms();
  const std::size_t m = model.coords();
  check_pattern(pattern, t);
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  std::vector<KahanSum<Complex>> sums(chunks);
  std::vector<KahanSum<double>> squares(chunks);

#pragma omp parallel
  {
    std::vector<double> x(model.point_size());
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
      const std::uint64_t lo = static_cast<std::uint64_t>(c) * kChunk;
      const std::uint64_t hi = std::min(samples, lo + kChunk);
      for (std::uint64_t s = lo; s < hi; ++s) {
        model.sample(seed, s, x);
        const Complex v = slot_value(f, x, t, m, pattern);
        sums[c].add(v);
        squares[c].add(std::norm(v));
      }
    }
  }
  KahanSum<Complex> sum;
  KahanSum<double> sq;
  for (std::uint64_t c = 0; c < chunks; ++c) {
    sum.add(sums[c]);
    sq.add(squares[c]);
  }
  return finish(sum, sq, samples);
}

namespace serial {

McEstimate mc_average(const TorusFunction& f, const LeibmanTorusModel& model,
                      const std::optional<ConjugationPattern>& pattern,
                      std::uint64_t samples, std::uint64_t seed) {
  require(samples >= 1, ErrorKind::InvalidParameter, "samples must be >= 1");
  check_pattern(pattern, model.forms());
  std::vector<double> x(model.point_size());
  KahanSum<Complex> sum;
  KahanSum<double> sq;
  for (std::uint64_t s = 0; s < samples; ++s) {
    model.sample(seed, s, x);
    const Complex v = slot_value(f, x, model.forms(), model.coords(), pattern);
    sum.add(v);
    sq.add(std::norm(v));
  }
  return finish(sum, sq, samples);
}

std::vector<Complex> mc_character_means(const LeibmanTorusModel& model,
                                        int bound, std::uint64_t samples,
                                        std::uint64_t seed) {
  const std::size_t L = model.point_size();
  const std::uint64_t n = character_count(model.forms(), model.coords(), bound);
  std::vector<KahanSum<Complex>> acc(n);
  std::vector<double> x(L);
  for (std::uint64_t s = 0; s < samples; ++s) {
    model.sample(seed, s, x);
    for (std::uint64_t c = 0; c < n; ++c) {
      auto chi = character_from_index(model.forms(), model.coords(), bound, c);
      acc[c].add(chi(x));
    }
  }
  std::vector<Complex> out(n);
  for (std::uint64_t c = 0; c < n; ++c)
    out[c] = acc[c].value() / static_cast<double>(samples);
  return out;
}

}  // namespace serial

std::vector<Complex> mc_character_means(const LeibmanTorusModel& model,
                                        int bound, std::uint64_t samples,
                                        std::uint64_t seed) {
  require(bound >= 0, ErrorKind::InvalidParameter, "bound must be >= 0");
  require(samples >= 1, ErrorKind::InvalidParameter, "samples must be >= 1");
  const std::size_t L = model.point_size();
  const std::size_t B = 2 * static_cast<std::size_t>(bound) + 1;
  const std::size_t h1 = L / 2;
  const std::size_t h2 = L - h1;
  const std::uint64_t n1 = ipow_checked(B, h1, 1u << 24);
  const std::uint64_t n2 = ipow_checked(B, h2, 1u << 24);
  require(n1 * n2 <= (1u << 26), ErrorKind::Budget,
          "too many characters for mc_character_means");

  // The character sum factors as A(first half) * B(second half) per sample,
  // so accumulating the outer product A B^T gives every mean at once.
  const std::uint64_t chunks = (samples + kChunk - 1) / kChunk;
  const std::size_t nn = n1 * n2;
  std::vector<double> total_re(nn, 0.0), total_im(nn, 0.0);

  auto expand = [&](const double* xs, std::size_t len, std::vector<double>& re,
                    std::vector<double>& im) {
    re.assign(1, 1.0);
    im.assign(1, 0.0);
    for (std::size_t l = 0; l < len; ++l) {
      std::vector<double> nre, nim;
      nre.reserve(re.size() * B);
      nim.reserve(re.size() * B);
      for (std::size_t k = 0; k < re.size(); ++k)
        for (std::size_t v = 0; v < B; ++v) {
          const Complex e = expi(frac(static_cast<double>(
                                          static_cast<int>(v) - bound) *
                                      xs[l]));
          nre.push_back(re[k] * e.real() - im[k] * e.imag());
          nim.push_back(re[k] * e.imag() + im[k] * e.real());
        }
      re.swap(nre);
      im.swap(nim);
    }
  };

  // Chunk partials are added in chunk order and each output entry is summed
  // over samples in order, so the result is thread-count independent.
  std::vector<double> part_re(nn), part_im(nn);
  std::vector<std::vector<double>> As_re(kChunk), As_im(kChunk), Bs_re(kChunk),
      Bs_im(kChunk);
  for (std::uint64_t c = 0; c < chunks; ++c) {
    const std::uint64_t lo = c * kChunk;
    const std::uint64_t cnt = std::min(samples, lo + kChunk) - lo;
#pragma omp parallel
    {
      std::vector<double> x(L);
#pragma omp for schedule(static)
      for (std::int64_t s = 0; s < static_cast<std::int64_t>(cnt); ++s) {
        model.sample(seed, lo + s, x);
        expand(x.data(), h1, As_re[s], As_im[s]);
        expand(x.data() + h1, h2, Bs_re[s], Bs_im[s]);
      }
#pragma omp for schedule(static)
      for (std::int64_t i = 0; i < static_cast<std::int64_t>(n1); ++i) {
        double* pr = part_re.data() + i * n2;
        double* pi = part_im.data() + i * n2;
        std::fill(pr, pr + n2, 0.0);
        std::fill(pi, pi + n2, 0.0);
        for (std::uint64_t s = 0; s < cnt; ++s) {
          const double ar = As_re[s][i], ai = As_im[s][i];
          const double* br = Bs_re[s].data();
          const double* bi = Bs_im[s].data();
          for (std::size_t k = 0; k < n2; ++k) {
            pr[k] += ar * br[k] - ai * bi[k];
            pi[k] += ar * bi[k] + ai * br[k];
          }
        }
      }
    }
    for (std::size_t k = 0; k < nn; ++k) {
      total_re[k] += part_re[k];
      total_im[k] += part_im[k];
    }
  }
  std::vector<Complex> out(nn);
  for (std::size_t k = 0; k < nn; ++k)
    out[k] = Complex(total_re[k], total_im[k]) / static_cast<double>(samples);
  return out;
}

FourierTruncation fourier_truncate(const GridFunction& f, int N) {
  require(N >= 1, ErrorKind::InvalidParameter, "N must be >= 1");
  require(2 * static_cast<std::size_t>(N) <= f.q, ErrorKind::Resolution,
          "N = " + std::to_string(N) + " exceeds q/2 = " +
              std::to_string(f.q / 2));
  const std::size_t m = f.m;
  const std::size_t q = f.q;
  const std::size_t F = 2 * static_cast<std::size_t>(N) + 1;
  require(ipow_checked(F, m, 50'000'000) <= 50'000'000, ErrorKind::Budget,
          "too many frequencies");

  // twiddle[s][k] = e(-n_s k / q), n_s = s - N
  std::vector<Complex> fwd(F * q), inv(F * q);
  for (std::size_t s = 0; s < F; ++s)
    for (std::size_t k = 0; k < q; ++k) {
      const auto n = static_cast<std::int64_t>(s) - N;
      const double th = frac(static_cast<double>(
                            (n * static_cast<std::int64_t>(k)) %
                            static_cast<std::int64_t>(q)) /
                        static_cast<double>(q));
      inv[s * q + k] = expi(th);
      fwd[s * q + k] = std::conj(inv[s * q + k]);
    }

  // Separable transform, one axis at a time.
  auto transform = [&](std::vector<Complex> cur, std::vector<std::size_t> dims,
                       bool forward) {
    for (std::size_t ax = 0; ax < m; ++ax) {
      std::size_t outer = 1, inner = 1;
      for (std::size_t k = 0; k < ax; ++k) outer *= dims[k];
      for (std::size_t k = ax + 1; k < m; ++k) inner *= dims[k];
      const std::size_t from = dims[ax];
      const std::size_t to = forward ? F : q;
      std::vector<Complex> next(outer * to * inner);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t s = 0; s < to; ++s)
          for (std::size_t i = 0; i < inner; ++i) {
            Complex acc = 0.0;
            for (std::size_t k = 0; k < from; ++k) {
              const Complex w = forward ? fwd[s * q + k] : inv[k * q + s];
              acc += cur[(o * from + k) * inner + i] * w;
            }
            next[(o * to + s) * inner + i] =
                forward ? acc / static_cast<double>(q) : acc;
          }
      cur.swap(next);
      dims[ax] = to;
    }
    return cur;
  };

  std::vector<Complex> coeffs =
      transform(f.values, std::vector<std::size_t>(m, q), true);

  double scale = 0.0;
  for (const auto& v : f.values) scale = std::max(scale, std::abs(v));
  const double drop = 1e-12 * std::max(scale, 1.0);

  FourierTruncation out;
  out.poly.m = m;
  for (std::size_t idx = 0; idx < coeffs.size(); ++idx) {
    std::vector<std::int64_t> freq(m);
    double weight = 1.0;
    std::size_t rem = idx;
    for (std::size_t j = m; j-- > 0;) {
      freq[j] = static_cast<std::int64_t>(rem % F) - N;
      rem /= F;
      weight *= 1.0 - static_cast<double>(std::llabs(freq[j])) / (N + 1.0);
    }
    coeffs[idx] *= weight;
    if (std::abs(coeffs[idx]) <= drop) {
      coeffs[idx] = 0.0;
      continue;
    }
    out.poly.terms.push_back({std::move(freq), coeffs[idx]});
  }

  const std::vector<Complex> recon =
      transform(coeffs, std::vector<std::size_t>(m, F), false);
  for (std::size_t k = 0; k < recon.size(); ++k)
    out.sup_error = std::max(out.sup_error, std::abs(recon[k] - f.values[k]));
  return out;
}

}  // namespace linforms
