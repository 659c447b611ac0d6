#include "linforms/extremal.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "linforms/error.hpp"
#include "linforms/rng.hpp"

namespace linforms {

namespace {

// The configurations l(n) = (l_1(n), ..., l_t(n)) mod p, grouped. Each group
// is a sorted residue tuple (with repeats) and the number of n producing it.
struct Incidence {
  std::size_t p = 0;
  std::size_t t = 0;
  std::uint64_t points = 0;
  std::vector<std::vector<std::uint32_t>> tuples;
  std::vector<std::uint64_t> mult;
  // Per group: distinct residues, and the same set as a bit mask when p <= 64.
  std::vector<std::vector<std::uint32_t>> sets;
  std::vector<std::uint64_t> masks;
  // by_element[x] = groups whose set contains x
  std::vector<std::vector<std::uint32_t>> by_element;
};

Incidence build_incidence(const LinearFormSystem& system, std::size_t p) {
  require(p >= 1, ErrorKind::InvalidParameter, "p must be >= 1");
  const std::size_t t = system.forms();
  const std::size_t D = system.variables();
  Incidence inc;
  inc.p = p;
  inc.t = t;
  inc.points = 1;
  for (std::size_t j = 0; j < D; ++j) {
    require(inc.points <= 50'000'000 / p, ErrorKind::Budget,
            "p^D exceeds the enumeration budget 5e7");
    inc.points *= p;
  }
  const auto P = static_cast<std::int64_t>(p);
  std::map<std::vector<std::uint32_t>, std::uint64_t> seen;
  std::vector<std::int64_t> n(D, 0);
  std::vector<std::uint32_t> key(t);
  while (true) {
    for (std::size_t a = 0; a < t; ++a) {
      std::int64_t r = system.evaluate(a, n) % P;
      key[a] = static_cast<std::uint32_t>(r < 0 ? r + P : r);
    }
    std::vector<std::uint32_t> sorted = key;
    std::sort(sorted.begin(), sorted.end());
    ++seen[sorted];
    std::size_t pos = D;
    while (pos > 0 && ++n[pos - 1] == P) n[--pos] = 0;
    if (pos == 0) break;
  }
  inc.by_element.resize(p);
  for (const auto& [tuple, c] : seen) {
    std::vector<std::uint32_t> set = tuple;
    set.erase(std::unique(set.begin(), set.end()), set.end());
    std::uint64_t mask = 0;
    if (p <= 64)
      for (auto x : set) mask |= std::uint64_t{1} << x;
    const auto g = static_cast<std::uint32_t>(inc.tuples.size());
    for (auto x : set) inc.by_element[x].push_back(g);
    inc.tuples.push_back(tuple);
    inc.mult.push_back(c);
    inc.sets.push_back(std::move(set));
    inc.masks.push_back(mask);
  }
  return inc;
}

std::uint64_t mask_count(const Incidence& inc, std::uint64_t A) {
  std::uint64_t c = 0;
  for (std::size_t g = 0; g < inc.masks.size(); ++g)
    if ((inc.masks[g] & ~A) == 0) c += inc.mult[g];
  return c;
}

std::uint64_t set_count(const Incidence& inc, const std::vector<char>& in) {
  std::uint64_t c = 0;
  for (std::size_t g = 0; g < inc.sets.size(); ++g) {
    bool all = true;
    for (auto x : inc.sets[g])
      if (!in[x]) {
        all = false;
        break;
      }
    if (all) c += inc.mult[g];
  }
  return c;
}

std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k,
                              std::uint64_t cap) {
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    r = r * (n - k + i) / i;
    if (r > cap) return cap + 1;
  }
  return static_cast<std::uint64_t>(r);
}

std::uint64_t low_bits(std::size_t k) {
  return k >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << k) - 1;
}

std::uint64_t next_combination(std::uint64_t v) {
  const std::uint64_t t = v | (v - 1);
  return (t + 1) | (((~t & -~t) - 1) >> (std::countr_zero(v) + 1));
}

DiscreteCandidate from_mask(const Incidence& inc, std::uint64_t mask,
                            std::uint64_t count) {
  DiscreteCandidate c;
  c.p = inc.p;
  c.members.assign(inc.p, 0);
  for (std::size_t x = 0; x < inc.p; ++x) c.members[x] = (mask >> x) & 1u;
  c.count = count;
  c.points = inc.points;
  c.objective = static_cast<double>(count) / static_cast<double>(inc.points);
  c.method = "exhaustive";
  c.exact = true;
  return c;
}

DiscreteCandidate from_members(const Incidence& inc, std::vector<char> in,
                               std::string method) {
  DiscreteCandidate c;
  c.p = inc.p;
  c.count = set_count(inc, in);
  c.members = std::move(in);
  c.points = inc.points;
  c.objective = static_cast<double>(c.count) / static_cast<double>(inc.points);
  c.method = std::move(method);
  return c;
}

struct Best {
  std::uint64_t count = ~std::uint64_t{0};
  std::uint64_t mask = 0;
  bool better_than(const Best& o) const {
    return count < o.count || (count == o.count && mask < o.mask);
  }
};

void check_exhaustive(std::size_t p, std::size_t k, std::uint64_t budget) {
  require(p <= 64, ErrorKind::Budget,
          "exhaustive mode supports p <= 64; use m_discrete_search");
  require(binomial_capped(p, k, budget) <= budget, ErrorKind::Budget,
          "C(" + std::to_string(p) + "," + std::to_string(k) +
              ") exceeds the subset budget " + std::to_string(budget) +
              "; use m_discrete_search");
}

Best best_of_size(const Incidence& inc, std::size_t k) {
  const std::size_t p = inc.p;
  if (k == 0) return {mask_count(inc, 0), 0};
  // Chunk i holds the k-subsets whose smallest element is i.
  std::vector<Best> parts(p - k + 1);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(p - k + 1); ++i) {
    const std::size_t w = p - i - 1;
    const std::uint64_t head = std::uint64_t{1} << i;
    Best b;
    if (k == 1) {
      b = {mask_count(inc, head), head};
    } else {
      const std::uint64_t last = low_bits(k - 1) << (w - (k - 1));
      for (std::uint64_t sub = low_bits(k - 1);;
           sub = next_combination(sub)) {
        const std::uint64_t A = head | (sub << (i + 1));
        const Best cand{mask_count(inc, A), A};
        if (cand.better_than(b)) b = cand;
        if (sub == last) break;
      }
    }
    parts[i] = b;
  }
  Best best;
  for (const auto& b : parts)
    if (b.better_than(best)) best = b;
  return best;
}

// Best-improvement swap descent on the indicator count.
struct SwapSearch {
  const Incidence& inc;
  std::vector<char> in;
  std::vector<std::uint32_t> miss;  // per group, |set \ A|
  std::uint64_t count = 0;

  SwapSearch(const Incidence& i, std::vector<char> start)
      : inc(i), in(std::move(start)), miss(i.sets.size(), 0) {
    for (std::size_t g = 0; g < inc.sets.size(); ++g) {
      for (auto x : inc.sets[g]) miss[g] += in[x] ? 0 : 1;
      if (miss[g] == 0) count += inc.mult[g];
    }
  }

  // Returns false when no swap strictly lowers the count.
  bool step() {
    const std::size_t p = inc.p;
    std::vector<std::uint64_t> loss(p, 0), gain(p, 0), both(p * p, 0);
    for (std::size_t g = 0; g < inc.sets.size(); ++g) {
      if (miss[g] == 0) {
        for (auto u : inc.sets[g]) loss[u] += inc.mult[g];
      } else if (miss[g] == 1) {
        std::uint32_t v = 0;
        for (auto x : inc.sets[g])
          if (!in[x]) v = x;
        gain[v] += inc.mult[g];
        for (auto u : inc.sets[g])
          if (in[u]) both[u * p + v] += inc.mult[g];
      }
    }
    std::int64_t best = 0;
    std::size_t bu = p, bv = p;
    for (std::size_t u = 0; u < p; ++u) {
      if (!in[u]) continue;
      for (std::size_t v = 0; v < p; ++v) {
        if (in[v]) continue;
        const std::int64_t delta = static_cast<std::int64_t>(gain[v]) -
                                   static_cast<std::int64_t>(loss[u]) -
                                   static_cast<std::int64_t>(both[u * p + v]);
        if (delta < best) {
          best = delta;
          bu = u;
          bv = v;
        }
      }
    }
    if (bu == p) return false;
    apply(bu, bv);
    return true;
  }

  void apply(std::size_t u, std::size_t v) {
    for (auto g : inc.by_element[u]) {
      if (miss[g] == 0) count -= inc.mult[g];
      ++miss[g];
    }
    in[u] = 0;
    in[v] = 1;
    for (auto g : inc.by_element[v]) {
      --miss[g];
      if (miss[g] == 0) count += inc.mult[g];
    }
  }
};

std::vector<char> interval_set(std::size_t p, std::size_t start, std::size_t k) {
  std::vector<char> in(p, 0);
  for (std::size_t i = 0; i < k; ++i) in[(start + i) % p] = 1;
  return in;
}

std::vector<char> random_set(std::size_t p, std::size_t k, std::uint64_t seed) {
  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(seed, 0);
  for (std::size_t i = 0; i < k; ++i)
    std::swap(perm[i], perm[i + rng.below(p - i)]);
  std::vector<char> in(p, 0);
  for (std::size_t i = 0; i < k; ++i) in[perm[i]] = 1;
  return in;
}

void check_alpha(double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, ErrorKind::InvalidParameter,
          "alpha must lie in [0, 1]");
}

std::string fmt_double(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    fail(ErrorKind::Parse, "bad number '" + s + "' in CSV");
  return v;
}

}  // namespace

std::size_t min_set_size(double alpha, std::size_t p) {
  check_alpha(alpha);
  const double k = std::ceil(alpha * static_cast<double>(p) - 1e-9);
  return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(p)));
}

std::size_t DiscreteCandidate::size() const {
  return static_cast<std::size_t>(std::count(members.begin(), members.end(), 1));
}

std::vector<std::int64_t> DiscreteCandidate::elements() const {
  std::vector<std::int64_t> out;
  for (std::size_t x = 0; x < members.size(); ++x)
    if (members[x]) out.push_back(static_cast<std::int64_t>(x));
  return out;
}

DiscreteCandidate m_discrete_exhaustive(const LinearFormSystem& system,
                                        std::size_t p, double alpha,
                                        std::uint64_t budget) {
  const std::size_t k0 = min_set_size(alpha, p);
  check_exhaustive(p, k0, budget);
  const Incidence inc = build_incidence(system, p);
  // The count is monotone under inclusion, so larger sizes cannot win; the
  // scan still checks the next size while it is affordable.
  Best best = best_of_size(inc, k0);
  for (std::size_t k = k0 + 1; k <= p; ++k) {
    if (binomial_capped(p, k, budget) > budget) break;
    const Best b = best_of_size(inc, k);
    if (b.count >= best.count) break;
    best = b;
  }
  return from_mask(inc, best.mask, best.count);
}

DiscreteCandidate m_discrete_search(const LinearFormSystem& system,
                                    std::size_t p, double alpha,
                                    const SearchOptions& opts) {
  require(opts.restarts >= 0 && opts.steps >= 0, ErrorKind::InvalidParameter,
          "restarts and steps must be >= 0");
  const std::size_t k = min_set_size(alpha, p);
  const Incidence inc = build_incidence(system, p);
  if (k == 0 || k == p) {
    auto c = from_members(inc, std::vector<char>(p, k == p), "exhaustive");
    c.exact = true;
    return c;
  }

  std::vector<std::vector<char>> starts;
  starts.push_back(interval_set(p, 0, k));
  starts.push_back(interval_set(p, (p - k + 1) / 2, k));
  for (int r = 0; r < opts.restarts; ++r)
    starts.push_back(random_set(p, k, derive_seed(opts.seed, r)));

  std::vector<DiscreteCandidate> results(starts.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t s = 0; s < static_cast<std::int64_t>(starts.size()); ++s) {
    SwapSearch search(inc, starts[s]);
    int moved = 0;
    while (moved < opts.steps && search.step()) ++moved;
    std::string method = s < 2 && moved == 0 ? "interval" : "local-search";
    results[s] = from_members(inc, std::move(search.in), std::move(method));
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < results.size(); ++s)
    if (results[s].count < results[best].count) best = s;
  return results[best];
}

DiscreteCandidate m_discrete_fractional(const LinearFormSystem& system,
                                        std::size_t p, double alpha, int levels,
                                        std::uint64_t budget) {
  require(levels >= 1, ErrorKind::InvalidParameter, "levels must be >= 1");
  check_alpha(alpha);
  const auto q = static_cast<std::uint64_t>(levels);
  std::uint64_t total = 1;
  for (std::size_t i = 0; i < p; ++i) {
    require(total <= budget / (q + 1), ErrorKind::Budget,
            "(levels+1)^p exceeds the fractional budget " + std::to_string(budget));
    total *= q + 1;
  }
  const Incidence inc = build_incidence(system, p);
  const double need =
      std::ceil(alpha * static_cast<double>(p * q) - 1e-9);

  const std::uint64_t chunk = 4096;
  const std::uint64_t chunks = (total + chunk - 1) / chunk;
  struct Part {
    double obj = 2.0;
    std::uint64_t idx = 0;
  };
  std::vector<Part> parts(chunks);
#pragma omp parallel
  {
    std::vector<std::uint64_t> digits(p);
    std::vector<double> f(p);
#pragma omp for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
      Part part;
      const std::uint64_t lo = static_cast<std::uint64_t>(c) * chunk;
      const std::uint64_t hi = std::min(total, lo + chunk);
      for (std::uint64_t idx = lo; idx < hi; ++idx) {
        std::uint64_t rem = idx, sum = 0;
        for (std::size_t x = 0; x < p; ++x) {
          digits[x] = rem % (q + 1);
          rem /= q + 1;
          sum += digits[x];
          f[x] = static_cast<double>(digits[x]) / static_cast<double>(q);
        }
        if (static_cast<double>(sum) < need) continue;
        double obj = 0.0;
        for (std::size_t g = 0; g < inc.tuples.size(); ++g) {
          double prod = static_cast<double>(inc.mult[g]);
          for (auto x : inc.tuples[g]) prod *= f[x];
          obj += prod;
        }
        obj /= static_cast<double>(inc.points);
        if (obj < part.obj) part = {obj, idx};
      }
      parts[c] = part;
    }
  }
  Part best;
  for (const auto& part : parts)
    if (part.obj < best.obj) best = part;
  DiscreteCandidate cand;
  cand.p = p;
  cand.points = inc.points;
  cand.objective = best.obj;
  cand.method = "fractional";
  cand.exact = true;
  cand.values.resize(p);
  cand.members.assign(p, 0);
  std::uint64_t rem = best.idx;
  for (std::size_t x = 0; x < p; ++x) {
    const auto d = rem % (q + 1);
    rem /= q + 1;
    cand.values[x] = static_cast<double>(d) / static_cast<double>(q);
    cand.members[x] = d > 0;
  }
  return cand;
}

void project_mean(std::vector<double>& values, double alpha) {
  const auto n = static_cast<double>(values.size());
  auto mean_after = [&](double shift) {
    double s = 0.0;
    for (double v : values) s += std::clamp(v + shift, 0.0, 1.0);
    return s / n;
  };
  if (mean_after(0.0) >= alpha) return;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_after(mid) >= alpha ? hi : lo) = mid;
  }
  for (double& v : values) v = std::clamp(v + hi, 0.0, 1.0);
}

TorusCandidate m_torus_search(const LinearFormSystem& system,
                              const FilteredTorusSpec& spec, double alpha,
                              std::size_t q, const AnnealOptions& opts) {
  check_alpha(alpha);
  require(q >= 2, ErrorKind::InvalidParameter, "grid needs q >= 2");
  require(opts.temperatures >= 1 && opts.proposals >= 0 && opts.sigma > 0 &&
              opts.crn_samples >= 1 && opts.samples >= 1,
          ErrorKind::InvalidParameter, "invalid annealing schedule");
  const std::size_t t = system.forms();
  const std::size_t m = spec.dim();
  const double alpha_t = std::pow(alpha, static_cast<double>(t));

  TorusCandidate constant;
  constant.f = GridFunction::constant(m, q, alpha);
  constant.mean = alpha;
  constant.objective = alpha_t;
  constant.exact = true;
  constant.method = "constant";
  if (alpha <= 0.0 || alpha >= 1.0) return constant;

  const auto model = build_model(spec, system);
  const std::size_t cells = constant.f.cells();
  require(cells <= 1'000'000, ErrorKind::Budget, "grid has too many cells");

  // Common random numbers: cell index of every slot of every fixed sample.
  const std::uint64_t S = opts.crn_samples;
  std::vector<std::uint32_t> cell(S * t);
  {
    std::vector<double> x(model.point_size());
    const std::uint64_t crn_seed = derive_seed(opts.seed, 1);
    for (std::uint64_t s = 0; s < S; ++s) {
      model.sample(crn_seed, s, x);
      for (std::size_t a = 0; a < t; ++a)
        cell[s * t + a] = static_cast<std::uint32_t>(constant.f.cell_index(
            std::span<const double>(x.data() + a * m, m)));
    }
  }
  const std::uint64_t chunk = 4096;
  const std::uint64_t chunks = (S + chunk - 1) / chunk;
  std::vector<double> partial(chunks);
  auto objective = [&](const std::vector<double>& v) {
#pragma omp parallel for schedule(static)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
      const std::uint64_t lo = static_cast<std::uint64_t>(c) * chunk;
      const std::uint64_t hi = std::min(S, lo + chunk);
      KahanSum<double> sum;
      for (std::uint64_t s = lo; s < hi; ++s) {
        double prod = 1.0;
        for (std::size_t a = 0; a < t; ++a) prod *= v[cell[s * t + a]];
        sum.add(prod);
      }
      partial[c] = sum.value();
    }
    KahanSum<double> total;
    for (double p : partial) total.add(p);
    return total.value() / static_cast<double>(S);
  };

  std::vector<double> cur(cells, alpha);
  double cur_obj = objective(cur);
  std::vector<double> best = cur;
  double best_obj = cur_obj;
  const double T0 = 0.1 * std::max(alpha_t, 1e-6);
  const double ratio =
      opts.temperatures > 1 ? std::pow(1e-3, 1.0 / (opts.temperatures - 1)) : 1.0;
  CounterRng rng(derive_seed(opts.seed, 3), 0);
  double T = T0;
  for (int level = 0; level < opts.temperatures; ++level, T *= ratio) {
    for (int prop = 0; prop < opts.proposals; ++prop) {
      std::vector<double> next = cur;
      const std::size_t u = rng.below(cells);
      next[u] = std::clamp(next[u] + opts.sigma * rng.normal(), 0.0, 1.0);
      project_mean(next, alpha);
      const double obj = objective(next);
      const double delta = obj - cur_obj;
      if (delta <= 0.0 || rng.uniform() < std::exp(-delta / T)) {
        cur.swap(next);
        cur_obj = obj;
        if (cur_obj < best_obj) {
          best = cur;
          best_obj = cur_obj;
        }
      }
    }
  }

  TorusCandidate found;
  found.f = GridFunction{m, q, {}};
  found.f.values.assign(best.begin(), best.end());
  found.mean = found.f.mean().real();
  const GridFunction& g = found.f;
  const auto fresh = mc_average(
      [&g](std::span<const double> x) { return g(x); }, model, std::nullopt,
      opts.samples, derive_seed(opts.seed, 2));
  found.objective = fresh.estimate.real();
  found.std_error = fresh.std_error;
  found.method = "anneal";
  return found.objective < alpha_t ? found : constant;
}

bool ConvergenceTable::same_results(const ConvergenceTable& other) const {
  if (rows.size() != other.rows.size()) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ConvergenceRow a = rows[i], b = other.rows[i];
    a.seconds = b.seconds = 0.0;
    if (!(a == b)) return false;
  }
  return true;
}

// Labels of file-backed systems may carry commas.
static std::string csv_safe(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  return s;
}

void write_csv(std::ostream& out, const ConvergenceTable& table) {
  out << kConvergenceHeader << '\n';
  for (const auto& r : table.rows) {
    out << r.group << ',' << fmt_double(r.alpha) << ',' << csv_safe(r.system) << ','
        << r.method << ',' << fmt_double(r.estimate) << ','
        << fmt_double(r.std_error) << ',' << (r.exact ? "true" : "false") << ','
        << r.seed << ',' << fmt_double(r.seconds) << '\n';
  }
}

ConvergenceTable read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kConvergenceHeader)
    fail(ErrorKind::Parse, "CSV header must be '" +
                               std::string(kConvergenceHeader) + "'");
  ConvergenceTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    require(f.size() == 9, ErrorKind::Parse, "CSV row needs 9 fields: " + line);
    ConvergenceRow r;
    r.group = f[0];
    r.alpha = parse_double(f[1]);
    r.system = f[2];
    r.method = f[3];
    r.estimate = parse_double(f[4]);
    r.std_error = parse_double(f[5]);
    require(f[6] == "true" || f[6] == "false", ErrorKind::Parse,
            "exact must be true or false");
    r.exact = f[6] == "true";
    auto res = std::from_chars(f[7].data(), f[7].data() + f[7].size(), r.seed);
    require(res.ec == std::errc() && res.ptr == f[7].data() + f[7].size(),
            ErrorKind::Parse, "bad seed '" + f[7] + "'");
    r.seconds = parse_double(f[8]);
    table.append(std::move(r));
  }
  return table;
}

ConvergenceTable convergence_experiment(const LinearFormSystem& system,
                                        double alpha,
                                        const std::vector<std::size_t>& primes,
                                        const FilteredTorusSpec& spec,
                                        const ConvergenceOptions& opts) {
  check_alpha(alpha);
  for (auto p : primes)
    require(is_prime(p), ErrorKind::InvalidParameter,
            std::to_string(p) + " is not prime");

  enum class Kind { Discrete, Fractional, Torus };
  struct Task {
    Kind kind;
    std::size_t p;
  };
  std::vector<Task> tasks;
  for (auto p : primes) {
    tasks.push_back({Kind::Discrete, p});
    if (opts.fractional_levels > 0) {
      std::uint64_t total = 1;
      bool fits = true;
      for (std::size_t i = 0; i < p && fits; ++i) {
        fits = total <= opts.fractional_budget /
                            (static_cast<std::uint64_t>(opts.fractional_levels) + 1);
        total *= static_cast<std::uint64_t>(opts.fractional_levels) + 1;
      }
      if (fits) tasks.push_back({Kind::Fractional, p});
    }
  }
  tasks.push_back({Kind::Torus, 0});

  std::string torus_group = "torus";
  for (int d : spec.degrees) torus_group += "_" + std::to_string(d);

  std::vector<ConvergenceRow> rows(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(tasks.size()); ++i) {
    try {
      const auto start = std::chrono::steady_clock::now();
      const Task& task = tasks[i];
      ConvergenceRow row;
      row.alpha = alpha;
      row.system = system.label();
      if (task.kind == Kind::Torus) {
        const auto c = m_torus_search(system, spec, alpha, opts.grid, opts.anneal);
        row.group = torus_group;
        row.method = c.method;
        row.estimate = c.objective;
        row.std_error = c.std_error;
        row.exact = c.exact;
        row.seed = opts.anneal.seed;
      } else {
        row.group = "Z_" + std::to_string(task.p);
        DiscreteCandidate c;
        if (task.kind == Kind::Fractional) {
          c = m_discrete_fractional(system, task.p, alpha, opts.fractional_levels,
                                    opts.fractional_budget);
        } else {
          const std::size_t k = min_set_size(alpha, task.p);
          const bool feasible =
              task.p <= 64 &&
              binomial_capped(task.p, k, opts.subset_budget) <= opts.subset_budget;
          if (feasible) {
            c = m_discrete_exhaustive(system, task.p, alpha, opts.subset_budget);
          } else {
            SearchOptions so = opts.search;
            so.seed = derive_seed(opts.search.seed, task.p);
            c = m_discrete_search(system, task.p, alpha, so);
            row.seed = so.seed;
          }
        }
        row.method = c.method;
        row.estimate = c.objective;
        row.exact = c.exact;
      }
      row.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      rows[i] = std::move(row);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  ConvergenceTable table;
  for (auto& r : rows) table.append(std::move(r));
  return table;
}

namespace serial {

DiscreteCandidate m_discrete_exhaustive(const LinearFormSystem& system,
                                        std::size_t p, double alpha,
                                        std::uint64_t budget) {
  const std::size_t k0 = min_set_size(alpha, p);
  check_exhaustive(p, k0, budget);
  const Incidence inc = build_incidence(system, p);
  auto scan = [&](std::size_t k) {
    Best best;
    if (k == 0) return Best{mask_count(inc, 0), 0};
    const std::uint64_t last = low_bits(k) << (p - k);
    for (std::uint64_t A = low_bits(k);; A = next_combination(A)) {
      const Best cand{mask_count(inc, A), A};
      if (cand.better_than(best)) best = cand;
      if (A == last) break;
    }
    return best;
  };
  Best best = scan(k0);
  for (std::size_t k = k0 + 1; k <= p; ++k) {
    if (binomial_capped(p, k, budget) > budget) break;
    const Best b = scan(k);
    if (b.count >= best.count) break;
    best = b;
  }
  return from_mask(inc, best.mask, best.count);
}

}  // namespace serial

}  // namespace linforms
