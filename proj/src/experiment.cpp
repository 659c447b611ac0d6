#include "linforms/experiment.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "linforms/cyclic.hpp"
#include "linforms/equid.hpp"
#include "linforms/extremal.hpp"
#include "linforms/lattice.hpp"
#include "linforms/linsys.hpp"
#include "linforms/torus.hpp"

namespace linforms {

using nlohmann::json;

namespace {

using P = ParamType;

const std::map<std::string, std::vector<ParamSpec>>& schemas() {
  static const std::map<std::string, std::vector<ParamSpec>> s = {
      {"leibman",
       {{"system", P::String, nullptr},
        {"degree", P::Integer, 1},
        {"complement", P::Boolean, false}}},
      {"complexity", {{"system", P::String, nullptr}, {"s_max", P::Integer, 4}}},
      {"sol-discrete",
       {{"N", P::Integer, nullptr},
        {"system", P::String, nullptr},
        {"f", P::String, nullptr},
        {"pattern", P::String, ""}}},
      {"sol-torus",
       {{"spec", P::String, nullptr},
        {"system", P::String, nullptr},
        {"f", P::String, nullptr},
        {"samples", P::Integer, 1'000'000},
        {"pattern", P::String, ""}}},
      {"gowers",
       {{"N", P::Integer, nullptr},
        {"d", P::Integer, nullptr},
        {"f", P::String, nullptr}}},
      {"min-k",
       {{"d", P::Integer, nullptr},
        {"system", P::String, nullptr},
        {"chi", P::String, nullptr},
        {"domain_degree", P::Integer, 2},
        {"target_degree", P::Integer, 2}}},
      {"balance",
       {{"mode", P::String, nullptr},
        {"system", P::String, nullptr},
        {"freq", P::Integer, 2},
        {"d", P::Integer, 2},
        {"k", P::Integer, 1},
        {"domain_degree", P::Integer, 2},
        {"target_degree", P::Integer, 2},
        {"p", P::Integer, 0},
        {"spec", P::String, ""},
        {"coeffs", P::String, ""}}},
      {"m-discrete",
       {{"system", P::String, nullptr},
        {"p", P::Integer, nullptr},
        {"alpha", P::Number, nullptr},
        {"method", P::String, "auto"},
        {"restarts", P::Integer, 10},
        {"steps", P::Integer, 1000},
        {"levels", P::Integer, 2}}},
      {"m-torus",
       {{"system", P::String, nullptr},
        {"spec", P::String, "1"},
        {"alpha", P::Number, nullptr},
        {"q", P::Integer, 32},
        {"samples", P::Integer, 100'000},
        {"crn_samples", P::Integer, 20'000},
        {"temperatures", P::Integer, 40},
        {"proposals", P::Integer, 200},
        {"sigma", P::Number, 0.2}}},
      {"converge",
       {{"system", P::String, nullptr},
        {"alpha", P::Number, nullptr},
        {"primes", P::String, "5,11,41"},
        {"spec", P::String, "1"},
        {"q", P::Integer, 32},
        {"samples", P::Integer, 100'000},
        {"crn_samples", P::Integer, 20'000},
        {"restarts", P::Integer, 10},
        {"steps", P::Integer, 1000},
        {"levels", P::Integer, 2}}},
      {"counterexamples", {{"p", P::Integer, 13}}},
  };
  return s;
}

const ParamSpec& param_spec(const std::string& command, const std::string& key) {
  for (const auto& ps : command_schema(command))
    if (ps.key == key) return ps;
  fail(ErrorKind::InvalidParameter,
       "unknown parameter '" + key + "' for command " + command);
}

bool type_ok(const json& v, ParamType type) {
  switch (type) {
    case P::Integer: return v.is_number_integer();
    case P::Number: return v.is_number();
    case P::Boolean: return v.is_boolean();
    case P::String: return v.is_string();
  }
  return false;
}

double parse_number(const std::string& text) {
  try {
    const auto slash = text.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    }
    const std::string a = text.substr(0, slash), b = text.substr(slash + 1);
    const double num = std::stod(a, &used);
    if (used != a.size()) throw std::invalid_argument(text);
    const double den = std::stod(b, &used);
    if (used != b.size() || den == 0) throw std::invalid_argument(text);
    return num / den;
  } catch (const std::exception&) {
    fail(ErrorKind::Parse, "bad number '" + text + "'");
  }
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::vector<std::int64_t> out;
  std::string cleaned = text;
  for (char& c : cleaned)
    if (c == ';') c = ',';
  std::stringstream ss(cleaned);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const auto first = item.find_first_not_of(' ');
      if (first == std::string::npos) throw std::invalid_argument(item);
      item = item.substr(first);
      out.push_back(std::stoll(item, &used));
      while (used < item.size() && item[used] == ' ') ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(ErrorKind::Parse, "bad integer '" + item + "' in '" + text + "'");
    }
  }
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

json int_rows(const IntegerLattice& lat) {
  json rows = json::array();
  for (const auto& r : lat.basis()) {
    json row = json::array();
    for (const auto& x : r) {
      if (x.fits_slong_p())
        row.push_back(x.get_si());
      else
        row.push_back(x.get_str());
    }
    rows.push_back(row);
  }
  return rows;
}

std::string vec_text(const IntVector& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + v[k].get_str();
  return s;
}

std::string chi_text(const TupleCharacter& chi) {
  std::string s;
  for (std::size_t a = 0; a < chi.t; ++a) {
    if (a) s += ";";
    for (std::size_t j = 0; j < chi.m; ++j)
      s += (j ? "," : "") + std::to_string(chi.at(a, j));
  }
  return s;
}

std::uint64_t budget_or(const ExperimentConfig& cfg, std::uint64_t fallback) {
  return cfg.budget.value_or(fallback);
}

std::optional<ConjugationPattern> pattern_param(const json& params,
                                                std::size_t t) {
  const std::string text = params.at("pattern");
  if (text.empty()) return std::nullopt;
  return parse_pattern(text, t);
}

std::uint64_t positive(const json& params, const char* key) {
  const auto v = params.at(key).get<std::int64_t>();
  require(v >= 1, ErrorKind::InvalidParameter, std::string(key) + " must be >= 1");
  return static_cast<std::uint64_t>(v);
}

struct Output {
  json payload;
  Table table;
  int exit_code = 0;
};

Table convergence_rows(const ConvergenceTable& t) {
  std::ostringstream os;
  write_csv(os, t);
  Table table;
  std::istringstream is(os.str());
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (first)
      table.header = f;
    else
      table.rows.push_back(f);
    first = false;
  }
  return table;
}

json convergence_json(const ConvergenceTable& t) {
  json rows = json::array();
  for (const auto& r : t.rows)
    rows.push_back({{"group", r.group},
                    {"alpha", r.alpha},
                    {"system", r.system},
                    {"method", r.method},
                    {"estimate", r.estimate},
                    {"stderr", r.std_error},
                    {"exact", r.exact},
                    {"seed", r.seed},
                    {"seconds", r.seconds}});
  return rows;
}

std::string csv_label(const LinearFormSystem& s) {
  std::string l = s.label();
  for (char& c : l)
    if (c == ',') c = ';';
  return l;
}

Output cmd_leibman(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto system = parse_system_spec(p.at("system"));
  const auto degree = positive(p, "degree");
  const auto lat = leibman_lattice(system, static_cast<unsigned>(degree));
  Output out;
  out.payload = {{"system", system.label()},
                 {"degree", degree},
                 {"rank", lat.rank()},
                 {"basis", int_rows(lat)}};
  out.table.header = {"lattice", "rank", "row", "vector"};
  for (std::size_t i = 0; i < lat.rank(); ++i)
    out.table.rows.push_back({"leibman", std::to_string(lat.rank()),
                              std::to_string(i), vec_text(lat.basis()[i])});
  if (p.at("complement").get<bool>()) {
    const auto comp = orthogonal_complement(lat);
    out.payload["complement"] = {{"rank", comp.rank()}, {"basis", int_rows(comp)}};
    for (std::size_t i = 0; i < comp.rank(); ++i)
      out.table.rows.push_back({"complement", std::to_string(comp.rank()),
                                std::to_string(i), vec_text(comp.basis()[i])});
  }
  return out;
}

Output cmd_complexity(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto system = parse_system_spec(p.at("system"));
  const int s_max = p.at("s_max").get<int>();
  const auto c = complexity(system, s_max);
  Output out;
  out.payload = {{"system", system.label()},
                 {"s_max", s_max},
                 {"size", size(system)},
                 {"complexity", c ? json(*c) : json("exceeds s_max")}};
  out.table.header = {"system", "size", "complexity"};
  out.table.rows.push_back({csv_label(system), std::to_string(size(system)),
                            c ? std::to_string(*c) : "exceeds s_max"});
  return out;
}

Output cmd_sol_discrete(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto N = positive(p, "N");
  const auto system = parse_system_spec(p.at("system"));
  const auto f = parse_cyclic_function(p.at("f"), N);
  const auto pattern = pattern_param(p, system.forms());
  const Complex v = sol_discrete(f, system, pattern, budget_or(cfg, kDefaultEvalBudget));
  Output out;
  out.payload = {{"N", N},
                 {"system", system.label()},
                 {"f", p.at("f")},
                 {"pattern", p.at("pattern")},
                 {"re", v.real()},
                 {"im", v.imag()}};
  out.table.header = {"N", "system", "f", "pattern", "re", "im"};
  out.table.rows.push_back({std::to_string(N), csv_label(system), p.at("f"),
                            p.at("pattern"), fmt(v.real()), fmt(v.imag())});
  return out;
}

struct TorusInput {
  std::optional<TrigPolynomial> trig;
  TorusFunction fn;
};

TorusInput parse_torus_input(const std::string& spec, std::size_t m) {
  TorusInput in;
  auto load = [&](const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::Parse, "cannot open " + path);
    return f;
  };
  if (spec == "expr:cos1") {
    // (1 + cos 2 pi x_1) / 2
    TrigPolynomial t{m, {}};
    std::vector<std::int64_t> z(m, 0), e = z, me = z;
    e[0] = 1;
    me[0] = -1;
    t.terms = {{z, 0.5}, {e, 0.25}, {me, 0.25}};
    in.trig = t;
  } else if (spec.rfind("const:", 0) == 0) {
    in.trig = TrigPolynomial{m, {{std::vector<std::int64_t>(m, 0),
                                  parse_number(spec.substr(6))}}};
  } else if (spec.rfind("trig:@", 0) == 0) {
    auto f = load(spec.substr(6));
    in.trig = read_trig(f);
  } else if (spec.rfind("grid:@", 0) == 0) {
    auto f = load(spec.substr(6));
    GridFunction g = read_grid(f);
    require(g.m == m, ErrorKind::Dimension, "grid dimension does not match spec");
    in.fn = [g](std::span<const double> x) { return g(x); };
    return in;
  } else {
    fail(ErrorKind::Parse, "unknown torus function '" + spec + "'");
  }
  require(in.trig->m == m, ErrorKind::Dimension,
          "trig polynomial dimension does not match spec");
  TrigPolynomial copy = *in.trig;
  in.fn = [copy](std::span<const double> x) { return copy(x); };
  return in;
}

Output cmd_sol_torus(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto spec = parse_torus_spec(p.at("spec"));
  const auto system = parse_system_spec(p.at("system"));
  const auto model = build_model(spec, system);
  const auto pattern = pattern_param(p, system.forms());
  const auto in = parse_torus_input(p.at("f"), spec.dim());
  const auto samples = positive(p, "samples");
  const auto mc = mc_average(in.fn, model, pattern, samples, cfg.seed);
  Output out;
  out.payload = {{"spec", spec.to_string()},
                 {"system", system.label()},
                 {"f", p.at("f")},
                 {"dimension", model.dimension()},
                 {"samples", samples},
                 {"estimate", {{"re", mc.estimate.real()}, {"im", mc.estimate.imag()}}},
                 {"stderr", mc.std_error}};
  std::string exact_re, exact_im;
  if (in.trig) {
    const Complex ex = exact_trig_average(*in.trig, model, pattern,
                                          budget_or(cfg, kDefaultTermBudget));
    out.payload["exact"] = {{"re", ex.real()}, {"im", ex.imag()}};
    exact_re = fmt(ex.real());
    exact_im = fmt(ex.imag());
  }
  out.table.header = {"spec", "system", "f", "samples", "estimate_re",
                      "estimate_im", "stderr", "exact_re", "exact_im"};
  std::string spec_text = spec.to_string();
  for (char& c : spec_text)
    if (c == ',') c = ';';
  out.table.rows.push_back({spec_text, csv_label(system), p.at("f"),
                            std::to_string(samples), fmt(mc.estimate.real()),
                            fmt(mc.estimate.imag()), fmt(mc.std_error), exact_re,
                            exact_im});
  return out;
}

Output cmd_gowers(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto N = positive(p, "N");
  const int d = p.at("d").get<int>();
  const auto f = parse_cyclic_function(p.at("f"), N);
  const double v = gowers_norm_pow(f, d);
  Output out;
  out.payload = {{"N", N}, {"d", d}, {"f", p.at("f")}, {"value", v}};
  out.table.header = {"N", "d", "f", "value"};
  out.table.rows.push_back({std::to_string(N), std::to_string(d), p.at("f"), fmt(v)});
  return out;
}

TupleCharacter parse_chi(const std::string& text, std::size_t t, std::size_t d) {
  const auto entries = parse_int_list(text);
  require(entries.size() == t * d, ErrorKind::Dimension,
          "chi needs t*d = " + std::to_string(t * d) + " entries, got " +
              std::to_string(entries.size()));
  TupleCharacter chi = TupleCharacter::zero(t, d);
  chi.freq = entries;
  return chi;
}

Output cmd_min_k(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto d = positive(p, "d");
  const auto system = parse_system_spec(p.at("system"));
  const auto chi = parse_chi(p.at("chi"), system.forms(), d);
  const int dom = p.at("domain_degree").get<int>();
  const int tgt = p.at("target_degree").get<int>();
  const auto k0 = min_k_threshold(chi, system, dom, tgt);
  Output out;
  out.payload = {{"system", system.label()},
                 {"d", d},
                 {"chi", chi_text(chi)},
                 {"domain_degree", dom},
                 {"target_degree", tgt},
                 {"threshold", k0 ? json(*k0) : json("never-vanishes")}};
  out.table.header = {"system", "d", "chi", "domain_degree", "target_degree",
                      "threshold"};
  out.table.rows.push_back({csv_label(system), std::to_string(d), chi_text(chi),
                            std::to_string(dom), std::to_string(tgt),
                            k0 ? std::to_string(*k0) : "never-vanishes"});
  return out;
}

Output cmd_balance(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const std::string mode = p.at("mode");
  const auto system = parse_system_spec(p.at("system"));
  const int freq = static_cast<int>(positive(p, "freq"));
  Output out;
  if (mode == "phi-k") {
    const auto map = PhiKMap::make(p.at("k").get<std::int64_t>(), p.at("d").get<int>());
    const int dom = p.at("domain_degree").get<int>();
    const int tgt = p.at("target_degree").get<int>();
    const auto rep = phi_k_balance_report(map, system, dom, freq, tgt,
                                          budget_or(cfg, kDefaultCharacterBudget));
    json violated = json::array();
    for (std::size_t i = 0; i < rep.violated.size() && i < 1000; ++i)
      violated.push_back(chi_text(
          character_from_index(system.forms(), map.d, freq, rep.violated[i])));
    out.payload = {{"mode", mode},
                   {"system", system.label()},
                   {"k", map.k},
                   {"d", map.d},
                   {"domain_degree", dom},
                   {"target_degree", tgt},
                   {"freq", freq},
                   {"characters", rep.characters},
                   {"trivial_on_target", rep.trivial_on_target},
                   {"vanishing", rep.vanishing},
                   {"violated_count", rep.violated.size()},
                   {"violated", violated},
                   {"max_discrepancy", rep.max_discrepancy}};
    out.table.header = {"system", "k", "d", "freq", "characters", "trivial",
                        "vanishing", "violated", "max_discrepancy"};
    out.table.rows.push_back(
        {csv_label(system), std::to_string(map.k), std::to_string(map.d),
         std::to_string(freq), std::to_string(rep.characters),
         std::to_string(rep.trivial_on_target), std::to_string(rep.vanishing),
         std::to_string(rep.violated.size()), fmt(rep.max_discrepancy)});
    return out;
  }
  if (mode == "orbit") {
    const auto prime = p.at("p").get<std::int64_t>();
    require(prime >= 1, ErrorKind::InvalidParameter, "orbit mode needs --p");
    require(!p.at("spec").get<std::string>().empty() &&
                !p.at("coeffs").get<std::string>().empty(),
            ErrorKind::InvalidParameter, "orbit mode needs --spec and --coeffs");
    const auto spec = parse_torus_spec(p.at("spec"));
    const auto orbit = parse_orbit(prime, p.at("coeffs"));
    const auto cert = verify_consistency(orbit);
    out.payload = {{"mode", mode},
                   {"system", system.label()},
                   {"p", prime},
                   {"spec", spec.to_string()},
                   {"freq", freq},
                   {"consistent", cert.consistent},
                   {"certificate", cert.detail}};
    require(cert.consistent, ErrorKind::Precondition,
            "orbit is not p-periodic: " + cert.detail);
    const auto rep = weyl_balance_test(orbit, spec, system, freq,
                                       budget_or(cfg, kDefaultEvalBudget));
    out.payload["characters"] = rep.characters;
    out.payload["nontrivial"] = rep.nontrivial;
    out.payload["max_abs"] = rep.max_abs;
    out.payload["argmax"] = rep.argmax ? json(chi_text(*rep.argmax)) : json(nullptr);
    out.payload["truncation_rate"] = rep.truncation_rate;
    out.table.header = {"p", "system", "freq", "characters", "nontrivial",
                        "max_abs", "argmax", "truncation_rate"};
    out.table.rows.push_back({std::to_string(prime), csv_label(system),
                              std::to_string(freq), std::to_string(rep.characters),
                              std::to_string(rep.nontrivial), fmt(rep.max_abs),
                              rep.argmax ? chi_text(*rep.argmax) : "",
                              fmt(rep.truncation_rate)});
    return out;
  }
  fail(ErrorKind::InvalidParameter, "balance mode must be phi-k or orbit");
}

Output cmd_m_discrete(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto system = parse_system_spec(p.at("system"));
  const auto prime = positive(p, "p");
  const double alpha = p.at("alpha");
  const std::string method = p.at("method");
  const std::uint64_t budget = budget_or(cfg, kDefaultSubsetBudget);
  const auto start = std::chrono::steady_clock::now();
  DiscreteCandidate c;
  if (method == "exhaustive") {
    c = m_discrete_exhaustive(system, prime, alpha, budget);
  } else if (method == "search" || method == "auto") {
    const auto k = min_set_size(alpha, prime);
    bool exhaustive = false;
    if (method == "auto" && prime <= 64) {
      // Exhaustive when affordable.
      double comb = 1.0;
      for (std::size_t i = 1; i <= std::min(k, prime - k); ++i)
        comb = comb * static_cast<double>(prime - std::min(k, prime - k) + i) / i;
      exhaustive = comb <= static_cast<double>(budget);
    }
    if (exhaustive) {
      c = m_discrete_exhaustive(system, prime, alpha, budget);
    } else {
      SearchOptions so;
      so.restarts = p.at("restarts");
      so.steps = p.at("steps");
      so.seed = cfg.seed;
      c = m_discrete_search(system, prime, alpha, so);
    }
  } else if (method == "fractional") {
    c = m_discrete_fractional(system, prime, alpha, p.at("levels").get<int>(),
                              cfg.budget.value_or(200'000));
  } else {
    fail(ErrorKind::InvalidParameter,
         "method must be auto, exhaustive, search or fractional");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ConvergenceTable t;
  t.append({"Z_" + std::to_string(prime), alpha, csv_label(system), c.method,
            c.objective, 0.0, c.exact, cfg.seed, secs});
  Output out;
  out.payload = {{"p", prime},
                 {"alpha", alpha},
                 {"system", system.label()},
                 {"method", c.method},
                 {"objective", c.objective},
                 {"exact", c.exact},
                 {"upper_bound", !c.exact},
                 {"set", c.elements()},
                 {"rows", convergence_json(t)}};
  if (c.method == "fractional")
    out.payload["values"] = c.values;
  else
    out.payload["count"] = c.count, out.payload["points"] = c.points;
  out.table = convergence_rows(t);
  return out;
}

AnnealOptions anneal_options(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  AnnealOptions a;
  a.samples = positive(p, "samples");
  a.crn_samples = positive(p, "crn_samples");
  a.seed = cfg.seed;
  if (p.contains("temperatures")) a.temperatures = p.at("temperatures");
  if (p.contains("proposals")) a.proposals = p.at("proposals");
  if (p.contains("sigma")) a.sigma = p.at("sigma");
  return a;
}

Output cmd_m_torus(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto system = parse_system_spec(p.at("system"));
  const auto spec = parse_torus_spec(p.at("spec"));
  const double alpha = p.at("alpha");
  const auto q = positive(p, "q");
  const auto start = std::chrono::steady_clock::now();
  const auto c = m_torus_search(system, spec, alpha, q, anneal_options(cfg));
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::string group = "torus";
  for (int d : spec.degrees) group += "_" + std::to_string(d);
  ConvergenceTable t;
  t.append({group, alpha, csv_label(system), c.method, c.objective, c.std_error,
            c.exact, cfg.seed, secs});
  json values = json::array();
  for (const auto& v : c.f.values) values.push_back(v.real());
  Output out;
  out.payload = {{"spec", spec.to_string()},
                 {"alpha", alpha},
                 {"system", system.label()},
                 {"method", c.method},
                 {"objective", c.objective},
                 {"stderr", c.std_error},
                 {"exact", c.exact},
                 {"upper_bound", true},
                 {"mean", c.mean},
                 {"q", q},
                 {"grid", values},
                 {"rows", convergence_json(t)}};
  out.table = convergence_rows(t);
  return out;
}

Output cmd_converge(const ExperimentConfig& cfg) {
  const auto& p = cfg.params;
  const auto system = parse_system_spec(p.at("system"));
  const auto spec = parse_torus_spec(p.at("spec"));
  const double alpha = p.at("alpha");
  std::vector<std::size_t> primes;
  for (auto v : parse_int_list(p.at("primes"))) {
    require(v >= 2, ErrorKind::InvalidParameter, "primes must be >= 2");
    primes.push_back(static_cast<std::size_t>(v));
  }
  ConvergenceOptions opts;
  opts.subset_budget = budget_or(cfg, kDefaultSubsetBudget);
  opts.fractional_levels = p.at("levels");
  opts.search.restarts = p.at("restarts");
  opts.search.steps = p.at("steps");
  opts.search.seed = cfg.seed;
  opts.anneal = anneal_options(cfg);
  opts.grid = positive(p, "q");
  const auto table = convergence_experiment(system, alpha, primes, spec, opts);
  Output out;
  out.payload = {{"system", system.label()},
                 {"alpha", alpha},
                 {"spec", spec.to_string()},
                 {"rows", convergence_json(table)}};
  out.table = convergence_rows(table);
  return out;
}

Output cmd_counterexamples(const ExperimentConfig& cfg) {
  const auto p = positive(cfg.params, "p");
  const auto rows = counterexample_suite(p);
  Output out;
  out.payload = json::array();
  out.table.header = {"check", "expected", "observed", "status", "note"};
  for (const auto& r : rows) {
    out.payload.push_back({{"check", r.check},
                           {"expected", r.expected},
                           {"observed", r.observed},
                           {"status", r.status},
                           {"note", r.note}});
    out.table.rows.push_back({r.check, r.expected, r.observed, r.status, r.note});
    if (r.status == "FAIL") out.exit_code = 4;
  }
  return out;
}

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

json ExperimentConfig::to_json() const {
  json j = {{"command", command},
            {"params", params},
            {"seed", seed},
            {"format", format},
            {"out", out},
            {"threads", threads}};
  j["budget"] = budget ? json(*budget) : json(nullptr);
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  require(j.is_object(), ErrorKind::Parse, "config must be a JSON object");
  static const std::vector<std::string> known = {"command", "params", "seed",
                                                 "format",  "out",    "threads",
                                                 "budget"};
  for (const auto& [key, _] : j.items())
    require(std::find(known.begin(), known.end(), key) != known.end(),
            ErrorKind::Parse, "unknown config key '" + key + "'");
  ExperimentConfig c;
  try {
    c.command = j.at("command").get<std::string>();
    if (j.contains("params")) c.params = j.at("params");
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("format")) c.format = j.at("format").get<std::string>();
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
    if (j.contains("threads")) c.threads = j.at("threads").get<int>();
    if (j.contains("budget") && !j.at("budget").is_null())
      c.budget = j.at("budget").get<std::uint64_t>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("config: ") + e.what());
  }
  require(c.params.is_object(), ErrorKind::Parse, "params must be an object");
  return c;
}

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ExperimentConfig::hash() const {
  json j = {{"command", command}, {"params", params}, {"seed", seed}};
  j["budget"] = budget ? json(*budget) : json(nullptr);
  return fnv1a_hex(j.dump());
}

const std::vector<ParamSpec>& command_schema(const std::string& command) {
  const auto it = schemas().find(command);
  if (it == schemas().end())
    fail(ErrorKind::InvalidParameter, "unknown command '" + command + "'");
  return it->second;
}

std::vector<std::string> command_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : schemas()) out.push_back(name);
  return out;
}

json convert_param(const std::string& command, const std::string& key,
                   const std::string& text) {
  const ParamSpec& ps = param_spec(command, key);
  switch (ps.type) {
    case P::Integer:
      try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
      } catch (const std::exception&) {
        fail(ErrorKind::Parse, "--" + key + " expects an integer, got '" + text + "'");
      }
    case P::Number: return parse_number(text);
    case P::Boolean:
      if (text == "true" || text == "1" || text.empty()) return true;
      if (text == "false" || text == "0") return false;
      fail(ErrorKind::Parse, "--" + key + " expects a boolean");
    case P::String: return text;
  }
  return nullptr;
}

json normalize_params(const std::string& command, const json& params) {
  require(params.is_object(), ErrorKind::Parse, "params must be an object");
  const auto& schema = command_schema(command);
  for (const auto& [key, value] : params.items()) {
    const ParamSpec& ps = param_spec(command, key);
    require(type_ok(value, ps.type), ErrorKind::Parse,
            "parameter '" + key + "' has the wrong type");
  }
  json out = json::object();
  for (const auto& ps : schema) {
    if (params.contains(ps.key)) {
      out[ps.key] = params.at(ps.key);
    } else {
      require(!ps.fallback.is_null(), ErrorKind::InvalidParameter,
              command + " needs --" + ps.key);
      out[ps.key] = ps.fallback;
    }
  }
  return out;
}

std::string Table::to_csv() const {
  std::string s;
  auto line = [&](const std::vector<std::string>& f) {
    for (std::size_t i = 0; i < f.size(); ++i) s += (i ? "," : "") + csv_field(f[i]);
    s += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return s;
}

std::string ResultRecord::render() const {
  if (config.format == "csv") return table.to_csv();
  return payload.dump(2) + "\n";
}

json ResultRecord::meta() const {
  return {{"config", config.to_json()},
          {"config_hash", config_hash},
          {"timestamp", timestamp},
          {"version", version},
          {"seconds", seconds},
          {"exit_code", exit_code}};
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Budget: return 3;
    case ErrorKind::Numeric: return 4;
    default: return 2;
  }
}

ResultRecord run(const ExperimentConfig& config) {
  require(config.format == "json" || config.format == "csv",
          ErrorKind::InvalidParameter, "--format must be csv or json");
  require(config.threads >= 0, ErrorKind::InvalidParameter,
          "--threads must be >= 0");
  if (config.threads > 0) omp_set_num_threads(config.threads);

  ResultRecord rec;
  rec.config = config;
  rec.config.params = normalize_params(config.command, config.params);
  rec.config_hash = rec.config.hash();
  rec.timestamp = utc_now();

  using Handler = Output (*)(const ExperimentConfig&);
  static const std::map<std::string, Handler> handlers = {
      {"leibman", cmd_leibman},           {"complexity", cmd_complexity},
      {"sol-discrete", cmd_sol_discrete}, {"sol-torus", cmd_sol_torus},
      {"gowers", cmd_gowers},             {"min-k", cmd_min_k},
      {"balance", cmd_balance},           {"m-discrete", cmd_m_discrete},
      {"m-torus", cmd_m_torus},           {"converge", cmd_converge},
      {"counterexamples", cmd_counterexamples},
  };
  const auto start = std::chrono::steady_clock::now();
  Output out = handlers.at(rec.config.command)(rec.config);
  rec.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  rec.payload = std::move(out.payload);
  rec.table = std::move(out.table);
  rec.exit_code = out.exit_code;
  return rec;
}

std::vector<CheckRow> counterexample_suite(std::uint64_t p) {
  std::vector<CheckRow> rows;
  auto near = [](double a, double b, double tol) { return std::abs(a - b) <= tol; };
  auto status = [](bool ok) { return std::string(ok ? "PASS" : "FAIL"); };

  // Quadratic phase: extremal for U^3, small for U^2.
  if (p % 2 == 0 || !is_prime(p)) {
    const std::string why = "p must be an odd prime for the Gauss-sum identity";
    rows.push_back({"quadphase U3 power", "1", "", "SKIP", why});
    rows.push_back({"quadphase U2 power", "1/p", "", "SKIP", why});
  } else {
    const auto f = quadratic_phase(p);
    const double u3 = gowers_norm_pow(f, 3);
    const double u2 = gowers_norm_pow(f, 2);
    const double inv = 1.0 / static_cast<double>(p);
    rows.push_back({"quadphase U3 power p=" + std::to_string(p), "1", fmt(u3),
                    status(near(u3, 1.0, 1e-9)), "tolerance 1e-9"});
    rows.push_back({"quadphase U2 power p=" + std::to_string(p),
                    "1/" + std::to_string(p), fmt(u2), status(near(u2, inv, 1e-9)),
                    "tolerance 1e-9"});
  }

  // Sumfree interval: no Schur triples, yet density about 1/3.
  const auto schur = make_schur_system();
  const auto trivial = make_trivial_system();
  for (std::uint64_t q : {7, 101}) {
    const auto f = sumfree_interval(q);
    const Complex s = sol_discrete(f, schur);
    const Complex dens = sol_discrete(f, trivial);
    std::size_t members = 0;
    for (const auto& v : f.values) members += v.real() > 0.5;
    const double expect = static_cast<double>(members) / static_cast<double>(q);
    rows.push_back({"sumfree schur average p=" + std::to_string(q), "0",
                    fmt(std::abs(s)), status(s == Complex(0.0)), "exact"});
    rows.push_back({"sumfree density p=" + std::to_string(q),
                    std::to_string(members) + "/" + std::to_string(q),
                    fmt(dens.real()), status(near(dens.real(), expect, 1e-12)),
                    "trivial-form average"});
  }

  // Dimension obstructions, exact integers.
  const auto cube2 = make_cube_system(2);
  const auto r1 = leibman_lattice(cube2, 1).rank();
  const auto r2 = leibman_lattice(cube2, 2).rank();
  const auto rs = leibman_lattice(schur, 2).rank();
  rows.push_back({"cube:2 rank degree 1", "3", std::to_string(r1), status(r1 == 3), ""});
  rows.push_back({"cube:2 rank degree 2", "4", std::to_string(r2), status(r2 == 4), ""});
  rows.push_back({"schur rank degree 2", "3", std::to_string(rs), status(rs == 3), ""});

  // On a full-dimensional model the average factors as (mean f)^3.
  const auto model = build_model(FilteredTorusSpec::make({2}), schur);
  const TrigPolynomial f{1, {{{0}, 0.5}, {{1}, 0.25}, {{-1}, 0.25}}};
  const Complex v = exact_trig_average(f, model);
  rows.push_back({"schur product formula", "1/8", fmt(v.real()),
                  status(near(v.real(), 0.125, 1e-12) && near(v.imag(), 0, 1e-12)),
                  "f = (1 + cos 2 pi x)/2"});
  return rows;
}

void write_outputs(const ResultRecord& record) {
  const std::string& path = record.config.out;
  require(!path.empty(), ErrorKind::InvalidParameter, "no output path");
  {
    std::ofstream f(path);
    if (!f) fail(ErrorKind::InvalidParameter, "cannot write " + path);
    f << record.render();
  }
  std::ofstream m(path + ".meta.json");
  if (!m) fail(ErrorKind::InvalidParameter, "cannot write " + path + ".meta.json");
  m << record.meta().dump(2) << '\n';
}

}  // namespace linforms
