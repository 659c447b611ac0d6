#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "linforms/error.hpp"
#include "linforms/experiment.hpp"

namespace {

using linforms::ErrorKind;
using linforms::ExperimentConfig;
using nlohmann::json;

std::string flag_name(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), '_', '-');
  return "--" + s;
}

const std::map<std::string, std::string> kHelp = {
    {"leibman", "HNF basis of the degree-i Leibman lattice"},
    {"complexity", "true complexity by exact rank tests"},
    {"sol-discrete", "exact average over Z_N^D"},
    {"sol-torus", "Haar average over the Leibman subtorus"},
    {"gowers", "Gowers norm power ||f||_{U^d}^{2^d} on Z_N"},
    {"min-k", "smallest k after which a character vanishes on the phi_k image"},
    {"balance", "balance reports for phi_k maps and polynomial orbits"},
    {"m-discrete", "minimum average over subsets of Z_p of density alpha"},
    {"m-torus", "upper bound on the torus minimum by annealing"},
    {"converge", "discrete and torus minima side by side"},
    {"counterexamples", "pass/fail table of the counterexample checks"},
};

// Per command: CLI text for every schema key the user supplied.
struct Collected {
  std::map<std::string, std::string> text;
  std::map<std::string, bool> flags;
};

void add_params(CLI::App* sub, const std::string& command, Collected& c,
                const std::vector<std::string>& skip = {}) {
  for (const auto& ps : linforms::command_schema(command)) {
    if (std::find(skip.begin(), skip.end(), ps.key) != skip.end()) continue;
    const std::string name = flag_name(ps.key);
    std::string desc = ps.fallback.is_null() ? "required"
                                             : "default " + ps.fallback.dump();
    if (ps.type == linforms::ParamType::Boolean)
      sub->add_flag(name, c.flags[ps.key], desc);
    else
      sub->add_option(name, c.text[ps.key], desc);
  }
}

json gather(CLI::App* sub, const std::string& command, const Collected& c) {
  json params = json::object();
  for (const auto& ps : linforms::command_schema(command)) {
    const std::string name = flag_name(ps.key);
    CLI::Option* opt = nullptr;
    try {
      opt = sub->get_option(name);
    } catch (const CLI::OptionNotFound&) {
      continue;
    }
    if (opt->count() == 0) continue;
    if (ps.type == linforms::ParamType::Boolean)
      params[ps.key] = c.flags.at(ps.key);
    else
      params[ps.key] = linforms::convert_param(command, ps.key, c.text.at(ps.key));
  }
  return params;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) linforms::fail(ErrorKind::Parse, "cannot open config " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    linforms::fail(ErrorKind::Parse, std::string("config: ") + e.what());
  }
  // A sidecar .meta.json replays its embedded config.
  if (j.is_object() && j.contains("config") && j.contains("config_hash"))
    j = j.at("config");
  return ExperimentConfig::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear-form averages on cyclic groups and filtered tori"};
  app.set_version_flag("--version", linforms::kVersion);
  app.require_subcommand(0, 1);

  std::uint64_t seed = 1;
  int threads = 0;
  std::uint64_t budget = 0;
  std::string out, format = "json", config_path;
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();
  app.add_option("--threads", threads, "OpenMP threads, 0 for the default");
  app.add_option("--budget", budget, "work budget for the main kernel");
  app.add_option("--out", out, "output file; a .meta.json sidecar is written next to it");
  app.add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--config", config_path, "replay a JSON config or .meta.json record");

  std::map<std::string, Collected> collected;
  std::map<std::string, CLI::App*> subs;
  for (const auto& name : linforms::command_names()) {
    auto* sub = app.add_subcommand(name, kHelp.at(name));
    sub->fallthrough();  // global flags may follow the subcommand
    subs[name] = sub;
    if (name == "balance") {
      sub->require_subcommand(1);
      for (const std::string mode : {"phi-k", "orbit"}) {
        auto* leaf = sub->add_subcommand(mode, "balance report in " + mode + " mode");
        leaf->fallthrough();
        subs["balance:" + mode] = leaf;
        add_params(leaf, name, collected["balance:" + mode], {"mode"});
      }
    } else {
      add_params(sub, name, collected[name]);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ExperimentConfig cfg;
  try {
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else {
      std::string key;
      for (const auto& [name, sub] : subs)
        if (sub->parsed() && name != "balance") key = name;
      if (key.empty()) {
        std::cerr << app.help();
        return 2;
      }
      const std::string command = key.rfind("balance:", 0) == 0 ? "balance" : key;
      cfg.command = command;
      cfg.params = gather(subs.at(key), command, collected.at(key));
      if (command == "balance") cfg.params["mode"] = key.substr(8);
      cfg.seed = seed;
    }
    // Explicit global flags override a replayed config.
    if (app.count("--seed")) cfg.seed = seed;
    if (app.count("--budget")) cfg.budget = budget;
    if (app.count("--out")) cfg.out = out;
    if (app.count("--format")) cfg.format = format;
    if (app.count("--threads")) cfg.threads = threads;

    const auto record = linforms::run(cfg);
    std::cout << record.render();
    if (!record.config.out.empty()) linforms::write_outputs(record);
    return record.exit_code;
  } catch (const linforms::Error& e) {
    std::cerr << "error (" << linforms::to_string(e.kind()) << "): " << e.what()
              << '\n';
    return linforms::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
