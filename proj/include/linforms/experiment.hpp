#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "linforms/error.hpp"

namespace linforms {

inline constexpr const char* kVersion = "0.1.0";

// One command invocation. `params` is validated against the command's schema
// by run(); missing keys take their defaults and unknown keys are rejected.
struct ExperimentConfig {
  std::string command;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> budget;
  std::string format = "json";  // json or csv
  std::string out;              // empty: stdout only
  int threads = 0;              // 0: OpenMP default

  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  // FNV-1a 64 over the canonical dump of (command, params, seed, budget).
  // Output location, format and thread count do not enter the hash.
  std::string hash() const;
};

std::string fnv1a_hex(std::string_view data);

enum class ParamType { Integer, Number, Boolean, String };

struct ParamSpec {
  std::string key;
  ParamType type;
  nlohmann::json fallback;  // null: required
};

// Commands: leibman, complexity, sol-discrete, sol-torus, gowers, min-k,
// balance, m-discrete, m-torus, converge, counterexamples.
const std::vector<ParamSpec>& command_schema(const std::string& command);
std::vector<std::string> command_names();

// Converts CLI text to the schema type ("2/5" is accepted for numbers).
nlohmann::json convert_param(const std::string& command, const std::string& key,
                             const std::string& text);

// Fills defaults, rejects unknown keys and type mismatches.
nlohmann::json normalize_params(const std::string& command,
                                const nlohmann::json& params);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const;
};

struct ResultRecord {
  ExperimentConfig config;  // with normalized params
  std::string config_hash;
  std::string timestamp;  // UTC, ISO 8601
  std::string version = kVersion;
  nlohmann::json payload;
  Table table;
  double seconds = 0.0;
  int exit_code = 0;  // 4 when a counterexample check fails

  std::string render() const;  // payload in config.format
  nlohmann::json meta() const;
};

// Exit-code contract: 0 ok, 2 validation, 3 budget, 4 numeric.
int exit_code_for(ErrorKind kind);

ResultRecord run(const ExperimentConfig& config);

struct CheckRow {
  std::string check;
  std::string expected;
  std::string observed;
  std::string status;  // PASS, FAIL or SKIP
  std::string note;
};

std::vector<CheckRow> counterexample_suite(std::uint64_t p = 13);

// Writes render() to config.out and meta() to config.out + ".meta.json".
void write_outputs(const ResultRecord& record);

}  // namespace linforms
