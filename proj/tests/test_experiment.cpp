#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "linforms/error.hpp"
#include "linforms/experiment.hpp"
#include "linforms/extremal.hpp"

using namespace linforms;
using nlohmann::json;

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

ExperimentConfig config(std::string command, json params) {
  ExperimentConfig c;
  c.command = std::move(command);
  c.params = std::move(params);
  return c;
}

}  // namespace

TEST_CASE("config JSON round-trip") {
  auto c = config("gowers", {{"N", 13}, {"d", 2}, {"f", "quadphase"}});
  c.seed = 42;
  c.budget = 1000;
  c.out = "x.csv";
  c.format = "csv";
  c.threads = 2;
  const auto back = ExperimentConfig::from_json(json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
  CHECK(back.hash() == c.hash());
}

TEST_CASE("unknown config keys are rejected") {
  json j = {{"command", "gowers"}, {"params", json::object()}, {"colour", "red"}};
  CHECK(kind_of([&] { ExperimentConfig::from_json(j); }) == ErrorKind::Parse);
  CHECK(kind_of([] { ExperimentConfig::from_json(json::array()); }) == ErrorKind::Parse);
  CHECK(kind_of([] {
          normalize_params("gowers", {{"N", 13}, {"d", 2}, {"f", "q"}, {"x", 1}});
        }) == ErrorKind::InvalidParameter);
}

TEST_CASE("hash binds inputs but not the output location") {
  auto a = config("gowers", {{"N", 13}, {"d", 2}, {"f", "quadphase"}});
  auto b = a;
  b.out = "elsewhere.json";
  b.threads = 3;
  b.format = "csv";
  CHECK(a.hash() == b.hash());
  b.seed = 2;
  CHECK(a.hash() != b.hash());
  auto c = a;
  c.params["d"] = 3;
  CHECK(a.hash() != c.hash());
  CHECK(a.hash().size() == 16);
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("schema defaults and types") {
  const auto p = normalize_params("leibman", {{"system", "ap:4"}});
  CHECK(p.at("degree") == 1);
  CHECK(p.at("complement") == false);
  CHECK(kind_of([] { normalize_params("leibman", json::object()); }) ==
        ErrorKind::InvalidParameter);
  CHECK(kind_of([] { normalize_params("leibman", {{"system", 4}}); }) == ErrorKind::Parse);
  CHECK(convert_param("m-discrete", "alpha", "2/5") == json(0.4));
  CHECK(convert_param("gowers", "N", "13") == json(13));
  CHECK(kind_of([] { convert_param("gowers", "N", "13x"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { convert_param("m-discrete", "alpha", "1/0"); }) == ErrorKind::Parse);
  CHECK(kind_of([] { command_schema("frobnicate"); }) == ErrorKind::InvalidParameter);
  CHECK(command_names().size() == 11);
}

TEST_CASE("exit-code contract") {
  CHECK(exit_code_for(ErrorKind::Parse) == 2);
  CHECK(exit_code_for(ErrorKind::InvalidParameter) == 2);
  CHECK(exit_code_for(ErrorKind::Dimension) == 2);
  CHECK(exit_code_for(ErrorKind::Budget) == 3);
  CHECK(exit_code_for(ErrorKind::Numeric) == 4);
}

TEST_CASE("leibman command payload") {
  const auto rec = run(config("leibman", {{"system", "ap:4"}, {"degree", 2}}));
  CHECK(rec.payload.at("rank") == 3);
  CHECK(rec.payload.at("basis") == json::parse("[[1,0,0,1],[0,1,0,-3],[0,0,1,3]]"));
  CHECK(rec.exit_code == 0);
  CHECK(rec.version == kVersion);
  CHECK(rec.timestamp.size() == 20);
}

TEST_CASE("gowers command") {
  auto c = config("gowers", {{"N", 13}, {"d", 3}, {"f", "quadphase"}});
  const auto rec = run(c);
  CHECK(rec.payload.at("value").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  c.format = "csv";
  const auto csv = run(c).render();
  CHECK(csv.rfind("N,d,f,value\n13,3,quadphase,", 0) == 0);
}

TEST_CASE("budget overrides surface as budget errors") {
  auto c = config("sol-discrete", {{"N", 50}, {"system", "cube:3"}, {"f", "const:1"}});
  c.budget = 100;
  CHECK(kind_of([&] { run(c); }) == ErrorKind::Budget);
}

TEST_CASE("sol-torus reports the exact value when it fits") {
  auto c = config("sol-torus", {{"spec", "1,2"},
                                {"system", "ap:4"},
                                {"f", "expr:cos1"},
                                {"samples", 20000}});
  const auto rec = run(c);
  CHECK(rec.payload.at("exact").at("re").get<double>() ==
        doctest::Approx(9.0 / 128).epsilon(1e-14));
  CHECK(rec.payload.at("dimension") == 5);
}

TEST_CASE("m-discrete command rows use the convergence columns") {
  auto c = config("m-discrete", {{"system", "ap:3"}, {"p", 5}, {"alpha", 0.4}});
  c.format = "csv";
  const auto rec = run(c);
  std::istringstream in(rec.render());
  const auto table = read_csv(in);
  REQUIRE(table.rows.size() == 1);
  CHECK(table.rows[0].estimate == 0.08);
  CHECK(table.rows[0].exact);
  CHECK(table.rows[0].group == "Z_5");
}

TEST_CASE("counterexample suite passes on defaults") {
  const auto rows = counterexample_suite();
  REQUIRE(rows.size() == 10);
  for (const auto& r : rows) CHECK_MESSAGE(r.status == "PASS", r.check);
  CHECK(rows[0].check.find("U3") != std::string::npos);
  CHECK(rows[1].check.find("U2") != std::string::npos);
}

TEST_CASE("counterexample suite skips the Gauss rows at p=2") {
  const auto rows = counterexample_suite(2);
  CHECK(rows[0].status == "SKIP");
  CHECK(rows[1].status == "SKIP");
  CHECK_FALSE(rows[0].note.empty());
  for (std::size_t i = 2; i < rows.size(); ++i) CHECK(rows[i].status == "PASS");
}

TEST_CASE("outputs and sidecar") {
  auto c = config("complexity", {{"system", "ap:4"}});
  c.out = "test_experiment_out.json";
  const auto rec = run(c);
  write_outputs(rec);
  std::ifstream meta(c.out + ".meta.json");
  REQUIRE(meta);
  const auto m = json::parse(meta);
  CHECK(m.at("config_hash") == rec.config_hash);
  CHECK(ExperimentConfig::from_json(m.at("config")).hash() == rec.config_hash);
  std::ifstream body(c.out);
  CHECK(json::parse(body).at("complexity") == 2);
  std::remove(c.out.c_str());
  std::remove((c.out + ".meta.json").c_str());
}

TEST_CASE("replaying a record reproduces it") {
  auto c = config("converge", {{"system", "ap:3"},
                               {"alpha", 0.4},
                               {"primes", "5,7"},
                               {"samples", 4000},
                               {"crn_samples", 1000}});
  c.seed = 9;
  const auto a = run(c);
  const auto b = run(ExperimentConfig::from_json(a.meta().at("config")));
  CHECK(a.config_hash == b.config_hash);
  std::istringstream ia(run(c).table.to_csv()), ib(b.table.to_csv());
  CHECK(read_csv(ia).same_results(read_csv(ib)));
}

TEST_CASE("table CSV quoting") {
  Table t{{"a", "b"}, {{"x,y", "say \"hi\""}}};
  CHECK(t.to_csv() == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
}
