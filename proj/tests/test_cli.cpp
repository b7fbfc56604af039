// Copyright 2026 The snapfilter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "snapfilter/experiment.hpp"

using namespace snapfilter;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = SNAPFILTER_CONFIG_DIR;

std::string death_config(const std::string& snapshots, const std::string& methods) {
  return R"({
    "network": {"species": 1, "reactions": [{"reactants": ["S1"], "rate": 2.0}], "observed": [0]},
    "initial": {"state": [20]},
    "snapshots": )" + snapshots + R"(,
    "methods": )" + methods + R"(,
    "trials": {"N_s": 50, "N_r": 2, "seed": 3}
  })";
}

bool mentions(const std::vector<std::string>& issues, const std::string& needle) {
  for (const auto& s : issues)
    if (s.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("shipped configs load and validate") {
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    CAPTURE(entry.path().string());
    auto cfg = load_config(entry.path());
    CHECK(validate_config(cfg).empty());
  }
}

TEST_CASE("empty method list is a validation error") {
  auto cfg = parse_config(death_config(R"([{"t": 0.5, "y": 8}])", "[]"));
  CHECK(mentions(validate_config(cfg), "empty method list"));
}

TEST_CASE("snapshots out of order are named as a pair") {
  auto cfg = parse_config(
      death_config(R"([{"t": 0.5, "y": 8}, {"t": 0.3, "y": 5}])", R"([{"kind": "naive"}])"));
  auto issues = validate_config(cfg);
  CHECK(mentions(issues, "snapshots out of order: snapshot 0"));
  CHECK(mentions(issues, "snapshot 1"));
}

TEST_CASE("observation above the initial count is infeasible for pure death") {
  auto cfg = parse_config(death_config(R"([{"t": 0.5, "y": 25}])", R"([{"kind": "naive"}])"));
  CHECK(mentions(validate_config(cfg), "infeasible"));
  auto ok = parse_config(death_config(R"([{"t": 0.5, "y": 5}])", R"([{"kind": "naive"}])"));
  CHECK(validate_config(ok).empty());
}

TEST_CASE("further semantic checks") {
  auto dup = parse_config(death_config(R"([{"t": 0.5, "y": 5}])",
                                       R"([{"kind": "naive"}, {"kind": "naive"}])"));
  CHECK(mentions(validate_config(dup), "duplicate label"));
  auto split = parse_config(death_config(
      R"([{"t": 0.5, "y": 5}])", R"([{"kind": "targeting", "free_reactions": [0]}])"));
  CHECK(mentions(validate_config(split), "free_reactions"));
  auto stage = parse_config(death_config(R"([{"t": 0.5, "y": 5}])", R"([{"kind": "two_stage"}])"));
  CHECK(mentions(validate_config(stage), "t0"));
  auto cp = parse_config(death_config(R"([{"t": 0.5, "y": 5}])", R"([{"kind": "cp_exact"}])"));
  CHECK(mentions(validate_config(cp), "oracle ex1"));
}

TEST_CASE("schema violations raise config errors") {
  CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"network": {}})"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(death_config(R"([{"t": 0.5, "y": 5}])", R"([{"kind": "naive", "colour": 1}])")),
      doctest::Contains("colour"), ConfigError);
  CHECK_THROWS_AS(
      parse_config(death_config(R"([{"t": 0.5, "y": 5}])", R"([{"kind": "magic"}])")),
      ConfigError);
  CHECK_THROWS_AS(load_config(kConfigs / "missing.json"), ConfigError);
}

TEST_CASE("config forms: named species, stoichiometry maps and pmf initial laws") {
  auto cfg = parse_config(R"({
    // comments are allowed
    "network": {
      "species": ["A", "B", "C"],
      "reactions": [
        {"reactants": {"A": 1, "B": 1}, "products": {"C": 1}, "rate": 0.1},
        {"reactants": {"C": 1}, "products": ["A", "B"], "rate": 1.0}
      ],
      "observed": ["C"]
    },
    "initial": {"pmf": [{"state": [3, 3, 0], "p": 0.5}, {"state": [2, 2, 1], "p": 0.5}]},
    "cases": [{"name": "one", "snapshots": [{"t": 1.0, "y": [1]}], "query_time": 0.5}],
    "methods": [{"kind": "targeting", "intensity": "mc", "mc_paths": 50, "dt": 0.25}],
    "trials": {"N_s": 40, "N_r": 2, "seed": 9}
  })");
  REQUIRE(cfg.network);
  CHECK(cfg.network->n_species() == 3);
  CHECK(cfg.network->stoich(2, 0) == 1);
  CHECK(cfg.network->reactant_order(1, 0) == 1);
  CHECK(cfg.initial.size() == 2);
  CHECK(cfg.query_for(cfg.cases[0]) == 0.5);
  CHECK(validate_config(cfg).empty());
  auto row = run_method(cfg, 0, 0, 1);
  CHECK(row.trials_ok == 2);
  CHECK(std::isnan(row.tve_mean));
}

TEST_CASE("runs are reproducible and independent of the worker count") {
  auto cfg = load_config(kConfigs / "table1_ex2_small.json");
  cfg.n_particles = 200;
  for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
    auto a = run_method(cfg, 1, m, 1, 3);
    auto b = run_method(cfg, 1, m, 3, 3);
    CAPTURE(a.label);
    CHECK(a.tves == b.tves);
    CHECK(a.esf == b.esf);
    CHECK(a.trials_ok == 3);
    CHECK(a.esf > 0.0);
    CHECK(a.esf <= 1.0);
    double oracle = 0.0, estimate = 0.0;
    for (const auto& [z, v] : a.distribution) {
      oracle += v[0];
      estimate += v[1];
    }
    CHECK(std::abs(oracle - 1.0) < 1e-8);
    CHECK(std::abs(estimate - 1.0) < 1e-8);
  }
}

TEST_CASE("all-rejected naive trials are counted, not fatal") {
  auto cfg = parse_config(death_config(R"([{"t": 0.5, "y": 0}])", R"([{"kind": "naive"}])"));
  auto row = run_method(cfg, 0, 0, 1);
  CHECK(row.trials_ok == 0);
  CHECK(row.success_fraction == 0.0);
}

TEST_CASE("artifacts: results table, distributions and summary") {
  auto cfg = load_config(kConfigs / "table1_ex2_small.json");
  cfg.n_particles = 100;
  cfg.n_trials = 2;
  std::vector<MethodSummary> rows;
  for (std::size_t c = 0; c < cfg.cases.size(); ++c)
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) rows.push_back(run_method(cfg, c, m, 1));
  const fs::path out = fs::temp_directory_path() / "snapfilter_cli_test";
  fs::remove_all(out);
  write_outputs(cfg, rows, out);

  std::ifstream csv(out / "results.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header ==
        "case,method,label,observation,N_s,N_r,trials_ok,success_fraction,tve_mean,"
        "tve_ci_halfwidth,esf_w,esf_l,esf,wall_seconds");
  int lines = 0;
  for (std::string line; std::getline(csv, line);) ++lines;
  CHECK(lines == 8);

  CHECK(fs::exists(out / "dist_common_targeting_lambda1.csv"));
  CHECK(fs::exists(out / "dist_rare_cp_approx.csv"));
  std::ifstream js(out / "summary.json");
  auto summary = nlohmann::json::parse(js);
  CHECK(summary["rows"].size() == 8);
  fs::remove_all(out);
}
