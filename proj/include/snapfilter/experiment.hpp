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

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "snapfilter/network.hpp"
#include "snapfilter/oracles.hpp"
#include "snapfilter/simulate.hpp"
#include "snapfilter/targeting.hpp"

namespace snapfilter {

/// Schema or semantic problem in an experiment config.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MethodKind { kNaive, kTargeting, kTwoStage, kCpExact, kCpApprox };
enum class OracleKind { kNone, kEx1, kEx2, kEx3 };

struct MethodSpec {
  MethodKind kind = MethodKind::kTargeting;
  IntensityKind intensity = IntensityKind::kRre;
  double dt = 0.1;
  std::optional<double> t0;
  TwoStageIntensity mode = TwoStageIntensity::kCommonMean;
  std::optional<double> resample_every;
  std::optional<std::vector<std::size_t>> free_reactions;
  std::size_t mc_paths = 1000;
  std::optional<std::size_t> n_particles;  ///< overrides trials.N_s
  std::uint64_t max_rejects = 1'000'000;
  std::string label;
};

struct CaseSpec {
  std::string name;
  SnapshotSeq snapshots;
  std::optional<double> query_time;  ///< overrides the config-level query time
};

struct ExperimentConfig {
  std::vector<std::string> species_names;
  std::optional<ReactionNetwork> network;
  Pmf initial;
  std::vector<CaseSpec> cases;
  std::optional<double> query_time;  ///< default: last snapshot time
  OracleKind oracle = OracleKind::kNone;
  std::vector<MethodSpec> methods;
  std::size_t n_particles = 1000;
  std::size_t n_trials = 100;
  std::uint64_t seed = 1;

  double query_for(const CaseSpec& c) const;
};

/// Parses a JSON document; throws ConfigError with a path-qualified message.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every semantic problem found, without simulating. Empty means valid.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

/// Conditional law at the query time for a case, when the config names an oracle.
std::optional<Pmf> oracle_pmf(const ExperimentConfig& cfg, const CaseSpec& c);

/// Result of one filter run.
struct TrialOutcome {
  std::optional<Pmf> estimate;  ///< empty when every particle was rejected
  double tve = 0.0;             ///< NaN without an oracle or estimate
  double esf = 0.0;
  double esf_w = 0.0;           ///< NaN when the method has no Poisson weight
  double esf_l = 0.0;           ///< NaN when the method has no Girsanov weight
  double seconds = 0.0;
};

TrialOutcome run_trial(const ExperimentConfig& cfg, const CaseSpec& c, const MethodSpec& m,
                       const std::optional<Pmf>& oracle, const StreamRng& stream,
                       unsigned threads);

struct MethodSummary {
  std::string case_name;
  std::string method;
  std::string label;
  std::string observation;
  std::size_t n_particles = 0;
  std::size_t n_trials = 0;
  std::size_t trials_ok = 0;
  double success_fraction = 0.0;
  double tve_mean = 0.0;
  double tve_ci_halfwidth = 0.0;
  double esf_w = 0.0;
  double esf_l = 0.0;
  double esf = 0.0;
  double wall_seconds = 0.0;  ///< mean per trial
  std::vector<double> tves;
  /// Per state: (oracle probability, mean estimate, CI half-width) over successful trials.
  std::vector<std::pair<State, std::array<double, 3>>> distribution;
};

/// N_r independent trials of one method on one case. Trial r uses stream (seed, case, method, r).
MethodSummary run_method(const ExperimentConfig& cfg, std::size_t case_idx,
                         std::size_t method_idx, unsigned threads,
                         std::optional<std::size_t> n_trials = std::nullopt);

std::string method_name(MethodKind k);
std::string method_label(const MethodSpec& m);

/// Writes results.csv, dist_<case>_<label>.csv and summary.json into `out_dir`.
void write_outputs(const ExperimentConfig& cfg, const std::vector<MethodSummary>& rows,
                   const std::filesystem::path& out_dir);

}  // namespace snapfilter
