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

#include "snapfilter/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "snapfilter/metrics.hpp"

namespace snapfilter {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(where, "unknown key '" + key + "'");
  }
}

double get_number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

std::int64_t get_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<std::int64_t>();
}

State get_state(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an integer array");
  State z;
  for (std::size_t i = 0; i < j.size(); ++i)
    z.push_back(get_int(j[i], where + "[" + std::to_string(i) + "]"));
  return z;
}

std::size_t species_index(const json& j, const std::vector<std::string>& names,
                          const std::string& where) {
  if (j.is_string()) {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == j.get<std::string>()) return i;
    fail(where, "unknown species '" + j.get<std::string>() + "'");
  }
  const auto v = get_int(j, where);
  if (v < 0 || static_cast<std::size_t>(v) >= names.size()) fail(where, "species index out of range");
  return static_cast<std::size_t>(v);
}

std::vector<std::pair<std::size_t, int>> get_side(const json& j,
                                                  const std::vector<std::string>& names,
                                                  const std::string& where) {
  std::map<std::size_t, int> mult;
  if (j.is_object()) {
    for (const auto& [key, val] : j.items()) {
      const json ref = std::all_of(key.begin(), key.end(), ::isdigit) && !key.empty()
                           ? json(std::stoll(key))
                           : json(key);
      const auto k = get_int(val, where + "." + key);
      if (k <= 0) fail(where + "." + key, "multiplicity must be positive");
      mult[species_index(ref, names, where + "." + key)] += static_cast<int>(k);
    }
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      mult[species_index(j[i], names, where + "[" + std::to_string(i) + "]")] += 1;
  } else {
    fail(where, "expected an object {species: multiplicity} or a species list");
  }
  return {mult.begin(), mult.end()};
}

MethodKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "naive") return MethodKind::kNaive;
  if (s == "targeting") return MethodKind::kTargeting;
  if (s == "two_stage") return MethodKind::kTwoStage;
  if (s == "cp_exact") return MethodKind::kCpExact;
  if (s == "cp_approx") return MethodKind::kCpApprox;
  fail(where, "unknown method kind '" + s + "'");
}

IntensityKind parse_intensity(const std::string& s, const std::string& where) {
  if (s == "rre") return IntensityKind::kRre;
  if (s == "mc") return IntensityKind::kMonteCarlo;
  if (s == "optimized") return IntensityKind::kOptimized;
  fail(where, "unknown intensity '" + s + "'");
}

std::string intensity_name(IntensityKind k) {
  switch (k) {
    case IntensityKind::kRre: return "rre";
    case IntensityKind::kMonteCarlo: return "mc";
    case IntensityKind::kOptimized: return "optimized";
  }
  return "?";
}

SnapshotSeq get_snapshots(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected a list of {t, y}");
  SnapshotSeq out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string w = where + "[" + std::to_string(i) + "]";
    check_keys(j[i], w, {"t", "y"});
    if (!j[i].contains("t") || !j[i].contains("y")) fail(w, "snapshot needs t and y");
    Snapshot s;
    s.t = get_number(j[i]["t"], w + ".t");
    s.y = j[i]["y"].is_array() ? get_state(j[i]["y"], w + ".y") : State{get_int(j[i]["y"], w + ".y")};
    out.push_back(std::move(s));
  }
  return out;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char ch : s) out += std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '.' ? ch : '_';
  return out;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::array<double, 2> rates2(const ExperimentConfig& cfg) {
  return {cfg.network->rate(0), cfg.network->rate(1)};
}

std::array<double, 4> rates4(const ExperimentConfig& cfg) {
  return {cfg.network->rate(0), cfg.network->rate(1), cfg.network->rate(2), cfg.network->rate(3)};
}

const State& point_initial(const ExperimentConfig& cfg) {
  if (cfg.initial.size() != 1) throw ConfigError("oracle needs a point-mass initial state");
  return cfg.initial.begin()->first;
}

}  // namespace

double ExperimentConfig::query_for(const CaseSpec& c) const {
  if (c.query_time) return *c.query_time;
  if (query_time) return *query_time;
  return c.snapshots.back().t;
}

std::string method_name(MethodKind k) {
  switch (k) {
    case MethodKind::kNaive: return "naive";
    case MethodKind::kTargeting: return "targeting";
    case MethodKind::kTwoStage: return "two_stage";
    case MethodKind::kCpExact: return "cp_exact";
    case MethodKind::kCpApprox: return "cp_approx";
  }
  return "?";
}

std::string method_label(const MethodSpec& m) {
  if (!m.label.empty()) return m.label;
  std::string s = method_name(m.kind);
  if (m.kind == MethodKind::kTargeting) s += "_" + intensity_name(m.intensity);
  if (m.kind == MethodKind::kTwoStage) {
    s += m.mode == TwoStageIntensity::kCommonMean ? "_common" : "_per_particle";
    if (m.t0) s += "_t0=" + fmt(*m.t0);
  }
  if (m.resample_every) s += "_ds=" + fmt(*m.resample_every);
  return s;
}

ExperimentConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(doc, "config",
             {"name", "description", "network", "initial", "cases", "snapshots", "query_time",
              "oracle", "methods", "trials"});
  ExperimentConfig cfg;

  if (!doc.contains("network")) fail("config", "missing 'network'");
  const json& jn = doc["network"];
  check_keys(jn, "network", {"species", "reactions", "observed"});
  if (!jn.contains("species")) fail("network", "missing 'species'");
  if (jn["species"].is_array()) {
    for (std::size_t i = 0; i < jn["species"].size(); ++i) {
      if (!jn["species"][i].is_string()) fail("network.species", "expected names");
      cfg.species_names.push_back(jn["species"][i].get<std::string>());
    }
  } else {
    const auto n = get_int(jn["species"], "network.species");
    if (n <= 0) fail("network.species", "need at least one species");
    for (std::int64_t i = 0; i < n; ++i) cfg.species_names.push_back("S" + std::to_string(i + 1));
  }
  if (cfg.species_names.empty()) fail("network.species", "need at least one species");
  if (!jn.contains("reactions") || !jn["reactions"].is_array() || jn["reactions"].empty())
    fail("network.reactions", "need a nonempty reaction list");
  std::vector<Reaction> reactions;
  for (std::size_t j = 0; j < jn["reactions"].size(); ++j) {
    const std::string w = "network.reactions[" + std::to_string(j) + "]";
    const json& jr = jn["reactions"][j];
    check_keys(jr, w, {"reactants", "products", "rate", "name"});
    Reaction r;
    if (jr.contains("reactants")) r.reactants = get_side(jr["reactants"], cfg.species_names, w + ".reactants");
    if (jr.contains("products")) r.products = get_side(jr["products"], cfg.species_names, w + ".products");
    if (!jr.contains("rate")) fail(w, "missing 'rate'");
    r.rate = get_number(jr["rate"], w + ".rate");
    if (!(r.rate >= 0.0)) fail(w + ".rate", "rate must be nonnegative");
    reactions.push_back(std::move(r));
  }
  std::vector<std::size_t> observed;
  if (!jn.contains("observed") || !jn["observed"].is_array())
    fail("network.observed", "expected a list of observed species");
  for (std::size_t i = 0; i < jn["observed"].size(); ++i)
    observed.push_back(species_index(jn["observed"][i], cfg.species_names,
                                     "network.observed[" + std::to_string(i) + "]"));
  try {
    cfg.network.emplace(cfg.species_names.size(), std::move(reactions), std::move(observed));
  } catch (const ContractError& e) {
    fail("network", e.what());
  }

  if (!doc.contains("initial")) fail("config", "missing 'initial'");
  const json& ji = doc["initial"];
  check_keys(ji, "initial", {"state", "pmf"});
  if (ji.contains("state")) {
    cfg.initial = Pmf::point_mass(get_state(ji["state"], "initial.state"));
  } else if (ji.contains("pmf")) {
    if (!ji["pmf"].is_array() || ji["pmf"].empty()) fail("initial.pmf", "expected a nonempty list");
    for (std::size_t i = 0; i < ji["pmf"].size(); ++i) {
      const std::string w = "initial.pmf[" + std::to_string(i) + "]";
      check_keys(ji["pmf"][i], w, {"state", "p"});
      State z = get_state(ji["pmf"][i]["state"], w + ".state");
      if (cfg.initial.empty()) cfg.initial = Pmf(z.size());
      const double p = get_number(ji["pmf"][i]["p"], w + ".p");
      if (!(p >= 0.0)) fail(w + ".p", "probability must be nonnegative");
      cfg.initial.add(z, p);
    }
  } else {
    fail("initial", "give 'state' or 'pmf'");
  }

  if (doc.contains("cases")) {
    if (!doc["cases"].is_array()) fail("cases", "expected a list");
    for (std::size_t i = 0; i < doc["cases"].size(); ++i) {
      const std::string w = "cases[" + std::to_string(i) + "]";
      const json& jc = doc["cases"][i];
      check_keys(jc, w, {"name", "snapshots", "query_time"});
      CaseSpec c;
      c.name = jc.value("name", "case" + std::to_string(i));
      if (!jc.contains("snapshots")) fail(w, "missing 'snapshots'");
      c.snapshots = get_snapshots(jc["snapshots"], w + ".snapshots");
      if (jc.contains("query_time")) c.query_time = get_number(jc["query_time"], w + ".query_time");
      cfg.cases.push_back(std::move(c));
    }
  }
  if (doc.contains("snapshots")) {
    if (!cfg.cases.empty()) fail("config", "give either 'cases' or 'snapshots', not both");
    cfg.cases.push_back({"default", get_snapshots(doc["snapshots"], "snapshots"), std::nullopt});
  }
  if (doc.contains("query_time")) cfg.query_time = get_number(doc["query_time"], "query_time");

  if (doc.contains("oracle")) {
    if (!doc["oracle"].is_string()) fail("oracle", "expected ex1, ex2, ex3 or none");
    const auto o = doc["oracle"].get<std::string>();
    if (o == "ex1") cfg.oracle = OracleKind::kEx1;
    else if (o == "ex2") cfg.oracle = OracleKind::kEx2;
    else if (o == "ex3") cfg.oracle = OracleKind::kEx3;
    else if (o == "none") cfg.oracle = OracleKind::kNone;
    else fail("oracle", "unknown oracle '" + o + "'");
  }

  if (!doc.contains("methods") || !doc["methods"].is_array())
    fail("methods", "expected a list of methods");
  for (std::size_t i = 0; i < doc["methods"].size(); ++i) {
    const std::string w = "methods[" + std::to_string(i) + "]";
    const json& jm = doc["methods"][i];
    check_keys(jm, w,
               {"kind", "intensity", "dt", "t0", "mode", "resample_every", "free_reactions",
                "label", "N_s", "mc_paths", "max_rejects"});
    MethodSpec m;
    if (!jm.contains("kind") || !jm["kind"].is_string()) fail(w, "missing 'kind'");
    m.kind = parse_kind(jm["kind"].get<std::string>(), w + ".kind");
    if (jm.contains("intensity")) {
      if (!jm["intensity"].is_string()) fail(w + ".intensity", "expected rre, mc or optimized");
      m.intensity = parse_intensity(jm["intensity"].get<std::string>(), w + ".intensity");
    }
    if (jm.contains("dt")) m.dt = get_number(jm["dt"], w + ".dt");
    if (jm.contains("t0")) m.t0 = get_number(jm["t0"], w + ".t0");
    if (jm.contains("mode")) {
      const auto mode = jm["mode"].is_string() ? jm["mode"].get<std::string>() : "";
      if (mode == "common") m.mode = TwoStageIntensity::kCommonMean;
      else if (mode == "per_particle") m.mode = TwoStageIntensity::kPerParticle;
      else fail(w + ".mode", "expected common or per_particle");
    }
    if (jm.contains("resample_every"))
      m.resample_every = get_number(jm["resample_every"], w + ".resample_every");
    if (jm.contains("free_reactions")) {
      const auto f = get_state(jm["free_reactions"], w + ".free_reactions");
      std::vector<std::size_t> idx;
      for (auto v : f) {
        if (v < 0) fail(w + ".free_reactions", "indices must be nonnegative");
        idx.push_back(static_cast<std::size_t>(v));
      }
      m.free_reactions = idx;
    }
    if (jm.contains("label")) {
      if (!jm["label"].is_string()) fail(w + ".label", "expected a string");
      m.label = jm["label"].get<std::string>();
    }
    if (jm.contains("N_s")) {
      const auto n = get_int(jm["N_s"], w + ".N_s");
      if (n <= 0) fail(w + ".N_s", "must be positive");
      m.n_particles = static_cast<std::size_t>(n);
    }
    if (jm.contains("mc_paths")) {
      const auto n = get_int(jm["mc_paths"], w + ".mc_paths");
      if (n <= 0) fail(w + ".mc_paths", "must be positive");
      m.mc_paths = static_cast<std::size_t>(n);
    }
    if (jm.contains("max_rejects")) {
      const auto n = get_int(jm["max_rejects"], w + ".max_rejects");
      if (n <= 0) fail(w + ".max_rejects", "must be positive");
      m.max_rejects = static_cast<std::uint64_t>(n);
    }
    cfg.methods.push_back(std::move(m));
  }

  if (doc.contains("trials")) {
    const json& jt = doc["trials"];
    check_keys(jt, "trials", {"N_s", "N_r", "seed"});
    if (jt.contains("N_s")) {
      const auto n = get_int(jt["N_s"], "trials.N_s");
      if (n <= 0) fail("trials.N_s", "must be positive");
      cfg.n_particles = static_cast<std::size_t>(n);
    }
    if (jt.contains("N_r")) {
      const auto n = get_int(jt["N_r"], "trials.N_r");
      if (n <= 0) fail("trials.N_r", "must be positive");
      cfg.n_trials = static_cast<std::size_t>(n);
    }
    if (jt.contains("seed")) {
      if (!jt["seed"].is_number_unsigned() && !jt["seed"].is_number_integer())
        fail("trials.seed", "expected a nonnegative integer");
      cfg.seed = jt["seed"].get<std::uint64_t>();
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> issues;
  const ReactionNetwork& net = *cfg.network;
  const std::size_t n = net.n_species();

  if (cfg.initial.empty()) issues.push_back("initial: distribution is empty");
  for (const auto& [z, p] : cfg.initial) {
    if (z.size() != n) {
      issues.push_back("initial: state " + state_to_string(z) + " has dimension " +
                       std::to_string(z.size()) + ", expected " + std::to_string(n));
      continue;
    }
    for (auto v : z)
      if (v < 0) issues.push_back("initial: state " + state_to_string(z) + " has a negative count");
  }
  if (!cfg.initial.empty() && !cfg.initial.is_normalized(1e-9))
    issues.push_back("initial: probabilities sum to " + fmt(cfg.initial.total()) + ", expected 1");

  if (cfg.methods.empty()) issues.push_back("methods: empty method list");
  if (cfg.cases.empty()) issues.push_back("cases: no snapshots given");

  std::vector<std::optional<ObservationSplit>> splits(cfg.methods.size());
  std::set<std::string> labels;
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    const MethodSpec& m = cfg.methods[i];
    const std::string w = "methods[" + std::to_string(i) + "]";
    if (!labels.insert(method_label(m)).second)
      issues.push_back(w + ": duplicate label '" + method_label(m) + "'");
    if (!(m.dt > 0.0)) issues.push_back(w + ".dt: must be positive");
    if (m.resample_every && !(*m.resample_every > 0.0))
      issues.push_back(w + ".resample_every: must be positive");
    if (m.kind == MethodKind::kTwoStage && !m.t0) issues.push_back(w + ": two_stage needs t0");
    if (m.kind == MethodKind::kTargeting || m.kind == MethodKind::kTwoStage) {
      if (net.n_observed() == 0) {
        issues.push_back(w + ": targeting needs at least one observed species");
        continue;
      }
      try {
        splits[i] = build_split(net, m.free_reactions);
      } catch (const std::exception& e) {
        issues.push_back(w + ".free_reactions: " + e.what());
      }
    }
    if (m.kind == MethodKind::kCpExact && cfg.oracle != OracleKind::kEx1)
      issues.push_back(w + ": cp_exact requires oracle ex1");
    if (m.kind == MethodKind::kCpApprox && cfg.oracle != OracleKind::kEx1 &&
        cfg.oracle != OracleKind::kEx2)
      issues.push_back(w + ": cp_approx requires oracle ex1 or ex2");
  }

  switch (cfg.oracle) {
    case OracleKind::kEx1:
      if (n != 1 || net.n_reactions() != 1 || net.stoich(0, 0) != -1 || net.n_observed() != 1)
        issues.push_back("oracle: ex1 needs a single observed species with one death reaction");
      break;
    case OracleKind::kEx2:
      if (n != 2 || net.n_reactions() != 2 || net.observed() != std::vector<std::size_t>{1})
        issues.push_back("oracle: ex2 needs S1 <-> S2 with S2 observed");
      break;
    case OracleKind::kEx3:
      if (n != 3 || net.n_reactions() != 4 || net.observed() != std::vector<std::size_t>{2})
        issues.push_back("oracle: ex3 needs the four-reaction network with S3 observed");
      break;
    case OracleKind::kNone:
      break;
  }
  if (cfg.oracle != OracleKind::kNone && cfg.initial.size() != 1)
    issues.push_back("oracle: analytic oracles need a point-mass initial state");

  for (const CaseSpec& c : cfg.cases) {
    const std::string w = "case '" + c.name + "'";
    if (c.snapshots.empty()) {
      issues.push_back(w + ": no snapshots");
      continue;
    }
    bool ordered = true;
    for (std::size_t l = 0; l < c.snapshots.size(); ++l) {
      const Snapshot& s = c.snapshots[l];
      if (s.y.size() != net.n_observed())
        issues.push_back(w + ": snapshot " + std::to_string(l) + " has " +
                         std::to_string(s.y.size()) + " observed values, expected " +
                         std::to_string(net.n_observed()));
      if (s.t < 0.0) issues.push_back(w + ": snapshot " + std::to_string(l) + " has negative time");
      if (l > 0 && !(s.t > c.snapshots[l - 1].t)) {
        ordered = false;
        issues.push_back(w + ": snapshots out of order: snapshot " + std::to_string(l - 1) +
                         " (t=" + fmt(c.snapshots[l - 1].t) + ") and snapshot " +
                         std::to_string(l) + " (t=" + fmt(s.t) + ")");
      }
    }
    const double tq = cfg.query_for(c);
    if (tq < 0.0 || tq > c.snapshots.back().t)
      issues.push_back(w + ": query time " + fmt(tq) + " lies outside [0, " +
                       fmt(c.snapshots.back().t) + "]");
    if (cfg.oracle != OracleKind::kNone && c.snapshots.size() != 1)
      issues.push_back(w + ": analytic oracles support a single snapshot");
    if (cfg.oracle == OracleKind::kEx3 && tq != c.snapshots.back().t)
      issues.push_back(w + ": ex3 oracle needs the query time at the snapshot");
    for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
      const MethodSpec& m = cfg.methods[i];
      if ((m.kind == MethodKind::kTwoStage || m.kind == MethodKind::kCpApprox ||
           m.kind == MethodKind::kCpExact) && c.snapshots.size() != 1)
        issues.push_back(w + ": method " + method_label(m) + " supports a single snapshot");
      if (m.kind == MethodKind::kTwoStage && m.t0 &&
          !(*m.t0 >= 0.0 && *m.t0 < c.snapshots.back().t))
        issues.push_back(w + ": method " + method_label(m) + " needs 0 <= t0 < T");
    }
    if (!ordered) continue;

    // Reachability: observed increments must admit nonnegative integer counts.
    const ObservationSplit* split = nullptr;
    std::optional<ObservationSplit> default_split;
    for (const auto& s : splits)
      if (s) {
        split = &*s;
        break;
      }
    if (!split && net.n_observed() > 0) {
      try {
        default_split = build_split(net);
        split = &*default_split;
      } catch (const std::exception&) {
      }
    }
    if (!split) continue;
    bool dims_ok = true;
    for (const auto& s : c.snapshots) dims_ok = dims_ok && s.y.size() == net.n_observed();
    if (!dims_ok) continue;
    auto reachable = [&](const std::vector<std::int64_t>& dy) {
      std::int64_t bound = 16;
      for (auto v : dy) bound += 2 * std::abs(v);
      return find_feasible_counts(*split, dy, bound).has_value();
    };
    std::size_t first = 0;
    if (c.snapshots[0].t == 0.0) {
      for (const auto& [z, p] : cfg.initial)
        if (p > 0.0 && z.size() == n && net.observe(z) != c.snapshots[0].y)
          issues.push_back(w + ": initial state " + state_to_string(z) +
                           " disagrees with the snapshot at t=0");
      first = 1;
    } else {
      bool any = false;
      for (const auto& [z, p] : cfg.initial) {
        if (p <= 0.0 || z.size() != n) continue;
        const State v0 = net.observe(z);
        std::vector<std::int64_t> dy(v0.size());
        for (std::size_t r = 0; r < dy.size(); ++r) dy[r] = c.snapshots[0].y[r] - v0[r];
        if (reachable(dy)) {
          any = true;
          break;
        }
      }
      if (!any)
        issues.push_back(w + ": snapshot 0 (y=" + state_to_string(c.snapshots[0].y) +
                         ") is infeasible from the initial support");
      first = 1;
    }
    for (std::size_t l = std::max<std::size_t>(first, 1); l < c.snapshots.size(); ++l) {
      std::vector<std::int64_t> dy(net.n_observed());
      for (std::size_t r = 0; r < dy.size(); ++r)
        dy[r] = c.snapshots[l].y[r] - c.snapshots[l - 1].y[r];
      if (!reachable(dy))
        issues.push_back(w + ": snapshot " + std::to_string(l) + " (y=" +
                         state_to_string(c.snapshots[l].y) + ") is infeasible from snapshot " +
                         std::to_string(l - 1));
    }
  }
  return issues;
}

std::optional<Pmf> oracle_pmf(const ExperimentConfig& cfg, const CaseSpec& c) {
  if (cfg.oracle == OracleKind::kNone) return std::nullopt;
  require(c.snapshots.size() == 1, "analytic oracles support a single snapshot");
  const State& z0 = point_initial(cfg);
  const double T = c.snapshots[0].t;
  const std::int64_t y = c.snapshots[0].y[0];
  const double tq = cfg.query_for(c);
  switch (cfg.oracle) {
    case OracleKind::kEx1:
      return ex1_cond_pmf(z0[0], y, cfg.network->rate(0), tq, T);
    case OracleKind::kEx2:
      return ex2_cond_pmf(z0, y, rates2(cfg), tq, T);
    case OracleKind::kEx3:
      return ex3_cond_at_T(z0, y, rates4(cfg), T);
    case OracleKind::kNone:
      break;
  }
  return std::nullopt;
}

TrialOutcome run_trial(const ExperimentConfig& cfg, const CaseSpec& c, const MethodSpec& m,
                       const std::optional<Pmf>& oracle, const StreamRng& stream,
                       unsigned threads) {
  const ReactionNetwork& net = *cfg.network;
  const std::size_t N = m.n_particles.value_or(cfg.n_particles);
  const double tq = cfg.query_for(c);
  const double T = c.snapshots.back().t;
  TrialOutcome out;
  out.tve = out.esf_w = out.esf_l = kNaN;
  const auto start = std::chrono::steady_clock::now();

  auto from_ensemble = [&](const WeightedEnsemble& ens, bool poisson, bool girsanov) {
    try {
      out.estimate = empirical_pmf(ens, EnsembleView::kQuery);
      out.esf = ens.esf();
      if (poisson) out.esf_w = ens.esf_poisson();
      if (girsanov) out.esf_l = ens.esf_girsanov();
    } catch (const AllRejectedError&) {
      out.estimate.reset();
      out.esf = 0.0;
    }
  };

  TargetOptions opt;
  opt.max_rejects = m.max_rejects;
  opt.query_time = tq;
  opt.resample_every = m.resample_every;
  opt.record_events = false;
  opt.threads = threads;

  switch (m.kind) {
    case MethodKind::kNaive: {
      auto r = naive_filter(net, cfg.initial, c.snapshots, tq, N, stream, threads);
      out.esf = static_cast<double>(r.accepted) / static_cast<double>(N);
      out.estimate = std::move(r.estimate);
      break;
    }
    case MethodKind::kTargeting: {
      SnapshotFilterConfig fc;
      fc.intensity = m.intensity;
      fc.dt = m.dt;
      fc.mc_paths = m.mc_paths;
      fc.target = opt;
      const std::vector<ObservationSplit> splits{build_split(net, m.free_reactions)};
      try {
        auto res = filter_snapshots(net, splits, cfg.initial, c.snapshots, fc, N, stream);
        from_ensemble(res.intervals.back(), true, true);
      } catch (const AllRejectedError&) {
        out.estimate.reset();
        out.esf = 0.0;
      }
      break;
    }
    case MethodKind::kTwoStage: {
      const auto split = build_split(net, m.free_reactions);
      auto ens = two_stage(net, split, cfg.initial, *m.t0, T, m.mode, c.snapshots[0].y, N,
                           stream, opt);
      from_ensemble(ens, true, true);
      break;
    }
    case MethodKind::kCpExact: {
      auto ens = cp_exact_filter(net.rate(0), cfg.initial, c.snapshots[0].y[0], T, tq, N, stream,
                                 threads);
      from_ensemble(ens, false, false);
      break;
    }
    case MethodKind::kCpApprox: {
      const std::int64_t y = c.snapshots[0].y[0];
      LikelihoodToGo h;
      if (cfg.oracle == OracleKind::kEx1) {
        const double rate = net.rate(0);
        h = [rate, y, T](double t, const State& z) { return ex1_transition(z[0], y, rate, T - t); };
      } else {
        const auto rates = rates2(cfg);
        h = [rates, y, T](double t, const State& z) {
          return ex2_transition(z, z[0] + z[1] - y, rates, T - t);
        };
      }
      auto ens = cp_approx_filter(net, h, cfg.initial, c.snapshots, tq, N, stream, threads);
      from_ensemble(ens, false, false);
      break;
    }
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (out.estimate && oracle) out.tve = tve(*out.estimate, *oracle);
  return out;
}

MethodSummary run_method(const ExperimentConfig& cfg, std::size_t case_idx,
                         std::size_t method_idx, unsigned threads,
                         std::optional<std::size_t> n_trials) {
  const CaseSpec& c = cfg.cases.at(case_idx);
  const MethodSpec& m = cfg.methods.at(method_idx);
  const std::size_t nr = n_trials.value_or(cfg.n_trials);
  const auto oracle = oracle_pmf(cfg, c);

  MethodSummary s;
  s.case_name = c.name;
  s.method = method_name(m.kind);
  s.label = method_label(m);
  s.observation = state_to_string(c.snapshots.back().y);
  s.n_particles = m.n_particles.value_or(cfg.n_particles);
  s.n_trials = nr;

  std::vector<double> esf, esf_w, esf_l, seconds;
  std::map<State, std::vector<double>> per_state;
  std::vector<Pmf> estimates;
  for (std::size_t r = 0; r < nr; ++r) {
    const StreamRng stream(cfg.seed, {static_cast<std::uint64_t>(StreamTag::kTrial), case_idx,
                                      method_idx, r});
    const TrialOutcome t = run_trial(cfg, c, m, oracle, stream, threads);
    seconds.push_back(t.seconds);
    if (m.kind == MethodKind::kNaive) esf.push_back(t.esf);
    if (!t.estimate) continue;
    ++s.trials_ok;
    if (m.kind != MethodKind::kNaive) esf.push_back(t.esf);
    if (!std::isnan(t.esf_w)) esf_w.push_back(t.esf_w);
    if (!std::isnan(t.esf_l)) esf_l.push_back(t.esf_l);
    if (!std::isnan(t.tve)) s.tves.push_back(t.tve);
    estimates.push_back(*t.estimate);
  }
  s.success_fraction = static_cast<double>(s.trials_ok) / static_cast<double>(nr);
  const auto ci = mean_ci(s.tves);
  s.tve_mean = s.tves.empty() ? kNaN : ci.mean;
  s.tve_ci_halfwidth = s.tves.empty() ? kNaN : ci.half_width;
  s.esf = esf.empty() ? kNaN : mean_ci(esf).mean;
  s.esf_w = esf_w.empty() ? kNaN : mean_ci(esf_w).mean;
  s.esf_l = esf_l.empty() ? kNaN : mean_ci(esf_l).mean;
  s.wall_seconds = mean_ci(seconds).mean;

  std::set<State> support;
  if (oracle)
    for (const auto& [z, p] : *oracle) support.insert(z);
  for (const auto& e : estimates)
    for (const auto& [z, p] : e) support.insert(z);
  for (const State& z : support) {
    std::vector<double> vals;
    for (const auto& e : estimates) vals.push_back(e(z));
    const auto st = mean_ci(vals);
    s.distribution.push_back({z, {oracle ? (*oracle)(z) : kNaN, vals.empty() ? kNaN : st.mean,
                                  vals.empty() ? kNaN : st.half_width}});
  }
  return s;
}

void write_outputs(const ExperimentConfig& cfg, const std::vector<MethodSummary>& rows,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream os(out_dir / "results.csv");
    os << "case,method,label,observation,N_s,N_r,trials_ok,success_fraction,tve_mean,"
          "tve_ci_halfwidth,esf_w,esf_l,esf,wall_seconds\n";
    for (const auto& r : rows)
      os << r.case_name << ',' << r.method << ',' << r.label << ",\"" << r.observation << "\","
         << r.n_particles << ',' << r.n_trials << ',' << r.trials_ok << ','
         << fmt(r.success_fraction) << ',' << fmt(r.tve_mean) << ',' << fmt(r.tve_ci_halfwidth)
         << ',' << fmt(r.esf_w) << ',' << fmt(r.esf_l) << ',' << fmt(r.esf) << ','
         << fmt(r.wall_seconds) << '\n';
  }
  for (const auto& r : rows) {
    std::ofstream os(out_dir / ("dist_" + sanitize(r.case_name) + "_" + sanitize(r.label) + ".csv"));
    os << "state,oracle,estimate,ci_halfwidth\n";
    for (const auto& [z, v] : r.distribution)
      os << '"' << state_to_string(z) << "\"," << fmt(v[0]) << ',' << fmt(v[1]) << ','
         << fmt(v[2]) << '\n';
  }
  json summary;
  summary["seed"] = cfg.seed;
  summary["N_s"] = cfg.n_particles;
  summary["N_r"] = cfg.n_trials;
  summary["rows"] = json::array();
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  for (const auto& r : rows) {
    json j;
    j["case"] = r.case_name;
    j["method"] = r.method;
    j["label"] = r.label;
    j["observation"] = r.observation;
    j["N_s"] = r.n_particles;
    j["N_r"] = r.n_trials;
    j["trials_ok"] = r.trials_ok;
    j["success_fraction"] = r.success_fraction;
    j["tve_mean"] = num(r.tve_mean);
    j["tve_ci_halfwidth"] = num(r.tve_ci_halfwidth);
    j["esf_w"] = num(r.esf_w);
    j["esf_l"] = num(r.esf_l);
    j["esf"] = num(r.esf);
    j["wall_seconds"] = r.wall_seconds;
    j["tve_trials"] = r.tves;
    summary["rows"].push_back(std::move(j));
  }
  std::ofstream os(out_dir / "summary.json");
  os << summary.dump(2) << '\n';
}

}  // namespace snapfilter
