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

// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion ...] [--known-fail N,M]   (default: all of 1-7)

#include <algorithm>
#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>

#include "snapfilter/experiment.hpp"
#include "snapfilter/metrics.hpp"
#include "snapfilter/oracles.hpp"
#include "snapfilter/parallel.hpp"
#include "test_support.hpp"

using namespace snapfilter;
using namespace snapfilter::testing;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = SNAPFILTER_CONFIG_DIR;

// Pinned tolerances.
constexpr double kOracleTol = 1e-8;
constexpr double kOracleRuntime = 60.0;
constexpr double kTable1Lo = 0.05, kTable1Hi = 0.10, kTable1Reported = 0.0722;
constexpr double kNaiveEsfTol = 0.05;
constexpr double kFarWorse = 2.0;  // "much larger" factor for naive vs approximate CP
constexpr double kRejectLo = 0.05, kRejectHi = 0.40;
constexpr double kResampledMax = 0.25, kUnresampledTveMin = 0.8, kUnresampledEsfMax = 0.02;
constexpr double kSqrt20PiRel = 0.02;
constexpr double kLambda2Residual = 1e-9;
constexpr double kMeansTol = 1e-10;

// Trial budgets sized for a single core.
constexpr std::size_t kTable1Trials = 100;
constexpr std::size_t kTable1WideTrials = 1000;
constexpr std::size_t kTable4Trials = 100;
constexpr std::size_t kTable56Trials = 1000;
constexpr std::size_t kTable56InfoTrials = 300;
constexpr std::size_t kTable7Trials = 40;
constexpr std::size_t kTable8Trials = 100;

unsigned threads() { return resolve_threads(0); }

void info(const char* fmt, auto... args) {
  std::printf("    ");
  if constexpr (sizeof...(args) == 0)
    std::fputs(fmt, stdout);
  else
    std::printf(fmt, args...);
  std::printf("\n");
  std::fflush(stdout);
}

std::size_t method_index(const ExperimentConfig& cfg, const std::string& label) {
  for (std::size_t m = 0; m < cfg.methods.size(); ++m)
    if (method_label(cfg.methods[m]) == label) return m;
  throw std::runtime_error("config has no method labelled " + label);
}

MethodSummary run(const ExperimentConfig& cfg, std::size_t c, const std::string& label,
                  std::size_t trials) {
  auto s = run_method(cfg, c, method_index(cfg, label), threads(), trials);
  info("%-8s %-32s tve=%.4f +- %.4f  esf=%.3f  esf_w=%.3f  ok=%zu/%zu", s.case_name.c_str(),
       s.label.c_str(), s.tve_mean, s.tve_ci_halfwidth, s.esf, s.esf_w, s.trials_ok, s.n_trials);
  return s;
}

bool check(bool ok, const char* what) {
  if (!ok) info("failed: %s", what);
  return ok;
}

// 1 -------------------------------------------------------------------------
bool oracle_exactness() {
  const auto start = std::chrono::steady_clock::now();
  bool ok = true;
  const double p4 = ex2_obs_prob(State{10, 0}, 4, {1.0, 1.5}, 1.0);
  const double p7 = ex2_obs_prob(State{10, 0}, 7, {1.0, 1.5}, 1.0);
  info("P(Y(1)=4) = %.6f, P(Y(1)=7) = %.6f", p4, p7);
  ok &= check(std::round(p4 * 1000) == 245, "P(Y=4) rounds to 0.245");
  ok &= check(std::round(p7 * 1000) == 27, "P(Y=7) rounds to 0.027");

  double worst1 = 0.0;
  for (auto [x0, xT] : {std::pair{3, 1}, {40, 17}, {1000, 368}, {1000, 404}})
    for (double t : {0.0, 0.1, 0.25, 0.4, 0.5}) {
      const double c = 2.0, T = 0.5;
      Pmf p = ex1_cond_pmf(x0, xT, c, t, T);
      const double denom = binomial_coef_pmf(xT, x0, std::exp(-c * T));
      for (std::int64_t x = xT; x <= x0; ++x) {
        const double bayes = binomial_coef_pmf(x, x0, std::exp(-c * t)) *
                             binomial_coef_pmf(xT, x, std::exp(-c * (T - t))) / denom;
        worst1 = std::max(worst1, std::abs(p(State{x}) - bayes));
      }
    }
  info("death bridge vs Bayes quotient: max error %.2e", worst1);
  ok &= check(worst1 <= kOracleTol, "death oracle within 1e-8");

  const std::array<double, 4> c{0.5, 1.0, 0.1, 1.0};
  auto net = dimerization(c[0], c[1], c[2], c[3]);
  const std::vector<State> states{{2, 0, 0}, {1, 1, 0}, {0, 2, 0}, {0, 0, 1}};
  std::vector<std::vector<double>> Q(4, std::vector<double>(4, 0.0));
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t j = 0; j < 4; ++j) {
      const double a = net.propensity(j, states[k]);
      if (a <= 0.0) continue;
      State z = states[k];
      net.fire(j, z);
      const auto to = std::find(states.begin(), states.end(), z) - states.begin();
      Q[k][to] += a;
      Q[k][k] -= a;
    }
  double worst3 = 0.0;
  for (double t : {0.1, 0.5, 1.0, 2.0}) {
    auto Qt = Q;
    for (auto& row : Qt)
      for (double& v : row) v *= t;
    auto E = expm(Qt);
    Pmf p = ex3_forward_pmf(State{1, 1, 0}, c, t);
    for (std::size_t k = 0; k < 4; ++k) worst3 = std::max(worst3, std::abs(p(states[k]) - E[1][k]));
  }
  info("dimerization master equation vs matrix exponential: max error %.2e", worst3);
  ok &= check(worst3 <= kOracleTol, "dimerization oracle within 1e-8");

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ok &= check(secs < kOracleRuntime, "runtime under one minute");
  return ok;
}

// 2 -------------------------------------------------------------------------
bool table1() {
  auto cfg = load_config(kConfigs / "table1_ex2_small.json");
  bool ok = true;
  for (std::size_t c = 0; c < cfg.cases.size(); ++c) {
    auto naive = run(cfg, c, "naive", kTable1Trials);
    auto tgt = run(cfg, c, "targeting_lambda1", kTable1Trials);
    const auto y = cfg.cases[c].snapshots[0].y[0];
    const double p = ex2_obs_prob(State{10, 0}, y, {1.0, 1.5}, 1.0);
    info("observation probability %.4f, naive ESF %.4f", p, naive.esf);
    ok &= check(naive.tve_mean > tgt.tve_mean, "naive TVE above targeting TVE");
    ok &= check(std::abs(naive.esf - p) <= kNaiveEsfTol, "naive ESF near observation probability");
    if (cfg.cases[c].name == "common") {
      ok &= check(tgt.tve_mean >= kTable1Lo && tgt.tve_mean <= kTable1Hi, "TVE in [0.05, 0.10]");
      ok &= check(std::abs(tgt.tve_mean - kTable1Reported) <= tgt.tve_ci_halfwidth,
                  "reference 0.0722 inside the 95% interval");
      auto wide = run(cfg, c, "targeting_lambda1", kTable1WideTrials);
      info("wider run (informational): reference %s the interval",
           std::abs(wide.tve_mean - kTable1Reported) <= wide.tve_ci_halfwidth ? "inside" : "outside");
    }
  }
  return ok;
}

// 3 -------------------------------------------------------------------------
bool table4() {
  auto cfg = load_config(kConfigs / "table4_ex1.json");
  bool ok = true;
  for (std::size_t c = 0; c < cfg.cases.size(); ++c) {
    auto naive = run(cfg, c, "naive", kTable4Trials);
    auto tgt = run(cfg, c, "targeting_lambda1", kTable4Trials);
    auto approx = run(cfg, c, "cp_approx", kTable4Trials);
    auto exact = run(cfg, c, "cp_exact", kTable4Trials);
    ok &= check(exact.esf == 1.0, "exact CP ESF exactly 1");
    ok &= check(tgt.esf_w == 1.0, "targeting ESF(W) exactly 1");
    ok &= check(exact.tve_mean <= tgt.tve_mean + exact.tve_ci_halfwidth + tgt.tve_ci_halfwidth,
                "exact CP not worse than targeting");
    ok &= check(tgt.tve_mean < approx.tve_mean, "targeting beats approximate CP");
    ok &= check(naive.tve_mean > kFarWorse * approx.tve_mean, "naive far worse than approximate CP");
    if (cfg.cases[c].name == "rare") {
      const double rejected = 1.0 - naive.success_fraction;
      info("rare naive all-rejected trials: %.0f%%", 100 * rejected);
      ok &= check(rejected >= kRejectLo && rejected <= kRejectHi, "all-rejected incidence 5-40%");
    }
  }
  return ok;
}

// 4 -------------------------------------------------------------------------
bool table56() {
  auto cfg = load_config(kConfigs / "table5_6_ex3_two_stage.json");
  const std::vector<std::string> t0s{"0.5", "0.8", "0.9", "0.99", "0.999"};
  bool ok = true;
  for (std::size_t c = 0; c < cfg.cases.size(); ++c) {
    const double one = std::min(run(cfg, c, "one_stage_lambda1", kTable56Trials).tve_mean,
                                run(cfg, c, "one_stage_lambda2", kTable56Trials).tve_mean);
    for (const std::string mode : {"per_particle", "common"}) {
      const bool primary = mode == "per_particle";
      std::vector<double> tve;
      for (const auto& t0 : t0s)
        tve.push_back(run(cfg, c, "two_stage_" + mode + "_t0=" + t0,
                          primary ? kTable56Trials : kTable56InfoTrials)
                          .tve_mean);
      const auto best = std::min_element(tve.begin(), tve.end()) - tve.begin();
      const bool u = (best == 1 || best == 2) && tve.front() > tve[best] && tve.back() > tve[best];
      info("%s intensity: optimum at t0=%s%s", mode.c_str(), t0s[best].c_str(),
           primary ? "" : " (informational)");
      if (!primary) continue;
      ok &= check(u, "U-shape with interior optimum at t0 in {0.8, 0.9}");
      ok &= check(tve[best] < one, "two-stage optimum beats one-stage targeting");
    }
  }
  return ok;
}

// 5 -------------------------------------------------------------------------
bool table7() {
  auto cfg = load_config(kConfigs / "table7_ex2_resampling.json");
  bool ok = true;
  for (std::size_t c = 0; c < cfg.cases.size(); ++c) {
    auto plain = run(cfg, c, "targeting_lambda1", kTable7Trials);
    auto res = run(cfg, c, "targeting_lambda1_resampled", kTable7Trials);
    ok &= check(res.tve_mean < kResampledMax, "resampled TVE below 0.25");
    ok &= check(plain.tve_mean > kUnresampledTveMin, "unresampled TVE above 0.8");
    ok &= check(plain.esf < kUnresampledEsfMax, "unresampled ESF below 0.02");
  }
  return ok;
}

// 6 -------------------------------------------------------------------------
bool table8() {
  auto cfg = load_config(kConfigs / "table8_ex3_scaling.json");
  bool ok = true;
  double last_naive = 3.0, last_tgt = 3.0;
  for (int n : {1000, 2000, 4000, 8000}) {
    const auto naive = run(cfg, 0, "naive_N" + std::to_string(n), kTable8Trials).tve_mean;
    const auto tgt = run(cfg, 0, "targeting_lambda1_N" + std::to_string(n), kTable8Trials).tve_mean;
    ok &= check(naive < last_naive, "naive TVE decreases with N_s");
    ok &= check(tgt < last_tgt, "targeting TVE decreases with N_s");
    ok &= check(tgt < naive, "targeting beats naive");
    last_naive = naive;
    last_tgt = tgt;
  }
  return ok;
}

// 7 -------------------------------------------------------------------------
bool properties() {
  bool ok = true;
  const unsigned nt = threads();

  // Targeting guarantee across the examples, with and without resampling and over several snapshots.
  {
    std::size_t checked = 0, missed = 0;
    auto tally = [&](const ReactionNetwork& net, const WeightedEnsemble& ens, const State& y) {
      for (const auto& p : ens.particles) {
        ++checked;
        missed += net.observe(p.z_end) != y;
      }
    };
    auto death = pure_death(2.0);
    auto iso = isomerization(1.0, 1.5);
    auto dim = dimerization(0.5, 1.0, 0.1, 1.0);
    SnapshotFilterConfig cfg;
    cfg.target.threads = nt;
    cfg.dt = 0.02;
    for (std::int64_t y : {368, 404}) {
      auto r = filter_snapshots(death, {build_split(death)}, Pmf::point_mass(State{1000}),
                                {{0.5, State{y}}}, cfg, 1000, StreamRng(71, {}));
      tally(death, r.intervals[0], State{y});
    }
    cfg.dt = 0.25;
    SnapshotSeq multi{{1.0, State{40}}, {2.5, State{55}}, {4.0, State{30}}};
    for (auto every : {std::optional<double>{}, std::optional<double>{0.25}}) {
      cfg.target.resample_every = every;
      auto r = filter_snapshots(iso, {build_split(iso, std::vector<std::size_t>{0})},
                                Pmf::point_mass(State{100, 100}), multi, cfg, 1000, StreamRng(72, {}));
      for (std::size_t l = 0; l < multi.size(); ++l) tally(iso, r.intervals[l], multi[l].y);
    }
    cfg.target.resample_every.reset();
    cfg.dt = 0.1;
    for (std::int64_t y : {24, 20}) {
      auto r = filter_snapshots(dim, {build_split(dim, std::vector<std::size_t>{0, 1, 2})},
                                Pmf::point_mass(State{20, 20, 20}), {{1.0, State{y}}}, cfg, 1000,
                                StreamRng(73, {}));
      tally(dim, r.intervals[0], State{y});
      TargetOptions opt;
      opt.threads = nt;
      auto two = two_stage(dim, build_split(dim, std::vector<std::size_t>{0, 1, 2}),
                           Pmf::point_mass(State{20, 20, 20}), 0.9, 1.0,
                           TwoStageIntensity::kPerParticle, State{y}, 1000, StreamRng(74, {}), opt);
      tally(dim, two, State{y});
    }
    info("targeting guarantee: %zu of %zu particles on target", checked - missed, checked);
    ok &= check(missed == 0 && checked > 0, "every particle hits its snapshot");
  }

  // Interpolation count conservation.
  {
    auto dim = dimerization(0.5, 1.0, 0.1, 1.0);
    auto grid = lambda1_from_rre(dim, State{20, 20, 20}, 1.0, 0.1);
    std::mt19937_64 gen(75);
    std::uniform_int_distribution<std::int64_t> k(0, 60);
    StreamRng rng(75, {});
    std::size_t bad = 0;
    for (int r = 0; r < 10000; ++r) {
      std::vector<std::int64_t> K{k(gen), k(gen), k(gen), k(gen)};
      auto ev = interpolate(grid, K, rng);
      std::vector<std::int64_t> got(4, 0);
      for (const auto& e : ev) ++got[e.reaction];
      bad += got != K;
    }
    info("interpolation: %zu of 10000 count vectors changed", bad);
    ok &= check(bad == 0, "interpolation conserves counts exactly");
  }

  // Girsanov martingale.
  {
    auto iso = isomerization(1.0, 1.5);
    auto grid = lambda1_from_rre(iso, State{5, 3}, 1.0, 0.25);
    const auto totals = grid.row_totals();
    const int n = 100000;
    std::vector<double> L(n);
    StreamRng rng(76, {});
    for (int r = 0; r < n; ++r) {
      std::vector<std::int64_t> K(2);
      for (std::size_t i = 0; i < 2; ++i) K[i] = std::poisson_distribution<std::int64_t>(totals[i])(rng);
      L[r] = std::exp(girsanov_log_weight(iso, grid, State{5, 3}, interpolate(grid, K, rng)));
    }
    auto m = moments(L);
    info("Girsanov weight mean %.4f (3 sigma = %.4f)", m.mean, 3 * m.se);
    ok &= check(std::abs(m.mean - 1.0) <= 3 * m.se, "Girsanov mean one within 3 sigma");
  }

  // Poisson bridge marginal.
  {
    IntensityGrid grid(1, 4, 0.25);
    for (std::size_t j = 0; j < 4; ++j) grid.at(0, j) = 1.3;
    const int k = 12, n = 100000;
    std::vector<double> obs(k + 1, 0.0);
    StreamRng rng(77, {});
    for (int r = 0; r < n; ++r) {
      auto ev = interpolate(grid, std::vector<std::int64_t>{k}, rng);
      obs[std::count_if(ev.begin(), ev.end(), [](const Event& e) { return e.time <= 0.3; })] += 1;
    }
    double stat = 0.0, o = 0.0, e = 0.0;
    int cells = 0;
    for (int i = 0; i <= k; ++i) {
      o += obs[i];
      e += n * binomial_coef_pmf(i, k, 0.3);
      if (e >= 5.0 || i == k) {
        stat += (o - e) * (o - e) / e;
        ++cells;
        o = e = 0.0;
      }
    }
    // 99.9% quantile by the Wilson-Hilferty approximation.
    const double dof = cells - 1, z = 3.0902;
    const double crit = dof * std::pow(1 - 2 / (9 * dof) + z * std::sqrt(2 / (9 * dof)), 3);
    info("bridge marginal chi-square %.2f on %d dof (critical %.2f)", stat, cells - 1, crit);
    ok &= check(stat < crit, "bridge marginal is Binomial(k, t/T)");
  }

  // Constrained intensity residual.
  {
    double worst = 0.0;
    auto iso = isomerization(1.0, 1.5);
    auto split = build_split(iso, std::vector<std::size_t>{0});
    auto g1 = lambda1_from_rre(iso, State{10, 0}, 1.0, 0.1);
    for (std::int64_t dy = -4; dy <= 10; ++dy) {
      auto g = lambda2_optimize(split, g1, std::vector<std::int64_t>{dy}, intensity_lower_bounds(iso));
      worst = std::max(worst, std::abs(g.row_total(0) - g.row_total(1) - dy));
    }
    auto dim = dimerization(0.5, 1.0, 0.1, 1.0);
    auto dsplit = build_split(dim, std::vector<std::size_t>{0, 1, 2});
    auto d1 = lambda1_from_rre(dim, State{20, 20, 20}, 1.0, 0.1);
    for (std::int64_t dy = -15; dy <= 15; ++dy) {
      auto g = lambda2_optimize(dsplit, d1, std::vector<std::int64_t>{dy}, intensity_lower_bounds(dim));
      worst = std::max(worst, std::abs(g.row_total(2) - g.row_total(3) - dy));
    }
    info("constrained intensity: worst constraint residual %.2e", worst);
    ok &= check(worst <= kLambda2Residual, "constraint residual at most 1e-9");
  }

  // Lattice diagnostic.
  {
    const std::vector<double> f{0.0}, s{10.0};
    auto base = appendix_a_diagnostic(f, s, {{1}}, std::vector<std::int64_t>{10});
    const double factor = base.esf_poisson / base.esf_indicator;
    info("M''=10 improvement factor %.3f vs sqrt(20 pi) = %.3f", factor,
         std::sqrt(20 * std::numbers::pi));
    ok &= check(std::abs(factor / std::sqrt(20 * std::numbers::pi) - 1) <= kSqrt20PiRel,
                "improvement factor near sqrt(20 pi)");
    std::mt19937_64 gen(78);
    std::uniform_real_distribution<double> mean(0.2, 5.0);
    std::uniform_int_distribution<int> coef(-1, 2), off(0, 3), dims(1, 2);
    int tested = 1, failed = !(std::abs(base.mean_poisson - base.mean_indicator) <= kMeansTol && base.bound_ok);
    while (tested < 100) {
      const int m1 = dims(gen), m2 = dims(gen);
      std::vector<double> fm(m1), sm(m2);
      for (double& v : fm) v = mean(gen);
      for (double& v : sm) v = mean(gen);
      std::vector<std::vector<std::int64_t>> C(m2, std::vector<std::int64_t>(m1));
      for (auto& row : C)
        for (auto& v : row) v = coef(gen);
      std::vector<std::int64_t> d(m2);
      for (auto& v : d) v = off(gen);
      auto r = appendix_a_diagnostic(fm, sm, C, d);
      if (r.mean_indicator == 0.0) continue;
      ++tested;
      failed += !(std::abs(r.mean_poisson - r.mean_indicator) <= kMeansTol && r.bound_ok);
    }
    info("lattice diagnostic: %d of %d instances violate the identity or the bound", failed, tested);
    ok &= check(failed == 0, "equal means and ESF bound on every instance");
  }

  // Replay across worker counts.
  {
    auto cfg = load_config(kConfigs / "table1_ex2_small.json");
    cfg.n_particles = 300;
    bool same = true;
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      auto a = run_method(cfg, 0, m, 1, 3);
      auto b = run_method(cfg, 0, m, 4, 3);
      same &= a.tves == b.tves && a.esf == b.esf;
    }
    auto t7 = load_config(kConfigs / "table7_ex2_resampling.json");
    t7.n_particles = 200;
    const auto m = method_index(t7, "targeting_lambda1_resampled");
    same &= run_method(t7, 0, m, 1, 2).tves == run_method(t7, 0, m, 3, 2).tves;
    info("replay with 1 and 3-4 workers: %s", same ? "bit-identical" : "different");
    ok &= check(same, "deterministic replay across worker counts");
  }
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<bool()>>> criteria{
      {"oracle exactness", oracle_exactness},
      {"Example 2 small system table", table1},
      {"Example 1 method comparison", table4},
      {"two-stage split point trend", table56},
      {"resampling on the long horizon", table7},
      {"sample-size scaling", table8},
      {"property suite", properties},
  };
  std::vector<int> picked, known;
  CLI::App app{"Acceptance suite: one PASS/FAIL line per criterion."};
  app.add_option("criteria", picked, "criteria to run (default: all)")->check(CLI::Range(1, 7));
  app.add_option("--known-fail", known, "criteria whose FAIL does not set the exit code")
      ->delimiter(',')
      ->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(picked.begin(), picked.end());
  const std::set<int> tolerated(known.begin(), known.end());
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = criteria[k].second();
    } catch (const std::exception& e) {
      info("error: %s", e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, criteria[k].first, secs);
    std::fflush(stdout);
    if (!ok && tolerated.count(id)) info("known failure, exit code unaffected");
    failures += !ok && !tolerated.count(id);
  }
  return failures == 0 ? 0 : 1;
}
