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

#include "snapfilter/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "snapfilter/targeting.hpp"

namespace snapfilter {

double poisson_log_pmf(std::int64_t k, double mean) {
  if (k < 0) return kLogZero;
  if (mean <= 0.0) return k == 0 ? 0.0 : kLogZero;
  const double kd = static_cast<double>(k);
  return kd * std::log(mean) - mean - std::lgamma(kd + 1.0);
}

double esf(std::span<const double> weights) {
  require(!weights.empty(), "no weights");
  double mx = 0.0;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), "weights must be finite and nonnegative");
    mx = std::max(mx, w);
  }
  if (mx <= 0.0) throw AllRejectedError("every weight is zero");
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w / mx;
    s2 += (w / mx) * (w / mx);
  }
  return s * s / (static_cast<double>(weights.size()) * s2);
}

double esf_from_log(std::span<const double> log_weights) {
  require(!log_weights.empty(), "no weights");
  double mx = kLogZero;
  for (double v : log_weights) mx = std::max(mx, v);
  if (mx == kLogZero) throw AllRejectedError("every weight is zero");
  std::vector<double> w(log_weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(log_weights[i] - mx);
  return esf(w);
}

Pmf empirical_pmf(std::span<const State> states, std::span<const double> weights) {
  require(states.size() == weights.size(), "one weight per state");
  require(!states.empty(), "no states");
  Pmf out(states.front().size());
  for (std::size_t i = 0; i < states.size(); ++i)
    if (weights[i] > 0.0) out.add(states[i], weights[i]);
  if (out.empty()) throw AllRejectedError("every weight is zero");
  out.normalize();
  return out;
}

Pmf empirical_pmf(const WeightedEnsemble& ens, EnsembleView view,
                  const std::function<State(const State&)>& project) {
  require(ens.size() > 0, "empty ensemble");
  const auto w = ens.weights();
  std::vector<State> states;
  std::vector<double> kept;
  for (std::size_t i = 0; i < ens.size(); ++i) {
    if (w[i] <= 0.0) continue;
    const Particle& p = ens.particles[i];
    const State* z = &p.z_end;
    if (view == EnsembleView::kQuery) {
      if (!p.query_state) throw ContractError("particle has no recorded query state");
      z = &*p.query_state;
    }
    states.push_back(project ? project(*z) : *z);
    kept.push_back(w[i]);
  }
  if (states.empty()) throw AllRejectedError("every particle has zero weight");
  return empirical_pmf(states, kept);
}

double tve(const Pmf& estimate, const Pmf& oracle) {
  double d = 0.0;
  for (const auto& [z, p] : estimate) d += std::abs(p - oracle(z));
  for (const auto& [z, p] : oracle)
    if (!estimate.entries().count(z)) d += std::abs(p);
  return d;
}

MeanCi mean_ci(std::span<const double> values) {
  MeanCi r;
  r.n = values.size();
  if (r.n == 0) return r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(r.n);
  if (r.n < 2) return r;
  double ss = 0.0;
  for (double v : values) ss += (v - r.mean) * (v - r.mean);
  const double sd = std::sqrt(ss / static_cast<double>(r.n - 1));
  r.half_width = 1.959963984540054 * sd / std::sqrt(static_cast<double>(r.n));
  return r;
}

namespace {

std::int64_t default_cap(double mean, std::size_t truncation) {
  if (truncation > 0) return static_cast<std::int64_t>(truncation);
  return static_cast<std::int64_t>(std::ceil(mean + 12.0 * std::sqrt(mean) + 10.0));
}

// Calls f(k) for every k in the box [0, caps].
template <class F>
void for_each_lattice(const std::vector<std::int64_t>& caps, F&& f) {
  std::vector<std::int64_t> k(caps.size(), 0);
  while (true) {
    f(k);
    std::size_t i = 0;
    for (; i < k.size(); ++i) {
      if (k[i] < caps[i]) {
        ++k[i];
        break;
      }
      k[i] = 0;
    }
    if (i == k.size()) return;
  }
}

}  // namespace

LatticeWeightResult appendix_a_diagnostic(std::span<const double> free_means,
                                          std::span<const double> slaved_means,
                                          const std::vector<std::vector<std::int64_t>>& C,
                                          std::span<const std::int64_t> d, std::size_t truncation) {
  const std::size_t m1 = free_means.size();
  const std::size_t m2 = slaved_means.size();
  require(m2 > 0, "need at least one slaved coordinate");
  require(C.size() == m2 && d.size() == m2, "C must be m2 x m1 and d of length m2");
  for (const auto& row : C) require(row.size() == m1, "C must be m2 x m1");

  std::vector<std::int64_t> cap_free(m1), cap_slaved(m2);
  for (std::size_t i = 0; i < m1; ++i) cap_free[i] = default_cap(free_means[i], truncation);
  for (std::size_t i = 0; i < m2; ++i) cap_slaved[i] = default_cap(slaved_means[i], truncation);

  auto target_of = [&](const std::vector<std::int64_t>& kf) {
    std::vector<std::int64_t> t(m2);
    for (std::size_t r = 0; r < m2; ++r) {
      t[r] = d[r];
      for (std::size_t c = 0; c < m1; ++c) t[r] += C[r][c] * kf[c];
    }
    return t;
  };
  auto log_p_free = [&](const std::vector<std::int64_t>& kf) {
    double lp = 0.0;
    for (std::size_t c = 0; c < m1; ++c) lp += poisson_log_pmf(kf[c], free_means[c]);
    return lp;
  };

  LatticeWeightResult r;
  // Poisson weight: W_p(k') = P(R'' = C k' + d) evaluated in closed form.
  for_each_lattice(cap_free, [&](const std::vector<std::int64_t>& kf) {
    const auto t = target_of(kf);
    double lw = 0.0;
    for (std::size_t s = 0; s < m2; ++s) lw += poisson_log_pmf(t[s], slaved_means[s]);
    const double w = std::exp(lw);
    const double p = std::exp(log_p_free(kf));
    r.mean_poisson += p * w;
    r.second_poisson += p * w * w;
    r.rho_bar = std::max(r.rho_bar, w);
  });
  // Indicator weight: enumerate the joint lattice and test the event directly.
  std::vector<std::int64_t> caps = cap_free;
  caps.insert(caps.end(), cap_slaved.begin(), cap_slaved.end());
  for_each_lattice(caps, [&](const std::vector<std::int64_t>& k) {
    const std::vector<std::int64_t> kf(k.begin(), k.begin() + static_cast<std::ptrdiff_t>(m1));
    const auto t = target_of(kf);
    for (std::size_t s = 0; s < m2; ++s)
      if (k[m1 + s] != t[s]) return;
    double lp = log_p_free(kf);
    for (std::size_t s = 0; s < m2; ++s) lp += poisson_log_pmf(k[m1 + s], slaved_means[s]);
    r.mean_indicator += std::exp(lp);
  });
  r.second_indicator = r.mean_indicator;
  if (r.second_poisson > 0.0) r.esf_poisson = r.mean_poisson * r.mean_poisson / r.second_poisson;
  r.esf_indicator = r.mean_indicator;
  r.bound_ok = r.rho_bar > 0.0 &&
               r.esf_poisson >= r.esf_indicator / r.rho_bar * (1.0 - 1e-12) - 1e-15;
  return r;
}

}  // namespace snapfilter
