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

#include "snapfilter/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "snapfilter/parallel.hpp"

namespace snapfilter {

State Path::state_at(const ReactionNetwork& net, double t) const {
  State z = initial_state;
  for (const Event& e : events) {
    if (e.time > t) break;
    net.fire(e.reaction, z);
  }
  return z;
}

std::vector<std::int64_t> Path::counts(std::size_t n_reactions) const {
  std::vector<std::int64_t> k(n_reactions, 0);
  for (const Event& e : events) ++k[e.reaction];
  return k;
}

DiscreteSampler::DiscreteSampler(const Pmf& pmf) {
  states_.reserve(pmf.size());
  cumulative_.reserve(pmf.size());
  double acc = 0.0;
  for (const auto& [z, p] : pmf) {
    if (p <= 0.0) continue;
    acc += p;
    states_.push_back(z);
    cumulative_.push_back(acc);
  }
  if (states_.empty()) throw AllRejectedError("initial distribution has no mass");
}

DiscreteSampler::DiscreteSampler(std::vector<State> states, std::span<const double> weights) {
  require(states.size() == weights.size(), "states and weights differ in length");
  double acc = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (!(weights[i] > 0.0)) continue;
    acc += weights[i];
    states_.push_back(std::move(states[i]));
    cumulative_.push_back(acc);
  }
  if (states_.empty()) throw AllRejectedError("weighted source has zero total weight");
}

std::size_t DiscreteSampler::sample_index(StreamRng& rng) const {
  if (states_.size() == 1) return 0;
  const double u = rng.uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                               states_.size() - 1);
}

std::size_t ssa_advance(const ReactionNetwork& net, State& z, double t_from, double t_to,
                        StreamRng& rng, std::vector<Event>* events) {
  const std::size_t m = net.n_reactions();
  std::vector<double> a(m);
  double t = t_from;
  std::size_t fired = 0;
  while (true) {
    net.propensities(z, a);
    double total = 0.0;
    for (double v : a) total += v;
    if (total <= 0.0) break;
    t += -std::log(rng.uniform_pos()) / total;
    if (t > t_to) break;
    double u = rng.uniform() * total;
    std::size_t j = 0;
    for (; j + 1 < m; ++j) {
      if (u < a[j]) break;
      u -= a[j];
    }
    // Guard against round-off selecting a zero-propensity channel at the tail.
    while (a[j] == 0.0 && j > 0) --j;
    net.fire(j, z);
    if (events) events->push_back({t, static_cast<std::uint32_t>(j)});
    ++fired;
  }
  return fired;
}

Path ssa_path(const ReactionNetwork& net, const State& z0, double horizon, StreamRng& rng) {
  require(horizon > 0.0, "horizon must be positive");
  Path p;
  p.initial_state = z0;
  p.horizon = horizon;
  State z = z0;
  ssa_advance(net, z, 0.0, horizon, rng, &p.events);
  return p;
}

NaiveResult naive_filter(const ReactionNetwork& net, const Pmf& mu0, const SnapshotSeq& snaps,
                         double t_query, std::size_t n_particles, const StreamRng& stream,
                         unsigned threads) {
  require(!snaps.empty(), "naive filter needs at least one snapshot");
  for (std::size_t l = 1; l < snaps.size(); ++l)
    require(snaps[l].t > snaps[l - 1].t, "snapshot times must be strictly increasing");
  require(t_query >= 0.0 && t_query <= snaps.back().t, "query time outside the observed window");
  require(n_particles > 0, "need at least one particle");

  // Checkpoints: every snapshot plus the query time, in order.
  struct Checkpoint {
    double t;
    int snapshot;  // -1 for the query point
  };
  std::vector<Checkpoint> cps;
  for (std::size_t l = 0; l < snaps.size(); ++l) cps.push_back({snaps[l].t, static_cast<int>(l)});
  cps.push_back({t_query, -1});
  std::stable_sort(cps.begin(), cps.end(),
                   [](const Checkpoint& a, const Checkpoint& b) { return a.t < b.t; });

  const DiscreteSampler init(mu0);
  std::vector<State> query_states(n_particles);
  std::vector<double> weights(n_particles, 0.0);

  parallel_for(n_particles, threads, [&](std::size_t i) {
    StreamRng rng = stream.derive({static_cast<std::uint64_t>(StreamTag::kParticle), i});
    State z = init.sample(rng);
    double t = 0.0;
    bool ok = true;
    for (const Checkpoint& cp : cps) {
      if (cp.t > t) {
        ssa_advance(net, z, t, cp.t, rng);
        t = cp.t;
      }
      if (cp.snapshot < 0) {
        query_states[i] = z;
      } else if (net.observe(z) != snaps[static_cast<std::size_t>(cp.snapshot)].y) {
        ok = false;
        break;
      }
    }
    weights[i] = ok ? 1.0 : 0.0;
  });

  NaiveResult out;
  out.weights = std::move(weights);
  Pmf est(net.n_species());
  for (std::size_t i = 0; i < n_particles; ++i) {
    if (out.weights[i] > 0.0) {
      est.add(query_states[i], 1.0);
      ++out.accepted;
    }
  }
  if (out.accepted > 0) {
    est.normalize();
    out.estimate = std::move(est);
  }
  return out;
}

}  // namespace snapfilter
