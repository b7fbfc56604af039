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

#include <cstdint>
#include <optional>
#include <vector>

#include "snapfilter/network.hpp"
#include "snapfilter/rng.hpp"

namespace snapfilter {

/// One reaction firing.
struct Event {
  double time = 0.0;
  std::uint32_t reaction = 0;

  friend bool operator<(const Event& a, const Event& b) {
    return a.time < b.time || (a.time == b.time && a.reaction < b.reaction);
  }
  friend bool operator==(const Event&, const Event&) = default;
};

/// A sample path on [start, horizon] stored as its initial state and jump list.
struct Path {
  State initial_state;
  std::vector<Event> events;
  double start = 0.0;
  double horizon = 0.0;

  /// State right after all events with time <= t.
  State state_at(const ReactionNetwork& net, double t) const;
  /// Per-reaction firing counts over the whole path.
  std::vector<std::int64_t> counts(std::size_t n_reactions) const;
};

/// Exact observation of the observed block at time t.
struct Snapshot {
  double t = 0.0;
  State y;
};
using SnapshotSeq = std::vector<Snapshot>;

/// Draws states from a finite weighted support by inverse-CDF lookup.
class DiscreteSampler {
 public:
  DiscreteSampler() = default;
  explicit DiscreteSampler(const Pmf& pmf);
  DiscreteSampler(std::vector<State> states, std::span<const double> weights);

  std::size_t sample_index(StreamRng& rng) const;
  const State& sample(StreamRng& rng) const { return states_[sample_index(rng)]; }
  const std::vector<State>& states() const noexcept { return states_; }
  std::size_t size() const noexcept { return states_.size(); }

 private:
  std::vector<State> states_;
  std::vector<double> cumulative_;
};

/*!
 * Direct-method SSA from `z` over (t_from, t_to]. Updates `z` in place and,
 * when `events` is non-null, appends the firings. Returns the number of
 * events. Stops early once the total propensity is zero.
 */
std::size_t ssa_advance(const ReactionNetwork& net, State& z, double t_from, double t_to,
                        StreamRng& rng, std::vector<Event>* events = nullptr);

/// Exact SSA path from z0 on [0, horizon].
Path ssa_path(const ReactionNetwork& net, const State& z0, double horizon, StreamRng& rng);

struct NaiveResult {
  std::optional<Pmf> estimate;  ///< empty when every particle was rejected
  std::vector<double> weights;  ///< 0/1 acceptance indicators
  std::size_t accepted = 0;

  bool all_rejected() const noexcept { return accepted == 0; }
};

/*!
 * Prediction/correction baseline: N_s independent SSA paths from mu0, each
 * accepted iff it reproduces every snapshot. Returns the accepted
 * paths' empirical law of the full state at `t_query`.
 */
NaiveResult naive_filter(const ReactionNetwork& net, const Pmf& mu0, const SnapshotSeq& snaps,
                         double t_query, std::size_t n_particles, const StreamRng& stream,
                         unsigned threads = 1);

}  // namespace snapfilter
