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

#include <atomic>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "snapfilter/intensity.hpp"
#include "snapfilter/network.hpp"
#include "snapfilter/rng.hpp"
#include "snapfilter/simulate.hpp"

namespace snapfilter {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// One filter particle over a targeting interval [origin, horizon].
struct Particle {
  State z0;                          ///< state at the interval origin
  double origin = 0.0;
  double horizon = 0.0;
  std::vector<std::int64_t> counts;  ///< total reaction counts K over the interval
  std::vector<Event> events;         ///< sorted firings (empty unless recorded)
  State z_end;                       ///< state at the horizon
  std::optional<State> query_state;  ///< state at the query time, if it was reached
  double log_poisson_w = 0.0;        ///< log W, the slaved-count Poisson weight
  double log_girsanov = 0.0;         ///< log L~ accumulated along the lineage
  double log_weight = 0.0;           ///< current importance weight (resets on resampling)
  std::uint64_t attempts = 0;        ///< draws needed before the slaved counts were admissible
  std::int64_t ancestor = -1;        ///< index into the source ensemble, if any

  bool rejected() const noexcept { return log_weight == kLogZero; }
};

/// Weighted particle set; weights are exp(log_weight) shifted by the maximum.
struct WeightedEnsemble {
  std::vector<Particle> particles;

  std::size_t size() const noexcept { return particles.size(); }
  std::vector<double> log_weights() const;
  /// Weights rescaled so the largest is 1 (all zero if every particle is rejected).
  std::vector<double> weights() const;
  std::vector<double> normalized_weights() const;
  double esf() const;
  double esf_poisson() const;
  double esf_girsanov() const;
};

/// What an initial-state source hands to the targeting step.
struct InitialDraw {
  State z0;
  std::int64_t ancestor = -1;
  std::vector<Event> prefix;         ///< events that led to z0 (two-stage forward phase)
  std::optional<State> query_state;  ///< already-recorded query state along the lineage
};

/// Source of initial states: (rng, particle index, attempt number) -> draw.
using InitialSource = std::function<InitialDraw(StreamRng&, std::size_t, std::uint64_t)>;
/// Proposal intensity as a function of the particle's initial state.
using GridSelector = std::function<std::shared_ptr<const IntensityGrid>(const State&)>;

InitialSource pmf_source(const Pmf& mu0);
/// Draws from the weighted empirical measure of an ensemble's terminal states.
InitialSource ensemble_source(const WeightedEnsemble& ens);
GridSelector fixed_grid(IntensityGrid grid);
/// Constant intensity max(a(z0), a(1,...,1)) on [origin, end].
GridSelector per_state_constant_grid(const ReactionNetwork& net, double origin, double end);

struct TargetOptions {
  std::uint64_t max_rejects = 1'000'000;
  std::optional<double> query_time;
  std::optional<double> resample_every;  ///< within-interval resampling period
  bool record_events = true;
  unsigned threads = 1;
};

struct CountsDraw {
  State z0;
  std::vector<std::int64_t> counts;
  double log_poisson_w = 0.0;
  std::uint64_t attempts = 0;
  InitialDraw source;
  std::shared_ptr<const IntensityGrid> grid;
};

/*!
 * Joint rejection sampler for the initial state and the total counts.
 *
 * Repeatedly draws z0 from the source and K' ~ Poisson(int lambda') until
 * K'' = G(y - V0, K') is a nonnegative integer vector, then sets
 * log W = sum_i log Poisson(K''_i; int lambda''_i). Throws
 * TargetUnreachableError after `max_rejects` failed attempts.
 */
CountsDraw draw_initial_and_counts(const ReactionNetwork& net, const ObservationSplit& split,
                                   const InitialSource& source, const GridSelector& grids,
                                   std::span<const std::int64_t> y, StreamRng& rng,
                                   std::size_t particle, std::uint64_t max_rejects,
                                   const std::atomic<bool>* abort = nullptr);
CountsDraw draw_initial_and_counts(const ReactionNetwork& net, const ObservationSplit& split,
                                   const Pmf& mu0, const IntensityGrid& grid,
                                   std::span<const std::int64_t> y, StreamRng& rng,
                                   std::uint64_t max_rejects = 1'000'000);

/*!
 * Inhomogeneous Poisson bridge with a fixed number of arrivals per
 * reaction, generated cell by cell by binomial thinning. It can be
 * advanced in pieces, so the future of a path is only drawn when needed.
 */
class PoissonBridge {
 public:
  PoissonBridge() = default;
  PoissonBridge(std::shared_ptr<const IntensityGrid> grid, std::span<const std::int64_t> counts);

  /// Appends, in time order, the arrivals in [time(), to). Passing grid end flushes all remaining.
  void advance(double to, StreamRng& rng, std::vector<Event>& out);
  double time() const noexcept { return t_; }
  const std::vector<std::int64_t>& remaining() const noexcept { return k_; }
  const IntensityGrid& grid() const noexcept { return *grid_; }
  const std::shared_ptr<const IntensityGrid>& grid_ptr() const noexcept { return grid_; }

 private:
  std::shared_ptr<const IntensityGrid> grid_;
  std::vector<std::int64_t> k_;
  std::vector<double> mass_;  // remaining integrated intensity per reaction
  double t_ = 0.0;
  std::size_t cell_ = 0;
};

/// Full bridge on the grid: event list whose per-reaction totals equal `counts`.
std::vector<Event> interpolate(const IntensityGrid& grid, std::span<const std::int64_t> counts,
                               StreamRng& rng);

/*!
 * log L~ contribution of the window [from, to] for a path in state `z`
 * at `from` with the given sorted events inside the window. Advances `z`.
 * Returns -inf if some event fires a reaction with zero propensity.
 */
double girsanov_increment(const ReactionNetwork& net, const IntensityGrid& grid, State& z,
                          double from, double to, std::span<const Event> events);
/// log L~(T) over the whole grid for a path from z0.
double girsanov_log_weight(const ReactionNetwork& net, const IntensityGrid& grid, const State& z0,
                           std::span<const Event> events);

/*!
 * One targeting interval [origin, horizon]: draws (z0, K, W) per particle,
 * interpolates by Poisson bridge, and weights by W times the Girsanov ratio.
 * Every returned particle has observe(z_end) == y.
 */
WeightedEnsemble target_interval(const ReactionNetwork& net, const ObservationSplit& split,
                                 const InitialSource& source, const GridSelector& grids,
                                 std::span<const std::int64_t> y, double origin, double horizon,
                                 std::size_t n_particles, const StreamRng& stream,
                                 const TargetOptions& options = {});

enum class TwoStageIntensity { kCommonMean, kPerParticle };

/*!
 * Unconditional SSA on [0, t0], then targeting on [t0, horizon] with a
 * constant intensity: the ensemble-mean propensity at t0 (floored), or
 * each particle's own floored propensity.
 */
WeightedEnsemble two_stage(const ReactionNetwork& net, const ObservationSplit& split,
                           const Pmf& mu0, double t0, double horizon, TwoStageIntensity mode,
                           std::span<const std::int64_t> y, std::size_t n_particles,
                           const StreamRng& stream, const TargetOptions& options = {});

/// Multinomial resampling: N draws proportional to the weights, output weights uniform.
WeightedEnsemble resample(const WeightedEnsemble& ens, StreamRng& rng);
/// Indices of a multinomial draw of size n from the given log weights.
std::vector<std::size_t> multinomial_indices(std::span<const double> log_weights, std::size_t n,
                                             StreamRng& rng);

enum class IntensityKind { kRre, kMonteCarlo, kOptimized };

struct SnapshotFilterConfig {
  IntensityKind intensity = IntensityKind::kRre;
  double dt = 0.1;
  std::size_t mc_paths = 1000;
  TargetOptions target;
};

struct SnapshotFilterResult {
  std::vector<WeightedEnsemble> intervals;
  std::vector<double> esf;
};

/*!
 * Targeting between successive snapshots. Interval l starts from the
 * weighted empirical measure left by interval l-1 and its proposal grid is
 * rebuilt from that measure's mean state. `splits` holds one split for all
 * intervals or one per interval.
 */
SnapshotFilterResult filter_snapshots(const ReactionNetwork& net,
                                      const std::vector<ObservationSplit>& splits,
                                      const Pmf& mu0, const SnapshotSeq& snaps,
                                      const SnapshotFilterConfig& config, std::size_t n_particles,
                                      const StreamRng& stream);

}  // namespace snapfilter
