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

#include "snapfilter/targeting.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "snapfilter/metrics.hpp"
#include "snapfilter/parallel.hpp"

namespace snapfilter {
namespace {

constexpr auto tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

std::int64_t draw_poisson(double mean, StreamRng& rng) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

std::int64_t draw_binomial(std::int64_t k, double p, StreamRng& rng) {
  if (k <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return k;
  std::binomial_distribution<std::int64_t> dist(k, p);
  return dist(rng);
}

std::vector<double> state_mean(const std::vector<State>& states, std::span<const double> w,
                               std::size_t dim) {
  std::vector<double> mean(dim, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (w[i] <= 0.0) continue;
    total += w[i];
    for (std::size_t s = 0; s < dim; ++s) mean[s] += w[i] * static_cast<double>(states[i][s]);
  }
  if (total <= 0.0) throw AllRejectedError("no weighted state to average");
  for (double& v : mean) v /= total;
  return mean;
}

IntensityGrid with_origin(const IntensityGrid& g, double origin) {
  IntensityGrid out(g.n_reactions(), g.n_cells(), g.dt(), origin);
  for (std::size_t i = 0; i < g.n_reactions(); ++i)
    for (std::size_t j = 0; j < g.n_cells(); ++j) out.at(i, j) = g.at(i, j);
  return out;
}

// Per-particle propagation state inside an interval.
struct Live {
  State z0;
  State z;
  std::vector<std::int64_t> counts;
  PoissonBridge bridge;
  StreamRng rng;
  std::vector<Event> events;
  std::optional<State> query;
  double log_w = 0.0;
  double log_girsanov = 0.0;
  double log_poisson = 0.0;
  std::uint64_t attempts = 0;
  std::int64_t ancestor = -1;
};

}  // namespace

std::vector<double> WeightedEnsemble::log_weights() const {
  std::vector<double> lw(particles.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = particles[i].log_weight;
  return lw;
}

std::vector<double> WeightedEnsemble::weights() const {
  auto lw = log_weights();
  double mx = kLogZero;
  for (double v : lw) mx = std::max(mx, v);
  std::vector<double> w(lw.size(), 0.0);
  if (mx == kLogZero) return w;
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(lw[i] - mx);
  return w;
}

std::vector<double> WeightedEnsemble::normalized_weights() const {
  auto w = weights();
  double total = 0.0;
  for (double v : w) total += v;
  if (total <= 0.0) throw AllRejectedError("every particle has zero weight");
  for (double& v : w) v /= total;
  return w;
}

double WeightedEnsemble::esf() const { return esf_from_log(log_weights()); }

double WeightedEnsemble::esf_poisson() const {
  std::vector<double> lw(particles.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = particles[i].log_poisson_w;
  return esf_from_log(lw);
}

double WeightedEnsemble::esf_girsanov() const {
  std::vector<double> lw(particles.size());
  for (std::size_t i = 0; i < lw.size(); ++i) lw[i] = particles[i].log_girsanov;
  return esf_from_log(lw);
}

InitialSource pmf_source(const Pmf& mu0) {
  auto sampler = std::make_shared<const DiscreteSampler>(mu0);
  return [sampler](StreamRng& rng, std::size_t, std::uint64_t) {
    return InitialDraw{sampler->sample(rng), -1, {}, std::nullopt};
  };
}

InitialSource ensemble_source(const WeightedEnsemble& ens) {
  std::vector<State> states;
  states.reserve(ens.size());
  for (const auto& p : ens.particles) states.push_back(p.z_end);
  const auto w = ens.normalized_weights();
  auto sampler = std::make_shared<const DiscreteSampler>(std::move(states), w);
  std::vector<std::optional<State>> queries;
  queries.reserve(ens.size());
  for (const auto& p : ens.particles) queries.push_back(p.query_state);
  auto q = std::make_shared<const std::vector<std::optional<State>>>(std::move(queries));
  return [sampler, q](StreamRng& rng, std::size_t, std::uint64_t) {
    const std::size_t idx = sampler->sample_index(rng);
    return InitialDraw{sampler->states()[idx], static_cast<std::int64_t>(idx), {}, (*q)[idx]};
  };
}

GridSelector fixed_grid(IntensityGrid grid) {
  require(grid.strictly_positive(), "proposal intensity must be strictly positive");
  auto ptr = std::make_shared<const IntensityGrid>(std::move(grid));
  return [ptr](const State&) { return ptr; };
}

GridSelector per_state_constant_grid(const ReactionNetwork& net, double origin, double end) {
  require(end > origin, "constant grid needs end > origin");
  auto floor = intensity_floor(net);
  return [&net, floor, origin, end](const State& z) {
    auto a = net.propensities(z);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::max(a[i], floor[i]);
    return std::make_shared<const IntensityGrid>(IntensityGrid::constant(a, origin, end));
  };
}

CountsDraw draw_initial_and_counts(const ReactionNetwork& net, const ObservationSplit& split,
                                   const InitialSource& source, const GridSelector& grids,
                                   std::span<const std::int64_t> y, StreamRng& rng,
                                   std::size_t particle, std::uint64_t max_rejects,
                                   const std::atomic<bool>* abort) {
  require(y.size() == net.n_observed(), "target must cover every observed species");
  require(split.n_reactions() == net.n_reactions(), "split does not match the network");
  std::vector<std::int64_t> k_free(split.m1());
  std::vector<std::int64_t> dy(y.size());
  for (std::uint64_t attempt = 0;; ++attempt) {
    if (attempt >= max_rejects)
      throw TargetUnreachableError("no admissible slaved counts after " +
                                       std::to_string(attempt) + " draws for target " +
                                       state_to_string(y),
                                   attempt);
    if (abort && (attempt & 1023) == 1023 && abort->load(std::memory_order_relaxed))
      throw TargetUnreachableError("aborted: another particle exhausted its rejection budget",
                                   attempt);
    InitialDraw d = source(rng, particle, attempt);
    auto grid = grids(d.z0);
    const State v0 = net.observe(d.z0);
    for (std::size_t r = 0; r < y.size(); ++r) dy[r] = y[r] - v0[r];
    const auto totals = grid->row_totals();
    for (std::size_t f = 0; f < split.m1(); ++f)
      k_free[f] = draw_poisson(totals[split.free_idx[f]], rng);
    auto k_slaved = slaved_counts(split, dy, k_free);
    if (!k_slaved) continue;
    double log_w = 0.0;
    for (std::size_t s = 0; s < split.m2(); ++s)
      log_w += poisson_log_pmf((*k_slaved)[s], totals[split.slaved_idx[s]]);
    CountsDraw out;
    out.z0 = d.z0;
    out.counts = split.assemble(k_free, *k_slaved);
    out.log_poisson_w = log_w;
    out.attempts = attempt + 1;
    out.source = std::move(d);
    out.grid = std::move(grid);
    return out;
  }
}

CountsDraw draw_initial_and_counts(const ReactionNetwork& net, const ObservationSplit& split,
                                   const Pmf& mu0, const IntensityGrid& grid,
                                   std::span<const std::int64_t> y, StreamRng& rng,
                                   std::uint64_t max_rejects) {
  return draw_initial_and_counts(net, split, pmf_source(mu0), fixed_grid(grid), y, rng, 0,
                                 max_rejects);
}

PoissonBridge::PoissonBridge(std::shared_ptr<const IntensityGrid> grid,
                             std::span<const std::int64_t> counts)
    : grid_(std::move(grid)), k_(counts.begin(), counts.end()) {
  require(grid_ != nullptr, "bridge needs a grid");
  require(k_.size() == grid_->n_reactions(), "one count per reaction");
  for (auto k : k_) require(k >= 0, "bridge counts must be nonnegative");
  mass_ = grid_->row_totals();
  t_ = grid_->origin();
}

void PoissonBridge::advance(double to, StreamRng& rng, std::vector<Event>& out) {
  const IntensityGrid& g = *grid_;
  const bool flush = to >= g.end();
  const std::size_t m = k_.size();
  std::vector<Event> seg;
  while (cell_ < g.n_cells()) {
    const double ce = g.cell_end(cell_);
    const bool last = cell_ + 1 == g.n_cells();
    const bool whole = flush || to >= ce;
    const double stop = whole ? ce : to;
    if (stop <= t_ && !whole) break;
    const double width = stop - t_;
    seg.clear();
    for (std::size_t i = 0; i < m; ++i) {
      if (k_[i] == 0) continue;
      const double piece = g.at(i, cell_) * width;
      const double p = (whole && last) || piece >= mass_[i] ? 1.0 : piece / mass_[i];
      const std::int64_t r = draw_binomial(k_[i], p, rng);
      for (std::int64_t e = 0; e < r; ++e)
        seg.push_back({t_ + rng.uniform() * width, static_cast<std::uint32_t>(i)});
      k_[i] -= r;
      mass_[i] = std::max(0.0, mass_[i] - piece);
    }
    std::sort(seg.begin(), seg.end());
    out.insert(out.end(), seg.begin(), seg.end());
    t_ = stop;
    if (!whole) break;
    ++cell_;
  }
}

std::vector<Event> interpolate(const IntensityGrid& grid, std::span<const std::int64_t> counts,
                               StreamRng& rng) {
  PoissonBridge bridge(std::make_shared<const IntensityGrid>(grid), counts);
  std::vector<Event> out;
  bridge.advance(grid.end(), rng, out);
  return out;
}

double girsanov_increment(const ReactionNetwork& net, const IntensityGrid& grid, State& z,
                          double from, double to, std::span<const Event> events) {
  const std::size_t m = net.n_reactions();
  const auto eta0 = cumulative(grid, from);
  const auto eta1 = cumulative(grid, to);
  double log_l = 0.0;
  for (std::size_t i = 0; i < m; ++i) log_l += eta1[i] - eta0[i];
  std::vector<double> a(m);
  double t = from;
  bool dead = false;
  auto total = [&] {
    double s = 0.0;
    for (double v : a) s += v;
    return s;
  };
  net.propensities(z, a);
  for (const Event& e : events) {
    log_l -= total() * (e.time - t);
    const double aj = a[e.reaction];
    if (aj <= 0.0) {
      dead = true;
    } else if (!dead) {
      log_l += std::log(aj) - std::log(grid.at(e.reaction, grid.cell_of(e.time)));
    }
    net.fire(e.reaction, z);
    net.propensities(z, a);
    t = e.time;
  }
  log_l -= total() * (to - t);
  return dead ? kLogZero : log_l;
}

double girsanov_log_weight(const ReactionNetwork& net, const IntensityGrid& grid, const State& z0,
                           std::span<const Event> events) {
  State z = z0;
  return girsanov_increment(net, grid, z, grid.origin(), grid.end(), events);
}

std::vector<std::size_t> multinomial_indices(std::span<const double> log_weights, std::size_t n,
                                             StreamRng& rng) {
  double mx = kLogZero;
  for (double v : log_weights) mx = std::max(mx, v);
  if (mx == kLogZero) throw AllRejectedError("cannot resample: every weight is zero");
  std::vector<double> cum(log_weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cum.size(); ++i) {
    acc += std::exp(log_weights[i] - mx);
    cum[i] = acc;
  }
  std::vector<std::size_t> idx(n);
  for (auto& k : idx) {
    const double u = rng.uniform() * acc;
    k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (k >= cum.size()) k = cum.size() - 1;
  }
  return idx;
}

WeightedEnsemble resample(const WeightedEnsemble& ens, StreamRng& rng) {
  const auto idx = multinomial_indices(ens.log_weights(), ens.size(), rng);
  WeightedEnsemble out;
  out.particles.reserve(idx.size());
  for (auto k : idx) {
    out.particles.push_back(ens.particles[k]);
    out.particles.back().log_weight = 0.0;
    out.particles.back().ancestor = static_cast<std::int64_t>(k);
  }
  return out;
}

WeightedEnsemble target_interval(const ReactionNetwork& net, const ObservationSplit& split,
                                 const InitialSource& source, const GridSelector& grids,
                                 std::span<const std::int64_t> y, double origin, double horizon,
                                 std::size_t n_particles, const StreamRng& stream,
                                 const TargetOptions& options) {
  require(horizon > origin, "interval needs horizon > origin");
  require(n_particles > 0, "need at least one particle");
  if (options.resample_every) require(*options.resample_every > 0.0, "resampling period must be > 0");
  const unsigned threads = options.threads;
  const std::size_t m = net.n_reactions();

  std::vector<Live> live(n_particles);
  std::atomic<bool> abort{false};
  parallel_for(n_particles, threads, [&](std::size_t i) {
    Live& p = live[i];
    p.rng = stream.derive({tag(StreamTag::kParticle), i});
    CountsDraw d;
    try {
      d = draw_initial_and_counts(net, split, source, grids, y, p.rng, i, options.max_rejects,
                                  &abort);
    } catch (const TargetUnreachableError&) {
      abort.store(true, std::memory_order_relaxed);
      throw;
    }
    require(std::abs(d.grid->origin() - origin) <= 1e-9 * std::max(1.0, std::abs(origin)) &&
                std::abs(d.grid->end() - horizon) <= 1e-9 * std::max(1.0, std::abs(horizon)),
            "proposal grid must span the targeting interval");
    p.z0 = d.z0;
    p.z = d.z0;
    p.counts = d.counts;
    p.bridge = PoissonBridge(d.grid, d.counts);
    p.log_poisson = d.log_poisson_w;
    p.log_w = d.log_poisson_w;
    p.attempts = d.attempts;
    p.ancestor = d.source.ancestor;
    p.query = d.source.query_state;
    if (options.record_events) p.events = std::move(d.source.prefix);
  });

  const bool want_query = options.query_time && *options.query_time >= origin &&
                          *options.query_time <= horizon;
  if (want_query && *options.query_time == origin)
    for (auto& p : live)
      if (!p.query) p.query = p.z0;

  // Segment boundaries: resampling times, the query time, then the horizon.
  struct Stop {
    double t;
    bool resample;
    bool query;
  };
  std::vector<Stop> stops;
  if (options.resample_every) {
    const double ds = *options.resample_every;
    for (std::size_t k = 1;; ++k) {
      const double t = origin + static_cast<double>(k) * ds;
      if (t >= horizon - 1e-12 * std::max(1.0, horizon)) break;
      stops.push_back({t, true, false});
    }
  }
  if (want_query && *options.query_time > origin && *options.query_time < horizon) {
    const double q = *options.query_time;
    auto it = std::find_if(stops.begin(), stops.end(), [&](const Stop& s) { return s.t == q; });
    if (it != stops.end())
      it->query = true;
    else
      stops.push_back({q, false, true});
  }
  std::sort(stops.begin(), stops.end(), [](const Stop& a, const Stop& b) { return a.t < b.t; });
  stops.push_back({horizon, false, want_query && *options.query_time == horizon});

  double t_prev = origin;
  std::uint64_t round = 0;
  std::vector<Event> dummy;
  for (std::size_t si = 0; si < stops.size(); ++si) {
    const Stop& stop = stops[si];
    const bool final_stop = si + 1 == stops.size();
    parallel_for(n_particles, threads, [&](std::size_t i) {
      Live& p = live[i];
      std::vector<Event> seg;
      const double to = final_stop ? p.bridge.grid().end() : stop.t;
      p.bridge.advance(to, p.rng, seg);
      const double inc = girsanov_increment(net, p.bridge.grid(), p.z, t_prev,
                                            final_stop ? p.bridge.grid().end() : stop.t, seg);
      p.log_w += inc;
      p.log_girsanov += inc;
      if (stop.query && !p.query) p.query = p.z;
      if (options.record_events) p.events.insert(p.events.end(), seg.begin(), seg.end());
    });
    t_prev = stop.t;
    if (!stop.resample) continue;

    std::vector<double> lw(n_particles);
    for (std::size_t i = 0; i < n_particles; ++i) lw[i] = live[i].log_w;
    StreamRng rrng = stream.derive({tag(StreamTag::kResample), round});
    const auto idx = multinomial_indices(lw, n_particles, rrng);
    std::vector<Live> next(n_particles);
    for (std::size_t i = 0; i < n_particles; ++i) {
      next[i] = live[idx[i]];
      next[i].log_w = 0.0;
      next[i].rng = stream.derive({tag(StreamTag::kParticle), i, round + 1});
    }
    live = std::move(next);
    ++round;
  }

  WeightedEnsemble ens;
  ens.particles.resize(n_particles);
  for (std::size_t i = 0; i < n_particles; ++i) {
    Live& p = live[i];
    for (std::size_t j = 0; j < m; ++j)
      require(p.bridge.remaining()[j] == 0, "bridge left unplaced events");
    require(net.observe(p.z) == State(y.begin(), y.end()), "particle missed the target");
    Particle& q = ens.particles[i];
    q.z0 = std::move(p.z0);
    q.origin = origin;
    q.horizon = horizon;
    q.counts = std::move(p.counts);
    q.events = std::move(p.events);
    q.z_end = std::move(p.z);
    q.query_state = std::move(p.query);
    q.log_poisson_w = p.log_poisson;
    q.log_girsanov = p.log_girsanov;
    q.log_weight = p.log_w;
    q.attempts = p.attempts;
    q.ancestor = p.ancestor;
  }
  return ens;
}

WeightedEnsemble two_stage(const ReactionNetwork& net, const ObservationSplit& split,
                           const Pmf& mu0, double t0, double horizon, TwoStageIntensity mode,
                           std::span<const std::int64_t> y, std::size_t n_particles,
                           const StreamRng& stream, const TargetOptions& options) {
  require(t0 >= 0.0 && t0 < horizon, "two-stage split needs 0 <= t0 < horizon");
  require(n_particles > 0, "need at least one particle");
  auto sampler = std::make_shared<const DiscreteSampler>(mu0);
  const bool query_in_stage_one = options.query_time && *options.query_time <= t0;
  const bool keep = options.record_events;

  // Forward phase on [0, t0]; query state recorded when the query lies inside it.
  auto forward = [&net, sampler, t0, query_in_stage_one, keep,
                  q = options.query_time](StreamRng& rng) {
    InitialDraw d;
    d.z0 = sampler->sample(rng);
    std::vector<Event>* ev = keep ? &d.prefix : nullptr;
    if (query_in_stage_one) {
      ssa_advance(net, d.z0, 0.0, *q, rng, ev);
      d.query_state = d.z0;
      ssa_advance(net, d.z0, *q, t0, rng, ev);
    } else {
      ssa_advance(net, d.z0, 0.0, t0, rng, ev);
    }
    return d;
  };

  std::vector<InitialDraw> first(n_particles);
  parallel_for(n_particles, options.threads, [&](std::size_t i) {
    StreamRng rng = stream.derive({tag(StreamTag::kStageOne), i});
    first[i] = forward(rng);
  });

  GridSelector grids;
  if (mode == TwoStageIntensity::kCommonMean) {
    const std::size_t m = net.n_reactions();
    std::vector<double> mean(m, 0.0);
    for (const auto& d : first) {
      const auto a = net.propensities(d.z0);
      for (std::size_t j = 0; j < m; ++j) mean[j] += a[j];
    }
    const auto floor = intensity_floor(net);
    for (std::size_t j = 0; j < m; ++j)
      mean[j] = std::max(mean[j] / static_cast<double>(n_particles), floor[j]);
    grids = fixed_grid(IntensityGrid::constant(mean, t0, horizon));
  } else {
    grids = per_state_constant_grid(net, t0, horizon);
  }

  auto stored = std::make_shared<std::vector<InitialDraw>>(std::move(first));
  InitialSource source = [stored, forward](StreamRng& rng, std::size_t i, std::uint64_t attempt) {
    if (attempt == 0) return std::move((*stored)[i]);
    return forward(rng);
  };

  TargetOptions opt = options;
  if (query_in_stage_one) opt.query_time.reset();
  return target_interval(net, split, source, grids, y, t0, horizon, n_particles, stream, opt);
}

SnapshotFilterResult filter_snapshots(const ReactionNetwork& net,
                                      const std::vector<ObservationSplit>& splits,
                                      const Pmf& mu0, const SnapshotSeq& snaps,
                                      const SnapshotFilterConfig& config, std::size_t n_particles,
                                      const StreamRng& stream) {
  require(!snaps.empty(), "need at least one snapshot");
  require(!mu0.empty(), "initial law is empty");
  require(config.dt > 0.0, "mesh dt must be positive");
  for (std::size_t l = 0; l < snaps.size(); ++l) {
    require(snaps[l].y.size() == net.n_observed(), "snapshot has wrong observed dimension");
    if (l == 0)
      require(snaps[0].t >= 0.0, "snapshot times must be nonnegative");
    else if (!(snaps[l].t > snaps[l - 1].t))
      throw ContractError("snapshot times must increase strictly: snapshot " +
                          std::to_string(l - 1) + " at t=" + std::to_string(snaps[l - 1].t) +
                          " and snapshot " + std::to_string(l) + " at t=" +
                          std::to_string(snaps[l].t));
  }

  std::size_t first = 0;
  if (snaps[0].t == 0.0) {
    for (const auto& [z, p] : mu0)
      if (p > 0.0 && net.observe(z) != snaps[0].y)
        throw ContractError("initial law is inconsistent with the snapshot at t=0");
    first = 1;
  }
  const std::size_t n_intervals = snaps.size() - first;
  require(n_intervals > 0, "need a snapshot after t=0");
  require(splits.size() == 1 || splits.size() == n_intervals,
          "give one split or one split per interval");

  SnapshotFilterResult result;
  InitialSource source = pmf_source(mu0);
  Pmf current = mu0;
  double origin = 0.0;
  for (std::size_t l = 0; l < n_intervals; ++l) {
    const Snapshot& snap = snaps[first + l];
    const ObservationSplit& split = splits.size() == 1 ? splits[0] : splits[l];
    const double len = snap.t - origin;
    const auto n_cells =
        static_cast<std::size_t>(std::max(1.0, std::round(len / config.dt)));
    const double dt = len / static_cast<double>(n_cells);

    std::vector<State> states;
    std::vector<double> w;
    for (const auto& [z, p] : current) {
      states.push_back(z);
      w.push_back(p);
    }
    const auto mean = state_mean(states, w, net.n_species());

    IntensityGrid grid;
    switch (config.intensity) {
      case IntensityKind::kRre:
        grid = lambda1_from_rre(net, mean, origin, snap.t, dt);
        break;
      case IntensityKind::kMonteCarlo:
        grid = with_origin(lambda1_from_mc(net, current, len, dt, config.mc_paths,
                                           stream.derive({tag(StreamTag::kPilot), l})),
                           origin);
        break;
      case IntensityKind::kOptimized: {
        const auto g1 = lambda1_from_rre(net, mean, origin, snap.t, dt);
        std::vector<std::int64_t> dy(net.n_observed());
        for (std::size_t r = 0; r < dy.size(); ++r)
          dy[r] = snap.y[r] - std::llround(mean[net.observed()[r]]);
        grid = lambda2_optimize(split, g1, dy, intensity_lower_bounds(net));
        break;
      }
    }

    TargetOptions opt = config.target;
    if (opt.query_time && !(*opt.query_time >= origin && *opt.query_time <= snap.t))
      opt.query_time.reset();
    const StreamRng interval_stream = l == 0 ? stream : stream.derive({l});
    WeightedEnsemble ens;
    try {
      ens = target_interval(net, split, source, fixed_grid(std::move(grid)), snap.y, origin,
                            snap.t, n_particles, interval_stream, opt);
    } catch (const TargetUnreachableError& e) {
      throw TargetUnreachableError("interval " + std::to_string(l) + " [" +
                                       std::to_string(origin) + ", " + std::to_string(snap.t) +
                                       "]: " + e.what(),
                                   e.attempts());
    }
    result.esf.push_back(ens.esf());
    source = ensemble_source(ens);
    current = empirical_pmf(ens);
    origin = snap.t;
    result.intervals.push_back(std::move(ens));
  }
  return result;
}

}  // namespace snapfilter
