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

#include "snapfilter/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "snapfilter/metrics.hpp"
#include "snapfilter/parallel.hpp"

namespace snapfilter {

double binomial_pmf(std::int64_t k, std::int64_t n, double p) {
  if (n < 0 || k < 0 || k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  const double nd = static_cast<double>(n), kd = static_cast<double>(k);
  const double lc = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
  return std::exp(lc + kd * std::log(p) + (nd - kd) * std::log1p(-p));
}

double ex1_transition(std::int64_t x1, std::int64_t x2, double c, double dt) {
  require(dt >= 0.0 && c >= 0.0, "rate and time step must be nonnegative");
  return binomial_pmf(x2, x1, std::exp(-c * dt));
}

Pmf ex1_cond_pmf(std::int64_t x0, std::int64_t xT, double c, double t, double T) {
  require(c > 0.0 && T > 0.0 && t >= 0.0 && t <= T, "need c > 0 and 0 <= t <= T, T > 0");
  if (xT > x0 || xT < 0) throw OracleError("terminal count is not reachable by pure death");
  const double p = -std::expm1(-c * t) / -std::expm1(-c * T);
  const std::int64_t n = x0 - xT;
  Pmf out(1);
  for (std::int64_t d = 0; d <= n; ++d) {
    const double q = binomial_pmf(d, n, p);
    if (q > 0.0) out.add({x0 - d}, q);
  }
  return out;
}

double ex1_cond_propensity(std::int64_t x_t, std::int64_t x_T, double c, double t, double T) {
  require(t < T && c > 0.0, "need t < T and c > 0");
  require(x_t >= x_T, "current count is below the terminal count");
  return c * static_cast<double>(x_t - x_T) / -std::expm1(-c * (T - t));
}

double ex1_wait_sample(std::int64_t x_t, std::int64_t x_T, double c, double t, double T,
                       double u) {
  require(t < T && c > 0.0, "need t < T and c > 0");
  require(x_t >= x_T, "current count is below the terminal count");
  require(u >= 0.0 && u <= 1.0, "u must lie in [0, 1]");
  if (x_t == x_T) return kBeyondHorizon;
  const double tau = T - t;
  const double e = std::exp(-c * tau);
  const double root = std::pow(1.0 - u, 1.0 / static_cast<double>(x_t - x_T));
  const double s = -std::log(e + root * (1.0 - e)) / c;
  return std::clamp(s, 0.0, tau);
}

std::array<std::array<double, 2>, 2> TwoStateKernel::P(double t) const {
  const double s = c1 + c2;
  if (s <= 0.0) return {{{1.0, 0.0}, {0.0, 1.0}}};
  const double e = std::exp(-s * t);
  const double p11 = c2 / s + c1 / s * e;
  const double p21 = c2 / s * (1.0 - e);
  return {{{p11, 1.0 - p11}, {p21, 1.0 - p21}}};
}

double ex2_transition(const State& z0, std::int64_t zt1, std::array<double, 2> c, double dt) {
  require(z0.size() == 2, "state must have two species");
  require(dt >= 0.0, "time step must be nonnegative");
  const auto P = TwoStateKernel{c[0], c[1]}.P(dt);
  double sum = 0.0;
  for (std::int64_t k = 0; k <= z0[0]; ++k)
    sum += binomial_pmf(k, z0[0], P[0][0]) * binomial_pmf(zt1 - k, z0[1], P[1][0]);
  return sum;
}

double ex2_obs_prob(const State& z0, std::int64_t yT, std::array<double, 2> c, double T) {
  return ex2_transition(z0, z0[0] + z0[1] - yT, c, T);
}

Pmf ex2_cond_pmf(const State& z0, std::int64_t yT, std::array<double, 2> c, double t, double T) {
  require(t >= 0.0 && t <= T, "need 0 <= t <= T");
  const std::int64_t n = z0[0] + z0[1];
  const double p_obs = ex2_obs_prob(z0, yT, c, T);
  if (!(p_obs > 0.0)) throw OracleError("observation has zero probability");
  Pmf out(2);
  for (std::int64_t z1 = 0; z1 <= n; ++z1) {
    const double fwd = ex2_transition(z0, z1, c, t);
    const double back = ex2_transition({z1, n - z1}, n - yT, c, T - t);
    const double q = fwd * back / p_obs;
    if (q > 0.0) out.add({z1, n - z1}, q);
  }
  out.normalize();
  return out;
}

namespace {

struct Ex3Space {
  std::vector<State> states;
  std::map<State, std::size_t> index;
};

Ex3Space ex3_space(const State& z0) {
  require(z0.size() == 3, "state must have three species");
  for (auto v : z0) require(v >= 0, "state must be nonnegative");
  const std::int64_t k = z0[0] + z0[1] + 2 * z0[2];
  Ex3Space sp;
  for (std::int64_t z3 = 0; 2 * z3 <= k; ++z3)
    for (std::int64_t z1 = 0; z1 <= k - 2 * z3; ++z1) {
      State z{z1, k - 2 * z3 - z1, z3};
      sp.index.emplace(z, sp.states.size());
      sp.states.push_back(std::move(z));
    }
  return sp;
}

}  // namespace

Pmf ex3_forward_pmf(const State& z0, std::array<double, 4> c, double t) {
  require(t >= 0.0, "time must be nonnegative");
  const Ex3Space sp = ex3_space(z0);
  const std::size_t n = sp.states.size();
  // Sparse generator: per state, outgoing (target, rate).
  std::vector<std::vector<std::pair<std::size_t, double>>> out(n);
  std::vector<double> exit(n, 0.0);
  double max_exit = 0.0;
  static constexpr int kDelta[4][3] = {{-1, 1, 0}, {1, -1, 0}, {-1, -1, 1}, {1, 1, -1}};
  for (std::size_t s = 0; s < n; ++s) {
    const State& z = sp.states[s];
    const double a[4] = {c[0] * z[0], c[1] * z[1], c[2] * z[0] * z[1], c[3] * z[2]};
    for (int j = 0; j < 4; ++j) {
      if (a[j] <= 0.0) continue;
      State w{z[0] + kDelta[j][0], z[1] + kDelta[j][1], z[2] + kDelta[j][2]};
      out[s].push_back({sp.index.at(w), a[j]});
      exit[s] += a[j];
    }
    max_exit = std::max(max_exit, exit[s]);
  }
  auto rhs = [&](const std::vector<double>& p, std::vector<double>& dp) {
    for (std::size_t s = 0; s < n; ++s) dp[s] = -exit[s] * p[s];
    for (std::size_t s = 0; s < n; ++s)
      for (const auto& [w, r] : out[s]) dp[w] += r * p[s];
  };
  std::vector<double> p(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n);
  p[sp.index.at(z0)] = 1.0;
  if (t > 0.0) {
    const double h_max = max_exit > 0.0 ? std::min(1e-3, 0.5 / max_exit) : 1e-3;
    const auto steps = static_cast<std::size_t>(std::ceil(t / h_max));
    const double h = t / static_cast<double>(steps);
    for (std::size_t it = 0; it < steps; ++it) {
      rhs(p, k1);
      for (std::size_t s = 0; s < n; ++s) tmp[s] = p[s] + 0.5 * h * k1[s];
      rhs(tmp, k2);
      for (std::size_t s = 0; s < n; ++s) tmp[s] = p[s] + 0.5 * h * k2[s];
      rhs(tmp, k3);
      for (std::size_t s = 0; s < n; ++s) tmp[s] = p[s] + h * k3[s];
      rhs(tmp, k4);
      for (std::size_t s = 0; s < n; ++s)
        p[s] += h / 6.0 * (k1[s] + 2.0 * k2[s] + 2.0 * k3[s] + k4[s]);
    }
  }
  Pmf pmf(3);
  for (std::size_t s = 0; s < n; ++s)
    if (p[s] > 0.0) pmf.add(sp.states[s], p[s]);
  return pmf;
}

Pmf ex3_cond_at_T(const State& z0, std::int64_t yT, std::array<double, 4> c, double T) {
  const Pmf p = ex3_forward_pmf(z0, c, T);
  Pmf out(3);
  for (const auto& [z, q] : p)
    if (z[2] == yT && q > 0.0) out.add(z, q);
  if (out.empty() || !(out.total() > 0.0))
    throw OracleError("observation lies outside the reachable support");
  out.normalize();
  return out;
}

WeightedEnsemble cp_exact_filter(double c, const Pmf& mu0, std::int64_t xT, double T,
                                 std::optional<double> t_query, std::size_t n_particles,
                                 const StreamRng& stream, unsigned threads) {
  require(c > 0.0 && T > 0.0, "need c > 0 and T > 0");
  require(n_particles > 0, "need at least one particle");
  require(mu0.dim() == 1, "pure death has one species");
  const DiscreteSampler init(mu0);
  WeightedEnsemble ens;
  ens.particles.resize(n_particles);
  parallel_for(n_particles, threads, [&](std::size_t i) {
    StreamRng rng = stream.derive({static_cast<std::uint64_t>(StreamTag::kParticle), i});
    Particle& p = ens.particles[i];
    p.z0 = init.sample(rng);
    p.horizon = T;
    std::int64_t x = p.z0[0];
    p.log_weight = std::log(ex1_transition(x, xT, c, T));
    p.log_poisson_w = p.log_weight;
    if (p.rejected()) {
      p.z_end = {x};
      return;
    }
    double t = 0.0;
    bool recorded = false;
    while (x > xT) {
      const double s = ex1_wait_sample(x, xT, c, t, T, rng.uniform());
      const double next = t + s;
      if (t_query && !recorded && next > *t_query) {
        p.query_state = State{x};
        recorded = true;
      }
      t = next;
      --x;
      p.events.push_back({t, 0});
    }
    if (t_query && !recorded) p.query_state = State{x};
    p.z_end = {x};
    p.counts = {static_cast<std::int64_t>(p.events.size())};
  });
  return ens;
}

WeightedEnsemble cp_approx_filter(const ReactionNetwork& net, const LikelihoodToGo& h,
                                  const Pmf& mu0, const SnapshotSeq& snaps,
                                  std::optional<double> t_query, std::size_t n_particles,
                                  const StreamRng& stream, unsigned threads) {
  require(snaps.size() == 1, "the conditional-propensity filter takes a single snapshot");
  require(snaps[0].t > 0.0, "snapshot must lie after t = 0");
  require(n_particles > 0, "need at least one particle");
  const double T = snaps[0].t;
  const State& y = snaps[0].y;
  const std::size_t m = net.n_reactions();
  const DiscreteSampler init(mu0);
  WeightedEnsemble ens;
  ens.particles.resize(n_particles);
  parallel_for(n_particles, threads, [&](std::size_t i) {
    StreamRng rng = stream.derive({static_cast<std::uint64_t>(StreamTag::kParticle), i});
    Particle& p = ens.particles[i];
    p.z0 = init.sample(rng);
    p.horizon = T;
    State z = p.z0;
    std::vector<double> a(m), b(m);
    std::vector<std::int64_t> counts(m, 0);
    double t = 0.0, log_l = 0.0;
    bool dead = false, recorded = false;
    while (true) {
      net.propensities(z, a);
      const double hz = h(t, z);
      double A = 0.0, B = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        A += a[j];
        if (a[j] <= 0.0 || !(hz > 0.0)) {
          b[j] = 0.0;
          continue;
        }
        State w = z;
        net.fire(j, w);
        b[j] = a[j] * h(t, w) / hz;
        B += b[j];
      }
      if (!(hz > 0.0)) dead = true;
      const double wait = B > 0.0 ? -std::log(rng.uniform_pos()) / B : kBeyondHorizon;
      const double next = std::min(t + wait, T);
      if (t_query && !recorded && next > *t_query) {
        p.query_state = z;
        recorded = true;
      }
      log_l -= (A - B) * (next - t);
      if (!(t + wait < T)) break;
      double u = rng.uniform() * B;
      std::size_t j = 0;
      while (j + 1 < m && (u >= b[j] || b[j] <= 0.0)) {
        u -= b[j];
        ++j;
      }
      log_l += std::log(a[j]) - std::log(b[j]);
      net.fire(j, z);
      ++counts[j];
      t = next;
      p.events.push_back({t, static_cast<std::uint32_t>(j)});
    }
    if (t_query && !recorded) p.query_state = z;
    const bool hit = net.observe(z) == y;
    p.z_end = z;
    p.counts = counts;
    p.log_girsanov = log_l;
    p.log_weight = (dead || !hit) ? kLogZero : log_l;
  });
  return ens;
}

}  // namespace snapfilter
