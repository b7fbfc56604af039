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
#include <cstdint>
#include <functional>
#include <limits>

#include "snapfilter/network.hpp"
#include "snapfilter/simulate.hpp"
#include "snapfilter/targeting.hpp"

namespace snapfilter {

/// Returned by ex1_wait_sample when no further event can occur before T.
inline constexpr double kBeyondHorizon = std::numeric_limits<double>::infinity();

double binomial_pmf(std::int64_t k, std::int64_t n, double p);

// Pure death S -> 0 with rate c, fully observed.

/// P(X(t + dt) = x2 | X(t) = x1) = Binomial(x1, e^{-c dt}) at x2.
double ex1_transition(std::int64_t x1, std::int64_t x2, double c, double dt);
/// Law of X(t) given X(0) = x0 and X(T) = xT. Throws OracleError if xT > x0.
Pmf ex1_cond_pmf(std::int64_t x0, std::int64_t xT, double c, double t, double T);
/// Death rate conditioned on X(T) = x_T: c (x_t - x_T) / (1 - e^{-c (T - t)}).
double ex1_cond_propensity(std::int64_t x_t, std::int64_t x_T, double c, double t, double T);
/*!
 * Wait to the next conditioned death from time t by inversion of
 * G(s) = ((e^{-cs} - e^{-c(T-t)}) / (1 - e^{-c(T-t)}))^{x_t - x_T} at 1 - u.
 * Returns kBeyondHorizon when x_t == x_T.
 */
double ex1_wait_sample(std::int64_t x_t, std::int64_t x_T, double c, double t, double T, double u);

// Reversible isomerization S1 <-> S2 (rates c1, c2), S2 observed.

/// Two-state walker with rates c1 (1 -> 2) and c2 (2 -> 1).
struct TwoStateKernel {
  double c1 = 0.0;
  double c2 = 0.0;
  /// P[i][j] = Prob(M(t) = j | M(0) = i), closed form.
  std::array<std::array<double, 2>, 2> P(double t) const;
};

/// P(Z1(dt) = zt1 | Z(0) = z0): convolution of the walkers that start in each state.
double ex2_transition(const State& z0, std::int64_t zt1, std::array<double, 2> c, double dt);
/// Law of Z(t) given Z(0) = z0 and #S2(T) = yT.
Pmf ex2_cond_pmf(const State& z0, std::int64_t yT, std::array<double, 2> c, double t, double T);
/// P(#S2(T) = yT | Z(0) = z0).
double ex2_obs_prob(const State& z0, std::int64_t yT, std::array<double, 2> c, double T);

// S1 <-> S2, S1 + S2 <-> S3 (rates c1..c4), S3 observed.

/// Master-equation solution p(t, .) on the conservation class of z0.
Pmf ex3_forward_pmf(const State& z0, std::array<double, 4> c, double t);
/// Law of Z(T) given #S3(T) = yT.
Pmf ex3_cond_at_T(const State& z0, std::int64_t yT, std::array<double, 4> c, double T);

/*!
 * Conditional-propensity filter for the pure death process: deaths are
 * drawn from the exact conditioned wait-time law, so every path hits x_T.
 * Particle weights are P(X(T) = x_T | x0), constant for a point-mass start.
 */
WeightedEnsemble cp_exact_filter(double c, const Pmf& mu0, std::int64_t xT, double T,
                                 std::optional<double> t_query, std::size_t n_particles,
                                 const StreamRng& stream, unsigned threads = 1);

/// h(t, z) = P(Y(T) = y | Z(t) = z) for the fixed snapshot.
using LikelihoodToGo = std::function<double(double, const State&)>;

/*!
 * Approximate conditional-propensity filter for a single snapshot. The
 * rates b_j = a_j h(t, z + nu_j) / h(t, z) are frozen at each jump and
 * waits are exponential; the weight is the likelihood ratio of a against
 * the frozen b times the indicator that the snapshot is hit.
 */
WeightedEnsemble cp_approx_filter(const ReactionNetwork& net, const LikelihoodToGo& h,
                                  const Pmf& mu0, const SnapshotSeq& snaps,
                                  std::optional<double> t_query, std::size_t n_particles,
                                  const StreamRng& stream, unsigned threads = 1);

}  // namespace snapfilter
