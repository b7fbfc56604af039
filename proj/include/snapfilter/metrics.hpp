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

#include <functional>
#include <span>
#include <vector>

#include "snapfilter/network.hpp"

namespace snapfilter {

struct WeightedEnsemble;

/// Effective sample fraction (sum w)^2 / (N sum w^2). Throws AllRejectedError if all w are 0.
double esf(std::span<const double> weights);
/// Same, from log weights (max-shifted before exponentiation).
double esf_from_log(std::span<const double> log_weights);

/// Normalized weighted histogram of states.
Pmf empirical_pmf(std::span<const State> states, std::span<const double> weights);

enum class EnsembleView { kTerminal, kQuery };

/// Weighted law of the particles' terminal (or query-time) states under `project`.
Pmf empirical_pmf(const WeightedEnsemble& ens, EnsembleView view = EnsembleView::kTerminal,
                  const std::function<State(const State&)>& project = {});

/// Unhalved L1 distance sum_z |p(z) - q(z)| over the union support; lies in [0, 2].
double tve(const Pmf& estimate, const Pmf& oracle);

/// Sample mean and normal-approximation 95% half-width.
struct MeanCi {
  double mean = 0.0;
  double half_width = 0.0;
  std::size_t n = 0;
};
MeanCi mean_ci(std::span<const double> values);

/// Inputs and brute-force results for comparing Poisson and indicator weights.
struct LatticeWeightResult {
  double mean_poisson = 0.0;        ///< E0[W_p]
  double second_poisson = 0.0;      ///< E0[W_p^2]
  double mean_indicator = 0.0;      ///< E0[W_i], summed over the joint lattice
  double second_indicator = 0.0;    ///< E0[W_i^2]
  double esf_poisson = 0.0;
  double esf_indicator = 0.0;
  double rho_bar = 0.0;             ///< max_k' P0(R'' = C k' + d)
  bool bound_ok = false;            ///< ESF_p >= ESF_i / rho_bar (up to round-off)
};

/*!
 * Exhaustive check of the Poisson-weight versus indicator-weight effective
 * sample fractions for R = (R', R'') independent Poisson with means
 * (free_means, slaved_means) and the linear event R'' = C R' + d.
 *
 * `truncation` caps each coordinate; 0 selects mean + 12 sqrt(mean) + 10.
 */
LatticeWeightResult appendix_a_diagnostic(std::span<const double> free_means,
                                          std::span<const double> slaved_means,
                                          const std::vector<std::vector<std::int64_t>>& C,
                                          std::span<const std::int64_t> d, std::size_t truncation = 0);

double poisson_log_pmf(std::int64_t k, double mean);

}  // namespace snapfilter
