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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snapfilter/common.hpp"

namespace snapfilter {

/// One mass-action reaction channel: reactant/product multiplicities and rate constant.
struct Reaction {
  std::vector<std::pair<std::size_t, int>> reactants;  ///< (species, multiplicity)
  std::vector<std::pair<std::size_t, int>> products;   ///< (species, multiplicity)
  double rate = 0.0;
};

/*!
 * Mass-action reaction network with an observed species block.
 *
 * Propensities follow the falling-factorial mass-action form
 * a_j(z) = c_j * prod_i z_i (z_i - 1) ... (z_i - k_ij + 1), which is zero
 * whenever some reactant count is below its multiplicity. The same rule
 * covers states with negative entries, which proposal paths can visit.
 */
class ReactionNetwork {
 public:
  ReactionNetwork(std::size_t n_species, std::vector<Reaction> reactions,
                  std::vector<std::size_t> observed);

  std::size_t n_species() const noexcept { return n_species_; }
  std::size_t n_reactions() const noexcept { return reactions_.size(); }
  std::size_t n_observed() const noexcept { return observed_.size(); }

  const std::vector<std::size_t>& observed() const noexcept { return observed_; }
  const std::vector<Reaction>& reactions() const noexcept { return reactions_; }

  /// Stoichiometric change of species i under reaction j.
  int stoich(std::size_t species, std::size_t reaction) const {
    return stoich_[reaction][species];
  }
  /// Column nu_j as a dense vector of length n_species.
  const std::vector<int>& stoich_column(std::size_t reaction) const { return stoich_[reaction]; }
  /// Observed-block rows of the stoichiometry, n_observed x n_reactions.
  std::vector<std::vector<std::int64_t>> observed_stoich() const;

  int reactant_order(std::size_t species, std::size_t reaction) const;
  double rate(std::size_t reaction) const { return reactions_[reaction].rate; }

  double propensity(std::size_t reaction, std::span<const std::int64_t> z) const;
  void propensities(std::span<const std::int64_t> z, std::span<double> out) const;
  std::vector<double> propensities(std::span<const std::int64_t> z) const;
  /// Mass-action rate on a real-valued (concentration-like) state, for the rate equations.
  double propensity_real(std::size_t reaction, std::span<const double> z) const;

  /// z += nu_j
  void fire(std::size_t reaction, std::span<std::int64_t> z) const;
  /// z + nu * counts
  State advance(std::span<const std::int64_t> z, std::span<const std::int64_t> counts) const;
  State observe(std::span<const std::int64_t> z) const;

  /// Smallest positive value a_j takes on the nonnegative lattice.
  double min_positive_propensity(std::size_t reaction) const;
  /// a_j at the all-ones state.
  double ones_propensity(std::size_t reaction) const;

 private:
  void check_dim(std::span<const std::int64_t> z) const;

  std::size_t n_species_;
  std::vector<Reaction> reactions_;
  std::vector<std::size_t> observed_;
  std::vector<std::vector<int>> stoich_;                       // [reaction][species]
  std::vector<std::vector<std::pair<std::size_t, int>>> sparse_stoich_;
};

/// Sparse probability mass function over integer state vectors.
class Pmf {
 public:
  Pmf() = default;
  explicit Pmf(std::size_t dim) : dim_(dim) {}

  static Pmf point_mass(State z);

  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t size() const noexcept { return entries_.size(); }

  void add(const State& z, double p);
  double operator()(const State& z) const;
  double total() const;
  void normalize();
  bool is_normalized(double tol = 1e-9) const;

  const std::map<State, double>& entries() const noexcept { return entries_; }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  /// Image of the pmf under a map of the state vectors.
  template <class F>
  Pmf map(F&& project) const {
    Pmf out;
    for (const auto& [z, p] : entries_) {
      State w = project(z);
      if (out.entries_.empty()) out.dim_ = w.size();
      out.add(w, p);
    }
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::map<State, double> entries_;
};

/*!
 * Partition of the reactions into free and slaved sets for an observed
 * block, with nu'' (reduced to independent rows) reordered as [A B].
 *
 * B is held as an integer adjugate and determinant so the slaved counts
 * B^{-1}(dy - A k') can be tested for integrality exactly.
 */
struct ObservationSplit {
  std::vector<std::size_t> free_idx;
  std::vector<std::size_t> slaved_idx;
  std::vector<std::size_t> kept_rows;     ///< rows of the observed block kept (independent)
  std::vector<std::size_t> dropped_rows;  ///< dependent observed rows removed
  std::vector<std::vector<std::int64_t>> A;      ///< m2 x m1
  std::vector<std::vector<std::int64_t>> B;      ///< m2 x m2
  std::vector<std::vector<std::int64_t>> B_adj;  ///< adjugate of B
  std::int64_t B_det = 1;
  std::vector<std::vector<std::int64_t>> full_obs_stoich;  ///< n_observed x m, unreduced

  std::size_t m1() const noexcept { return free_idx.size(); }
  std::size_t m2() const noexcept { return slaved_idx.size(); }
  std::size_t n_reactions() const noexcept { return free_idx.size() + slaved_idx.size(); }

  /// Full count vector in reaction order from free and slaved parts.
  std::vector<std::int64_t> assemble(std::span<const std::int64_t> k_free,
                                     std::span<const std::int64_t> k_slaved) const;
  /// nu'' applied to a full count vector (all observed rows).
  std::vector<std::int64_t> observed_change(std::span<const std::int64_t> counts) const;
};

ObservationSplit build_split(const ReactionNetwork& net,
                             const std::optional<std::vector<std::size_t>>& free_idx = std::nullopt);

/*!
 * Slaved counts G(dy, k') when they form a nonnegative integer vector that
 * also satisfies every dropped observed row; std::nullopt otherwise.
 * `dy` covers all observed species.
 */
std::optional<std::vector<std::int64_t>> slaved_counts(const ObservationSplit& split,
                                                       std::span<const std::int64_t> dy,
                                                       std::span<const std::int64_t> k_free);

/// Searches k' in [0, bound]^m1 for an admissible slaved solution. Returns full counts.
std::optional<std::vector<std::int64_t>> find_feasible_counts(const ObservationSplit& split,
                                                              std::span<const std::int64_t> dy,
                                                              std::int64_t bound,
                                                              std::uint64_t max_visits = 2'000'000);

}  // namespace snapfilter
