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

#include <iosfwd>
#include <span>
#include <vector>

#include "snapfilter/network.hpp"
#include "snapfilter/rng.hpp"

namespace snapfilter {

/*!
 * Piecewise-constant proposal intensity: reaction i fires at rate
 * values(i, j) on cell j = [origin + j dt, origin + (j+1) dt).
 */
class IntensityGrid {
 public:
  IntensityGrid() = default;
  IntensityGrid(std::size_t n_reactions, std::size_t n_cells, double dt, double origin = 0.0);

  /// Single cell spanning [origin, end] with the given rates.
  static IntensityGrid constant(std::span<const double> rates, double origin, double end);

  std::size_t n_reactions() const noexcept { return m_; }
  std::size_t n_cells() const noexcept { return n_; }
  double dt() const noexcept { return dt_; }
  double origin() const noexcept { return origin_; }
  double end() const noexcept { return origin_ + static_cast<double>(n_) * dt_; }

  double& at(std::size_t reaction, std::size_t cell) { return values_[reaction * n_ + cell]; }
  double at(std::size_t reaction, std::size_t cell) const { return values_[reaction * n_ + cell]; }
  std::span<const double> row(std::size_t reaction) const {
    return {values_.data() + reaction * n_, n_};
  }

  double cell_start(std::size_t cell) const { return origin_ + static_cast<double>(cell) * dt_; }
  double cell_end(std::size_t cell) const {
    return cell + 1 == n_ ? end() : origin_ + static_cast<double>(cell + 1) * dt_;
  }
  /// Cell containing t; times on a boundary belong to the cell to the right.
  std::size_t cell_of(double t) const;

  /// Integral of reaction i's intensity over the whole grid.
  double row_total(std::size_t reaction) const;
  std::vector<double> row_totals() const;

  /// All entries finite and > 0.
  bool strictly_positive() const;

  /// m rows x N columns, comma separated.
  void write_csv(std::ostream& os) const;

 private:
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  double dt_ = 0.0;
  double origin_ = 0.0;
  std::vector<double> values_;
};

/// eta(t): per-reaction integral of the intensity from the grid origin to t.
std::vector<double> cumulative(const IntensityGrid& grid, double t);
/// Inverse of eta_i on [0, eta_i(end)].
double invert_cumulative(const IntensityGrid& grid, std::size_t reaction, double mass);

/// Positivity floor per reaction: a_i at the all-ones state, or 1e-8 if that is zero.
std::vector<double> intensity_floor(const ReactionNetwork& net);
/// Smallest positive propensity of each reaction on the lattice.
std::vector<double> intensity_lower_bounds(const ReactionNetwork& net);

/*!
 * Mean-propensity intensity from the deterministic rate equations
 * dz/dt = nu a(z), integrated with classical RK4 at substep dt/10 from
 * `z0` on [origin, end]. Each cell takes the left-endpoint propensity,
 * floored at intensity_floor().
 */
IntensityGrid lambda1_from_rre(const ReactionNetwork& net, std::span<const double> z0,
                               double origin, double end, double dt);
IntensityGrid lambda1_from_rre(const ReactionNetwork& net, const State& z0, double horizon,
                               double dt);

/// Mean propensity estimated from n_paths SSA runs started from mu0, floored.
IntensityGrid lambda1_from_mc(const ReactionNetwork& net, const Pmf& mu0, double horizon,
                              double dt, std::size_t n_paths, const StreamRng& stream);

struct Lambda2Report {
  bool used_bounds = false;  ///< closed form violated a lower bound; bounded solve ran
  int iterations = 0;
  double constraint_residual = 0.0;
  double kkt_residual = 0.0;
};

/*!
 * Observation-steered intensity: the Frobenius-nearest grid to `grid1`
 * whose integrated counts satisfy nu'' r = dy, subject to
 * lambda(i, j) >= lower_bounds[i].
 *
 * The unbounded problem is solved in closed form (a uniform shift of each
 * row). If that violates a bound, the bounded problem is solved through
 * its dual with a semismooth Newton iteration. Throws
 * InfeasibleConstraintError if no admissible grid exists.
 */
IntensityGrid lambda2_optimize(const ObservationSplit& split, const IntensityGrid& grid1,
                               std::span<const std::int64_t> dy,
                               std::span<const double> lower_bounds,
                               Lambda2Report* report = nullptr);

}  // namespace snapfilter
