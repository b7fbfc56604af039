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

#include "snapfilter/intensity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "snapfilter/simulate.hpp"

namespace snapfilter {
namespace {

std::size_t cell_count(double length, double dt) {
  require(dt > 0.0 && length > 0.0, "grid needs positive length and mesh");
  const double ratio = length / dt;
  const double rounded = std::round(ratio);
  if (std::abs(rounded * dt - length) > 1e-12 * std::max(1.0, length) || rounded < 1.0)
    throw ContractError("mesh dt does not divide the interval length");
  return static_cast<std::size_t>(rounded);
}

// Dense solve with partial pivoting; returns false when (numerically) singular.
bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-300) return false;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double v = b[r];
    for (std::size_t k = r + 1; k < n; ++k) v -= a[r][k] * x[k];
    x[r] = v / a[r][r];
  }
  return true;
}

}  // namespace

IntensityGrid::IntensityGrid(std::size_t n_reactions, std::size_t n_cells, double dt, double origin)
    : m_(n_reactions), n_(n_cells), dt_(dt), origin_(origin), values_(n_reactions * n_cells, 0.0) {
  require(n_cells > 0 && dt > 0.0, "grid needs at least one cell of positive width");
}

IntensityGrid IntensityGrid::constant(std::span<const double> rates, double origin, double end) {
  require(end > origin, "constant grid needs end > origin");
  IntensityGrid g(rates.size(), 1, end - origin, origin);
  for (std::size_t i = 0; i < rates.size(); ++i) g.at(i, 0) = rates[i];
  return g;
}

std::size_t IntensityGrid::cell_of(double t) const {
  if (t <= origin_) return 0;
  const auto c = static_cast<std::size_t>((t - origin_) / dt_);
  return std::min(c, n_ - 1);
}

double IntensityGrid::row_total(std::size_t reaction) const {
  double s = 0.0;
  for (std::size_t j = 0; j < n_; ++j) s += at(reaction, j) * (cell_end(j) - cell_start(j));
  return s;
}

std::vector<double> IntensityGrid::row_totals() const {
  std::vector<double> out(m_);
  for (std::size_t i = 0; i < m_; ++i) out[i] = row_total(i);
  return out;
}

bool IntensityGrid::strictly_positive() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v) && v > 0.0; });
}

void IntensityGrid::write_csv(std::ostream& os) const {
  os.precision(17);
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) os << (j ? "," : "") << at(i, j);
    os << '\n';
  }
}

std::vector<double> cumulative(const IntensityGrid& grid, double t) {
  require(t >= grid.origin() - 1e-12 && t <= grid.end() + 1e-12, "time outside the grid");
  std::vector<double> eta(grid.n_reactions(), 0.0);
  for (std::size_t j = 0; j < grid.n_cells(); ++j) {
    const double a = grid.cell_start(j);
    if (t <= a) break;
    const double w = std::min(t, grid.cell_end(j)) - a;
    for (std::size_t i = 0; i < grid.n_reactions(); ++i) eta[i] += grid.at(i, j) * w;
  }
  return eta;
}

double invert_cumulative(const IntensityGrid& grid, std::size_t reaction, double mass) {
  require(mass >= 0.0, "cumulative mass must be nonnegative");
  double acc = 0.0;
  for (std::size_t j = 0; j < grid.n_cells(); ++j) {
    const double w = grid.cell_end(j) - grid.cell_start(j);
    const double cell_mass = grid.at(reaction, j) * w;
    if (acc + cell_mass >= mass || j + 1 == grid.n_cells()) {
      const double frac = cell_mass > 0.0 ? (mass - acc) / grid.at(reaction, j) : 0.0;
      return grid.cell_start(j) + std::clamp(frac, 0.0, w);
    }
    acc += cell_mass;
  }
  return grid.end();
}

std::vector<double> intensity_floor(const ReactionNetwork& net) {
  std::vector<double> f(net.n_reactions());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = net.ones_propensity(i);
    f[i] = a > 0.0 ? a : 1e-8;
  }
  return f;
}

std::vector<double> intensity_lower_bounds(const ReactionNetwork& net) {
  std::vector<double> f(net.n_reactions());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = net.min_positive_propensity(i);
    f[i] = a > 0.0 ? a : 1e-8;
  }
  return f;
}

IntensityGrid lambda1_from_rre(const ReactionNetwork& net, std::span<const double> z0,
                               double origin, double end, double dt) {
  require(z0.size() == net.n_species(), "initial state has wrong dimension");
  const std::size_t n_cells = cell_count(end - origin, dt);
  const std::size_t n = net.n_species();
  const std::size_t m = net.n_reactions();
  const auto floor = intensity_floor(net);
  IntensityGrid grid(m, n_cells, dt, origin);

  auto rhs = [&](const std::vector<double>& z, std::vector<double>& dz) {
    std::fill(dz.begin(), dz.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double a = net.propensity_real(j, z);
      if (a == 0.0) continue;
      const auto& col = net.stoich_column(j);
      for (std::size_t s = 0; s < n; ++s) dz[s] += col[s] * a;
    }
  };

  std::vector<double> z(z0.begin(), z0.end()), k1(n), k2(n), k3(n), k4(n), tmp(n);
  constexpr int kSubsteps = 10;
  const double h = dt / kSubsteps;
  for (std::size_t j = 0; j < n_cells; ++j) {
    for (std::size_t i = 0; i < m; ++i) grid.at(i, j) = std::max(net.propensity_real(i, z), floor[i]);
    for (int s = 0; s < kSubsteps; ++s) {
      rhs(z, k1);
      for (std::size_t q = 0; q < n; ++q) tmp[q] = z[q] + 0.5 * h * k1[q];
      rhs(tmp, k2);
      for (std::size_t q = 0; q < n; ++q) tmp[q] = z[q] + 0.5 * h * k2[q];
      rhs(tmp, k3);
      for (std::size_t q = 0; q < n; ++q) tmp[q] = z[q] + h * k3[q];
      rhs(tmp, k4);
      for (std::size_t q = 0; q < n; ++q) z[q] += h / 6.0 * (k1[q] + 2 * k2[q] + 2 * k3[q] + k4[q]);
    }
  }
  return grid;
}

IntensityGrid lambda1_from_rre(const ReactionNetwork& net, const State& z0, double horizon,
                               double dt) {
  std::vector<double> zr(z0.begin(), z0.end());
  return lambda1_from_rre(net, zr, 0.0, horizon, dt);
}

IntensityGrid lambda1_from_mc(const ReactionNetwork& net, const Pmf& mu0, double horizon,
                              double dt, std::size_t n_paths, const StreamRng& stream) {
  require(n_paths > 0, "need at least one forward path");
  const std::size_t n_cells = cell_count(horizon, dt);
  const std::size_t m = net.n_reactions();
  const auto floor = intensity_floor(net);
  const DiscreteSampler init(mu0);
  std::vector<double> sums(m * n_cells, 0.0);
  std::vector<double> a(m);
  for (std::size_t p = 0; p < n_paths; ++p) {
    StreamRng rng = stream.derive({static_cast<std::uint64_t>(StreamTag::kForwardMc), p});
    State z = init.sample(rng);
    double t = 0.0;
    for (std::size_t j = 0; j < n_cells; ++j) {
      const double tj = static_cast<double>(j) * dt;
      if (tj > t) {
        ssa_advance(net, z, t, tj, rng);
        t = tj;
      }
      net.propensities(z, a);
      for (std::size_t i = 0; i < m; ++i) sums[i * n_cells + j] += a[i];
    }
  }
  IntensityGrid grid(m, n_cells, dt, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n_cells; ++j)
      grid.at(i, j) = std::max(sums[i * n_cells + j] / static_cast<double>(n_paths), floor[i]);
  return grid;
}

IntensityGrid lambda2_optimize(const ObservationSplit& split, const IntensityGrid& grid1,
                               std::span<const std::int64_t> dy,
                               std::span<const double> lower_bounds, Lambda2Report* report) {
  const std::size_t m = grid1.n_reactions();
  const std::size_t n_cells = grid1.n_cells();
  require(split.n_reactions() == m, "split and grid disagree on the reaction count");
  require(dy.size() == split.full_obs_stoich.size(), "dy must cover every observed species");
  require(lower_bounds.size() == m, "one lower bound per reaction");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n_cells; ++j)
      require(grid1.at(i, j) >= lower_bounds[i] * (1 - 1e-12),
              "reference grid must respect the lower bounds");

  const std::size_t q = split.kept_rows.size();
  std::vector<std::vector<double>> R(q, std::vector<double>(m));
  std::vector<double> target(q);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t i = 0; i < m; ++i)
      R[r][i] = static_cast<double>(split.full_obs_stoich[split.kept_rows[r]][i]);
    target[r] = static_cast<double>(dy[split.kept_rows[r]]);
  }
  std::vector<double> width(n_cells);
  for (std::size_t j = 0; j < n_cells; ++j) width[j] = grid1.cell_end(j) - grid1.cell_start(j);

  Lambda2Report rep;
  IntensityGrid out = grid1;

  // lambda(s) = max(lb, lambda1 + R^T s) row-wise.
  auto shift_of = [&](const std::vector<double>& sv, std::size_t i) {
    double u = 0.0;
    for (std::size_t r = 0; r < q; ++r) u += R[r][i] * sv[r];
    return u;
  };
  auto apply = [&](const std::vector<double>& sv, IntensityGrid& g) {
    for (std::size_t i = 0; i < m; ++i) {
      const double u = shift_of(sv, i);
      for (std::size_t j = 0; j < n_cells; ++j) g.at(i, j) = std::max(lower_bounds[i], grid1.at(i, j) + u);
    }
  };
  auto residual = [&](const IntensityGrid& g) {
    std::vector<double> f(q);
    for (std::size_t r = 0; r < q; ++r) {
      double v = -target[r];
      for (std::size_t i = 0; i < m; ++i)
        if (R[r][i] != 0.0) v += R[r][i] * g.row_total(i);
      f[r] = v;
    }
    return f;
  };
  auto inf_norm = [](const std::vector<double>& v) {
    double x = 0.0;
    for (double e : v) x = std::max(x, std::abs(e));
    return x;
  };

  if (q == 0) {
    if (report) *report = rep;
    return out;
  }

  // Closed form for the equality-only problem: every entry of row i moves by the same amount.
  std::vector<std::vector<double>> gram(q, std::vector<double>(q, 0.0));
  std::vector<double> rbar(m);
  for (std::size_t i = 0; i < m; ++i) rbar[i] = grid1.row_total(i);
  const double length = grid1.end() - grid1.origin();
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b)
      for (std::size_t i = 0; i < m; ++i) gram[a][b] += R[a][i] * R[b][i];
  std::vector<double> gap(q);
  for (std::size_t r = 0; r < q; ++r) {
    gap[r] = target[r];
    for (std::size_t i = 0; i < m; ++i) gap[r] -= R[r][i] * rbar[i];
  }
  std::vector<double> kappa;
  if (!solve_dense(gram, gap, kappa))
    throw InfeasibleConstraintError("observed stoichiometry rows are dependent");
  std::vector<double> s(q);
  for (std::size_t r = 0; r < q; ++r) s[r] = kappa[r] / length;

  bool violates = false;
  for (std::size_t i = 0; i < m && !violates; ++i) {
    const double u = shift_of(s, i);
    for (std::size_t j = 0; j < n_cells; ++j)
      if (grid1.at(i, j) + u < lower_bounds[i]) {
        violates = true;
        break;
      }
  }
  if (!violates) {
    for (std::size_t i = 0; i < m; ++i) {
      const double u = shift_of(s, i);
      for (std::size_t j = 0; j < n_cells; ++j) out.at(i, j) = grid1.at(i, j) + u;
    }
  } else {
    rep.used_bounds = true;
    // Dual objective psi(s) = sum_ij w_j g_ij((R^T s)_i) - s.target; its gradient is R r(s) - target.
    auto psi = [&](const std::vector<double>& sv) {
      double v = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        const double u = shift_of(sv, i);
        for (std::size_t j = 0; j < n_cells; ++j) {
          const double lam = grid1.at(i, j), lb = lower_bounds[i];
          // Antiderivative of max(lb, lam + v); additive constants cancel in the line search.
          const double brk = lb - lam;
          const double g = u <= brk ? lb * u
                                    : lb * brk + 0.5 * ((lam + u) * (lam + u) - lb * lb);
          v += width[j] * g;
        }
      }
      for (std::size_t r = 0; r < q; ++r) v -= sv[r] * target[r];
      return v;
    };

    constexpr int kMaxIter = 500;
    int it = 0;
    apply(s, out);
    std::vector<double> f = residual(out);
    for (; it < kMaxIter && inf_norm(f) > 1e-11 * std::max(1.0, inf_norm(target)); ++it) {
      std::vector<std::vector<double>> jac(q, std::vector<double>(q, 0.0));
      for (std::size_t i = 0; i < m; ++i) {
        const double u = shift_of(s, i);
        double d = 0.0;
        for (std::size_t j = 0; j < n_cells; ++j)
          if (grid1.at(i, j) + u > lower_bounds[i]) d += width[j];
        if (d == 0.0) continue;
        for (std::size_t a = 0; a < q; ++a)
          for (std::size_t b = 0; b < q; ++b) jac[a][b] += d * R[a][i] * R[b][i];
      }
      double ridge = 0.0;
      for (std::size_t a = 0; a < q; ++a) ridge = std::max(ridge, jac[a][a]);
      ridge = std::max(ridge * 1e-12, 1e-14);
      for (std::size_t a = 0; a < q; ++a) jac[a][a] += ridge;
      std::vector<double> neg_f(q), p;
      for (std::size_t r = 0; r < q; ++r) neg_f[r] = -f[r];
      if (!solve_dense(jac, neg_f, p)) p = neg_f;
      double slope = 0.0;
      for (std::size_t r = 0; r < q; ++r) slope += f[r] * p[r];
      if (slope >= 0.0) {
        p = neg_f;
        slope = 0.0;
        for (std::size_t r = 0; r < q; ++r) slope += f[r] * p[r];
      }
      const double psi0 = psi(s);
      double step = 1.0;
      std::vector<double> trial(q);
      while (true) {
        for (std::size_t r = 0; r < q; ++r) trial[r] = s[r] + step * p[r];
        if (psi(trial) <= psi0 + 1e-4 * step * slope || step < 1e-20) break;
        step *= 0.5;
      }
      s = trial;
      if (inf_norm(s) > 1e15) break;
      apply(s, out);
      f = residual(out);
    }
    rep.iterations = it;
    if (inf_norm(f) > 1e-9 * std::max(1.0, inf_norm(target)))
      throw InfeasibleConstraintError("no intensity grid within the bounds meets the observed change");
  }

  // Dependent observed rows must be implied by the kept ones.
  for (std::size_t r : split.dropped_rows) {
    double v = -static_cast<double>(dy[r]);
    for (std::size_t i = 0; i < m; ++i) v += split.full_obs_stoich[r][i] * out.row_total(i);
    if (std::abs(v) > 1e-9 * std::max(1.0, std::abs(static_cast<double>(dy[r]))))
      throw InfeasibleConstraintError("observed change is inconsistent across dependent species");
  }
  if (!out.strictly_positive())
    throw InfeasibleConstraintError("constrained intensity is not strictly positive");

  rep.constraint_residual = inf_norm(residual(out));
  rep.kkt_residual = rep.constraint_residual;
  if (report) *report = rep;
  return out;
}

}  // namespace snapfilter
