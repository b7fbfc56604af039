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

#include "snapfilter/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace snapfilter {
namespace {

// Exact rational with 128-bit intermediates; matrices here are tiny.
struct Rational {
  __int128 num = 0;
  __int128 den = 1;

  Rational() = default;
  Rational(std::int64_t n) : num(n), den(1) {}  // NOLINT
  Rational(__int128 n, __int128 d) : num(n), den(d) { reduce(); }

  static __int128 gcd128(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }
  void reduce() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    __int128 g = gcd128(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }
  bool is_zero() const { return num == 0; }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return {a.num * b.den - b.num * a.den, a.den * b.den};
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return {a.num * b.num, a.den * b.den};
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    return {a.num * b.den, a.den * b.num};
  }
};

using RMatrix = std::vector<std::vector<Rational>>;

std::size_t rank_of(RMatrix m) {
  std::size_t rank = 0;
  const std::size_t rows = m.size();
  const std::size_t cols = rows ? m[0].size() : 0;
  for (std::size_t c = 0; c < cols && rank < rows; ++c) {
    std::size_t piv = rank;
    while (piv < rows && m[piv][c].is_zero()) ++piv;
    if (piv == rows) continue;
    std::swap(m[piv], m[rank]);
    for (std::size_t r = rank + 1; r < rows; ++r) {
      if (m[r][c].is_zero()) continue;
      Rational f = m[r][c] / m[rank][c];
      for (std::size_t k = c; k < cols; ++k) m[r][k] = m[r][k] - f * m[rank][k];
    }
    ++rank;
  }
  return rank;
}

// Gauss-Jordan inverse. Returns false when singular.
bool invert(RMatrix a, RMatrix& inv, Rational& det) {
  const std::size_t n = a.size();
  inv.assign(n, std::vector<Rational>(n, Rational(0)));
  for (std::size_t i = 0; i < n; ++i) inv[i][i] = Rational(1);
  det = Rational(1);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    while (piv < n && a[piv][c].is_zero()) ++piv;
    if (piv == n) return false;
    if (piv != c) {
      std::swap(a[piv], a[c]);
      std::swap(inv[piv], inv[c]);
      det = Rational(0) - det;
    }
    Rational p = a[c][c];
    det = det * p;
    for (std::size_t k = 0; k < n; ++k) {
      a[c][k] = a[c][k] / p;
      inv[c][k] = inv[c][k] / p;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c || a[r][c].is_zero()) continue;
      Rational f = a[r][c];
      for (std::size_t k = 0; k < n; ++k) {
        a[r][k] = a[r][k] - f * a[c][k];
        inv[r][k] = inv[r][k] - f * inv[c][k];
      }
    }
  }
  return true;
}

double falling_factorial(std::int64_t z, int k) {
  if (z < k) return 0.0;
  double v = 1.0;
  for (int i = 0; i < k; ++i) v *= static_cast<double>(z - i);
  return v;
}

// Fills A, B, adj(B), det(B) for the given slaved columns; false if B is singular.
bool fill_blocks(const std::vector<std::vector<std::int64_t>>& reduced,
                 ObservationSplit& split) {
  const std::size_t m2 = split.slaved_idx.size();
  split.A.assign(m2, std::vector<std::int64_t>(split.free_idx.size()));
  split.B.assign(m2, std::vector<std::int64_t>(m2));
  RMatrix b(m2, std::vector<Rational>(m2));
  for (std::size_t r = 0; r < m2; ++r) {
    for (std::size_t c = 0; c < split.free_idx.size(); ++c) split.A[r][c] = reduced[r][split.free_idx[c]];
    for (std::size_t c = 0; c < m2; ++c) {
      split.B[r][c] = reduced[r][split.slaved_idx[c]];
      b[r][c] = Rational(split.B[r][c]);
    }
  }
  if (m2 == 0) {
    split.B_det = 1;
    split.B_adj.clear();
    return true;
  }
  RMatrix inv;
  Rational det;
  if (!invert(b, inv, det)) return false;
  if (det.den != 1) throw ContractError("integer matrix with non-integer determinant");
  split.B_det = static_cast<std::int64_t>(det.num);
  split.B_adj.assign(m2, std::vector<std::int64_t>(m2));
  for (std::size_t r = 0; r < m2; ++r) {
    for (std::size_t c = 0; c < m2; ++c) {
      Rational v = inv[r][c] * det;
      if (v.den != 1) throw ContractError("adjugate is not integral");
      split.B_adj[r][c] = static_cast<std::int64_t>(v.num);
    }
  }
  return true;
}

bool next_combination(std::vector<std::size_t>& comb, std::size_t n) {
  const std::size_t k = comb.size();
  for (std::size_t i = k; i-- > 0;) {
    if (comb[i] < n - k + i) {
      ++comb[i];
      for (std::size_t j = i + 1; j < k; ++j) comb[j] = comb[j - 1] + 1;
      return true;
    }
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// ReactionNetwork

ReactionNetwork::ReactionNetwork(std::size_t n_species, std::vector<Reaction> reactions,
                                 std::vector<std::size_t> observed)
    : n_species_(n_species), reactions_(std::move(reactions)), observed_(std::move(observed)) {
  require(n_species_ > 0, "network needs at least one species");
  require(!reactions_.empty(), "network needs at least one reaction");
  std::vector<std::size_t> sorted = observed_;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "observed species indices must be distinct");
  for (std::size_t s : observed_) require(s < n_species_, "observed species index out of range");

  stoich_.assign(reactions_.size(), std::vector<int>(n_species_, 0));
  sparse_stoich_.resize(reactions_.size());
  for (std::size_t j = 0; j < reactions_.size(); ++j) {
    const Reaction& r = reactions_[j];
    require(std::isfinite(r.rate) && r.rate >= 0.0, "rate constants must be nonnegative");
    for (auto [s, k] : r.reactants) {
      require(s < n_species_ && k > 0, "bad reactant entry");
      stoich_[j][s] -= k;
    }
    for (auto [s, k] : r.products) {
      require(s < n_species_ && k > 0, "bad product entry");
      stoich_[j][s] += k;
    }
    for (std::size_t s = 0; s < n_species_; ++s)
      if (stoich_[j][s] != 0) sparse_stoich_[j].emplace_back(s, stoich_[j][s]);
  }
}

std::vector<std::vector<std::int64_t>> ReactionNetwork::observed_stoich() const {
  std::vector<std::vector<std::int64_t>> out(observed_.size(),
                                             std::vector<std::int64_t>(reactions_.size()));
  for (std::size_t r = 0; r < observed_.size(); ++r)
    for (std::size_t j = 0; j < reactions_.size(); ++j) out[r][j] = stoich_[j][observed_[r]];
  return out;
}

int ReactionNetwork::reactant_order(std::size_t species, std::size_t reaction) const {
  int k = 0;
  for (auto [s, mult] : reactions_[reaction].reactants)
    if (s == species) k += mult;
  return k;
}

void ReactionNetwork::check_dim(std::span<const std::int64_t> z) const {
  if (z.size() != n_species_)
    throw ContractError("state has dimension " + std::to_string(z.size()) + ", network has " +
                        std::to_string(n_species_) + " species");
}

double ReactionNetwork::propensity(std::size_t reaction, std::span<const std::int64_t> z) const {
  const Reaction& r = reactions_[reaction];
  double a = r.rate;
  for (auto [s, k] : r.reactants) {
    a *= falling_factorial(z[s], k);
    if (a == 0.0) return 0.0;
  }
  return a;
}

void ReactionNetwork::propensities(std::span<const std::int64_t> z, std::span<double> out) const {
  check_dim(z);
  require(out.size() == reactions_.size(), "propensity output has wrong length");
  for (std::size_t j = 0; j < reactions_.size(); ++j) out[j] = propensity(j, z);
}

std::vector<double> ReactionNetwork::propensities(std::span<const std::int64_t> z) const {
  std::vector<double> out(reactions_.size());
  propensities(z, out);
  return out;
}

double ReactionNetwork::propensity_real(std::size_t reaction, std::span<const double> z) const {
  const Reaction& r = reactions_[reaction];
  double a = r.rate;
  for (auto [s, k] : r.reactants)
    for (int i = 0; i < k; ++i) a *= std::max(z[s] - i, 0.0);
  return a;
}

void ReactionNetwork::fire(std::size_t reaction, std::span<std::int64_t> z) const {
  for (auto [s, d] : sparse_stoich_[reaction]) z[s] += d;
}

State ReactionNetwork::advance(std::span<const std::int64_t> z,
                               std::span<const std::int64_t> counts) const {
  check_dim(z);
  require(counts.size() == reactions_.size(), "count vector has wrong length");
  State out(z.begin(), z.end());
  for (std::size_t j = 0; j < counts.size(); ++j)
    for (auto [s, d] : sparse_stoich_[j]) out[s] += d * counts[j];
  return out;
}

State ReactionNetwork::observe(std::span<const std::int64_t> z) const {
  check_dim(z);
  State y(observed_.size());
  for (std::size_t r = 0; r < observed_.size(); ++r) y[r] = z[observed_[r]];
  return y;
}

double ReactionNetwork::min_positive_propensity(std::size_t reaction) const {
  const Reaction& r = reactions_[reaction];
  double a = r.rate;
  // Minimum over the lattice sits at z_i = k_i, where the falling factorial is k_i!.
  for (auto [s, k] : r.reactants) a *= falling_factorial(k, k);
  return a;
}

double ReactionNetwork::ones_propensity(std::size_t reaction) const {
  State ones(n_species_, 1);
  return propensity(reaction, ones);
}

// ---------------------------------------------------------------------------
// Pmf

Pmf Pmf::point_mass(State z) {
  Pmf p(z.size());
  p.entries_[std::move(z)] = 1.0;
  return p;
}

void Pmf::add(const State& z, double prob) {
  if (entries_.empty() && dim_ == 0) dim_ = z.size();
  if (z.size() != dim_) throw ContractError("pmf state has wrong dimension");
  require(prob >= 0.0, "pmf probabilities must be nonnegative");
  entries_[z] += prob;
}

double Pmf::operator()(const State& z) const {
  auto it = entries_.find(z);
  return it == entries_.end() ? 0.0 : it->second;
}

double Pmf::total() const {
  double s = 0.0;
  for (const auto& [z, p] : entries_) s += p;
  return s;
}

void Pmf::normalize() {
  const double s = total();
  if (!(s > 0.0)) throw AllRejectedError("cannot normalize a pmf with zero mass");
  for (auto& [z, p] : entries_) p /= s;
}

bool Pmf::is_normalized(double tol) const { return std::abs(total() - 1.0) <= tol; }

// ---------------------------------------------------------------------------
// ObservationSplit

std::vector<std::int64_t> ObservationSplit::assemble(std::span<const std::int64_t> k_free,
                                                     std::span<const std::int64_t> k_slaved) const {
  require(k_free.size() == free_idx.size() && k_slaved.size() == slaved_idx.size(),
          "count blocks do not match the split");
  std::vector<std::int64_t> k(n_reactions());
  for (std::size_t i = 0; i < free_idx.size(); ++i) k[free_idx[i]] = k_free[i];
  for (std::size_t i = 0; i < slaved_idx.size(); ++i) k[slaved_idx[i]] = k_slaved[i];
  return k;
}

std::vector<std::int64_t> ObservationSplit::observed_change(
    std::span<const std::int64_t> counts) const {
  std::vector<std::int64_t> dy(full_obs_stoich.size(), 0);
  for (std::size_t r = 0; r < full_obs_stoich.size(); ++r)
    for (std::size_t j = 0; j < counts.size(); ++j) dy[r] += full_obs_stoich[r][j] * counts[j];
  return dy;
}

ObservationSplit build_split(const ReactionNetwork& net,
                             const std::optional<std::vector<std::size_t>>& free_idx) {
  const std::size_t m = net.n_reactions();
  ObservationSplit split;
  split.full_obs_stoich = net.observed_stoich();

  // Greedy row selection: keep a row only if it raises the rank.
  RMatrix kept;
  std::vector<std::vector<std::int64_t>> reduced;
  for (std::size_t r = 0; r < split.full_obs_stoich.size(); ++r) {
    RMatrix trial = kept;
    std::vector<Rational> row;
    for (auto v : split.full_obs_stoich[r]) row.emplace_back(v);
    trial.push_back(row);
    if (rank_of(trial) > kept.size()) {
      kept = std::move(trial);
      reduced.push_back(split.full_obs_stoich[r]);
      split.kept_rows.push_back(r);
    } else {
      split.dropped_rows.push_back(r);
    }
  }
  const std::size_t m2 = reduced.size();

  auto complement = [m](const std::vector<std::size_t>& idx) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < m; ++j)
      if (std::find(idx.begin(), idx.end(), j) == idx.end()) out.push_back(j);
    return out;
  };

  if (free_idx) {
    std::vector<std::size_t> f = *free_idx;
    for (std::size_t j : f)
      if (j >= m) throw ContractError("free reaction index out of range");
    std::vector<std::size_t> sorted = f;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ContractError("free reaction indices must be distinct");
    if (f.size() + m2 != m)
      throw InfeasibleSplitError("free set has " + std::to_string(f.size()) +
                                 " reactions but the observation fixes " + std::to_string(m2) +
                                 " of " + std::to_string(m));
    split.free_idx = f;
    split.slaved_idx = complement(f);
    if (!fill_blocks(reduced, split))
      throw InfeasibleSplitError("slaved block B is singular for the requested free set");
    return split;
  }

  std::vector<std::size_t> comb(m2);
  std::iota(comb.begin(), comb.end(), std::size_t{0});
  do {
    split.slaved_idx = comb;
    split.free_idx = complement(comb);
    if (fill_blocks(reduced, split)) return split;
  } while (m2 > 0 && next_combination(comb, m));
  throw InfeasibleSplitError("no invertible slaved block exists");
}

std::optional<std::vector<std::int64_t>> slaved_counts(const ObservationSplit& split,
                                                       std::span<const std::int64_t> dy,
                                                       std::span<const std::int64_t> k_free) {
  require(dy.size() == split.full_obs_stoich.size(), "dy must cover every observed species");
  require(k_free.size() == split.m1(), "free count vector has wrong length");
  const std::size_t m2 = split.m2();
  std::vector<std::int64_t> rhs(m2);
  for (std::size_t r = 0; r < m2; ++r) {
    std::int64_t v = dy[split.kept_rows[r]];
    for (std::size_t c = 0; c < k_free.size(); ++c) v -= split.A[r][c] * k_free[c];
    rhs[r] = v;
  }
  std::vector<std::int64_t> k2(m2);
  for (std::size_t r = 0; r < m2; ++r) {
    std::int64_t v = 0;
    for (std::size_t c = 0; c < m2; ++c) v += split.B_adj[r][c] * rhs[c];
    if (v % split.B_det != 0) return std::nullopt;
    v /= split.B_det;
    if (v < 0) return std::nullopt;
    k2[r] = v;
  }
  if (!split.dropped_rows.empty()) {
    auto full = split.assemble(k_free, k2);
    auto change = split.observed_change(full);
    for (std::size_t r : split.dropped_rows)
      if (change[r] != dy[r]) return std::nullopt;
  }
  return k2;
}

std::optional<std::vector<std::int64_t>> find_feasible_counts(const ObservationSplit& split,
                                                              std::span<const std::int64_t> dy,
                                                              std::int64_t bound,
                                                              std::uint64_t max_visits) {
  const std::size_t m1 = split.m1();
  std::vector<std::int64_t> k(m1, 0);
  std::uint64_t visits = 0;
  while (true) {
    if (auto k2 = slaved_counts(split, dy, k)) return split.assemble(k, *k2);
    if (++visits >= max_visits) return std::nullopt;
    std::size_t i = 0;
    while (i < m1 && k[i] == bound) k[i++] = 0;
    if (i == m1) return std::nullopt;
    ++k[i];
  }
}

}  // namespace snapfilter
