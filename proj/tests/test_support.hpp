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

#include <cmath>
#include <cstdint>
#include <vector>

#include "snapfilter/network.hpp"

namespace snapfilter::testing {

inline Reaction reaction(std::vector<std::pair<std::size_t, int>> in,
                         std::vector<std::pair<std::size_t, int>> out, double rate) {
  return Reaction{std::move(in), std::move(out), rate};
}

/// S -> 0, observed.
inline ReactionNetwork pure_death(double c) {
  return ReactionNetwork(1, {reaction({{0, 1}}, {}, c)}, {0});
}

/// S1 <-> S2, S2 observed.
inline ReactionNetwork isomerization(double c1, double c2) {
  return ReactionNetwork(2, {reaction({{0, 1}}, {{1, 1}}, c1), reaction({{1, 1}}, {{0, 1}}, c2)},
                         {1});
}

/// S1 <-> S2, S1 + S2 <-> S3, S3 observed.
inline ReactionNetwork dimerization(double c1, double c2, double c3, double c4) {
  return ReactionNetwork(3,
                         {reaction({{0, 1}}, {{1, 1}}, c1), reaction({{1, 1}}, {{0, 1}}, c2),
                          reaction({{0, 1}, {1, 1}}, {{2, 1}}, c3),
                          reaction({{2, 1}}, {{0, 1}, {1, 1}}, c4)},
                         {2});
}

/// 0 -> S with constant rate c, observed.
inline ReactionNetwork birth(double c) { return ReactionNetwork(1, {reaction({}, {{0, 1}}, c)}, {0}); }

inline double binomial_coef_pmf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0 || k > n) return 0.0;
  double lc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  return std::exp(lc + k * std::log(p) + (n - k) * std::log1p(-p));
}

/// Sample mean and standard error.
struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

inline Moments moments(const std::vector<double>& x) {
  double s = 0.0, s2 = 0.0;
  for (double v : x) s += v;
  const double n = static_cast<double>(x.size());
  const double m = s / n;
  for (double v : x) s2 += (v - m) * (v - m);
  return {m, std::sqrt(s2 / (n - 1.0) / n)};
}

/// Dense matrix exponential by scaling and squaring of a degree-18 Taylor series.
inline std::vector<std::vector<double>> expm(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  double norm = 0.0;
  for (const auto& r : a) {
    double s = 0.0;
    for (double v : r) s += std::abs(v);
    norm = std::max(norm, s);
  }
  int squarings = 0;
  while (norm > 0.5) {
    norm /= 2.0;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (auto& r : a)
    for (double& v : r) v *= scale;
  auto mul = [n](const auto& x, const auto& y) {
    std::vector<std::vector<double>> z(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j) z[i][j] += x[i][k] * y[k][j];
    return z;
  };
  std::vector<std::vector<double>> result(n, std::vector<double>(n, 0.0)), term = result;
  for (std::size_t i = 0; i < n; ++i) result[i][i] = term[i][i] = 1.0;
  for (int k = 1; k <= 18; ++k) {
    term = mul(term, a);
    for (auto& r : term)
      for (double& v : r) v /= k;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) result[i][j] += term[i][j];
  }
  for (int s = 0; s < squarings; ++s) result = mul(result, result);
  return result;
}

}  // namespace snapfilter::testing
