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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "snapfilter/metrics.hpp"
#include "snapfilter/targeting.hpp"

using namespace snapfilter;

namespace {

Pmf pmf1(std::initializer_list<std::pair<std::int64_t, double>> e) {
  Pmf p(1);
  for (auto [z, q] : e) p.add(State{z}, q);
  return p;
}

}  // namespace

TEST_CASE("effective sample fraction") {
  const std::vector<double> equal(8, 3.0);
  CHECK(esf(equal) == doctest::Approx(1.0));
  std::vector<double> one(10, 0.0);
  one[4] = 2.5;
  CHECK(esf(one) == doctest::Approx(0.1));
  const std::vector<double> w{0.1, 2.0, 0.7, 1.3};
  std::vector<double> scaled = w;
  for (double& v : scaled) v *= 1e-200;
  CHECK(esf(scaled) == doctest::Approx(esf(w)));
  CHECK(esf(w) > 0.0);
  CHECK(esf(w) <= 1.0);
  CHECK_THROWS_AS(esf(std::vector<double>(5, 0.0)), AllRejectedError);
  CHECK_THROWS_AS(esf(std::vector<double>{1.0, -1.0}), ContractError);

  std::vector<double> lw{-1000.0, -1001.0, kLogZero};
  const std::vector<double> direct{1.0, std::exp(-1.0), 0.0};
  CHECK(esf_from_log(lw) == doctest::Approx(esf(direct)));
}

TEST_CASE("weighted empirical distribution") {
  const std::vector<State> one{State{3}};
  const std::vector<double> w1{0.2};
  CHECK(empirical_pmf(one, w1)(State{3}) == 1.0);

  const std::vector<State> two{State{1}, State{2}};
  const std::vector<double> w2{1.0, 1.0};
  auto p2 = empirical_pmf(two, w2);
  CHECK(p2(State{1}) == 0.5);
  CHECK(p2(State{2}) == 0.5);

  const std::vector<State> five{State{0}, State{1}, State{0}, State{2}, State{1}};
  const std::vector<double> w5{1.0, 2.0, 3.0, 0.0, 4.0};
  auto p5 = empirical_pmf(five, w5);
  CHECK(p5(State{0}) == doctest::Approx(0.4));
  CHECK(p5(State{1}) == doctest::Approx(0.6));
  CHECK(p5(State{2}) == 0.0);

  CHECK_THROWS_AS(empirical_pmf(two, std::vector<double>{0.0, 0.0}), AllRejectedError);
}

TEST_CASE("ensemble views and projection") {
  WeightedEnsemble ens;
  ens.particles.resize(3);
  for (int i = 0; i < 3; ++i) {
    ens.particles[i].z_end = State{i, 10 - i};
    ens.particles[i].query_state = State{i + 5, 5 - i};
    ens.particles[i].log_weight = std::log(i + 1.0);
  }
  auto term = empirical_pmf(ens);
  CHECK(term(State{2, 8}) == doctest::Approx(0.5));
  auto q = empirical_pmf(ens, EnsembleView::kQuery, [](const State& z) { return State{z[1]}; });
  CHECK(q(State{4}) == doctest::Approx(1.0 / 3.0));
  ens.particles[1].query_state.reset();
  CHECK_THROWS_AS(empirical_pmf(ens, EnsembleView::kQuery), ContractError);
}

TEST_CASE("total variation error uses the unhalved convention") {
  auto a = pmf1({{0, 0.5}, {1, 0.5}});
  CHECK(tve(a, a) == 0.0);
  CHECK(tve(pmf1({{0, 1.0}}), pmf1({{5, 1.0}})) == 2.0);
  auto b = pmf1({{1, 0.2}, {2, 0.8}});
  auto c = pmf1({{0, 0.1}, {2, 0.9}});
  CHECK(tve(a, b) == doctest::Approx(0.5 + 0.3 + 0.8));
  CHECK(tve(a, b) == tve(b, a));
  CHECK(tve(a, c) <= tve(a, b) + tve(b, c) + 1e-15);
}

TEST_CASE("mean and normal 95% interval") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  auto m = mean_ci(v);
  CHECK(m.mean == 2.5);
  CHECK(m.n == 4);
  CHECK(m.half_width == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0));
}

TEST_CASE("poisson log pmf") {
  CHECK(poisson_log_pmf(0, 1.0) == doctest::Approx(-1.0));
  CHECK(poisson_log_pmf(3, 2.0) == doctest::Approx(std::log(8.0 / 6.0) - 2.0));
  CHECK(poisson_log_pmf(-1, 2.0) == kLogZero);
}

TEST_CASE("lattice diagnostic: one free and one slaved reaction with mean 10") {
  const std::vector<double> f{0.0}, s{10.0};
  auto r = appendix_a_diagnostic(f, s, {{1}}, std::vector<std::int64_t>{10});
  CHECK(std::abs(r.mean_poisson - r.mean_indicator) < 1e-10);
  CHECK(r.bound_ok);
  CHECK(r.esf_poisson == doctest::Approx(1.0));
  CHECK(r.esf_poisson / r.esf_indicator == doctest::Approx(std::sqrt(20 * std::numbers::pi)).epsilon(0.02));
}

TEST_CASE("lattice diagnostic with no free reactions") {
  const std::vector<double> f{}, s{4.0};
  auto r = appendix_a_diagnostic(f, s, {{}}, std::vector<std::int64_t>{2});
  CHECK(r.esf_poisson == doctest::Approx(1.0));
  CHECK(std::abs(r.mean_poisson - r.mean_indicator) < 1e-10);
  CHECK(r.bound_ok);
}

TEST_CASE("lattice diagnostic on random small instances") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> mean(0.2, 5.0);
  std::uniform_int_distribution<int> coef(-1, 2), off(0, 3), dims(1, 2);
  for (int trial = 0; trial < 100; ++trial) {
    const int m1 = dims(gen), m2 = dims(gen);
    std::vector<double> f(m1), s(m2);
    for (double& v : f) v = mean(gen);
    for (double& v : s) v = mean(gen);
    std::vector<std::vector<std::int64_t>> C(m2, std::vector<std::int64_t>(m1));
    for (auto& row : C)
      for (auto& v : row) v = coef(gen);
    std::vector<std::int64_t> d(m2);
    for (auto& v : d) v = off(gen);
    auto r = appendix_a_diagnostic(f, s, C, d);
    if (r.mean_indicator == 0.0) continue;
    CHECK(std::abs(r.mean_poisson - r.mean_indicator) < 1e-10);
    CHECK(r.bound_ok);
    CHECK(r.esf_poisson >= r.esf_indicator / r.rho_bar - 1e-12);
  }
}
