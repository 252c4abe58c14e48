// Copyright 2026 The SmoothI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "smoothi/smoothi.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "smoothi/bounds_lab.hpp"
#include "smoothi/errors.hpp"
#include "smoothi/rank_core.hpp"

namespace smoothi {
namespace {

using Vec = std::vector<double>;

SmoothIParams Params(double alpha, double delta, std::size_t k) {
  SmoothIParams p;
  p.alpha = alpha;
  p.delta = delta;
  p.k = k;
  return p;
}

TEST_CASE("stable softmax") {
  const auto half = StableSoftmax(Vec{0, 0});
  CHECK(half[0] == 0.5);
  CHECK(half[1] == 0.5);

  const auto big = StableSoftmax(Vec{1000, 0});
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] < 1e-300);

  const auto three = StableSoftmax(Vec{1, 2, 3});
  CHECK(three[0] == doctest::Approx(0.0900305731703805).epsilon(1e-12));
  CHECK(three[1] == doctest::Approx(0.2447284710547977).epsilon(1e-12));
  CHECK(three[2] == doctest::Approx(0.6652409557748219).epsilon(1e-12));

  CHECK_THROWS_AS(StableSoftmax(Vec{}), RangeError);
}

TEST_CASE("two-document worked example") {
  const auto m = ComputeSmoothIndicators(Vec{2, 1}, Params(1.0, 0.1, 2));
  CHECK(m.At(0, 0) == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(m.At(0, 1) == doctest::Approx(0.2689414213699951).epsilon(1e-12));
  CHECK(m.At(1, 0) == doctest::Approx(0.4272265727168431).epsilon(1e-12));
  CHECK(m.At(1, 1) == doctest::Approx(0.5727734272831569).epsilon(1e-12));
  // Row-2 logits are s_j * (1 - I^1_j - delta).
  CHECK(m.Prefix(1)[0] == doctest::Approx(1 - 0.7310585786300049 - 0.1));
  CHECK(m.Prefix(1)[1] == doctest::Approx(1 - 0.2689414213699951 - 0.1));
}

TEST_CASE("dominated softmax limit") {
  const auto m = ComputeSmoothIndicators(Vec{10, 1}, Params(100.0, 0.1, 1));
  CHECK(std::abs(m.At(0, 0) - 1.0) < 1e-9);
  CHECK(m.At(0, 1) < 1e-9);
}

TEST_CASE("parameter and domain errors") {
  CHECK_THROWS_AS(ComputeSmoothIndicators(Vec{2, 1}, Params(1.0, 0.5, 1)), ParameterError);
  CHECK_THROWS_AS(ComputeSmoothIndicators(Vec{2, 1}, Params(1.0, 0.0, 1)), ParameterError);
  CHECK_THROWS_AS(ComputeSmoothIndicators(Vec{2, 1}, Params(0.0, 0.1, 1)), ParameterError);
  CHECK_THROWS_AS(ComputeSmoothIndicators(Vec{2, -1}, Params(1.0, 0.1, 1)), DomainError);
  CHECK_THROWS_AS(ComputeSmoothIndicators(Vec{2, 2}, Params(1.0, 0.1, 1), ScoreMode::kStrict),
                  DomainError);
  CHECK_NOTHROW(ComputeSmoothIndicators(Vec{2, 2}, Params(1.0, 0.1, 1)));
  CHECK_THROWS_AS(ComputeSmoothIndicators(Vec{2, 1}, Params(1.0, 0.1, 3)), RangeError);
}

TEST_CASE("rows are row-stochastic, positive and match the literal recursion") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> alpha_dist(0.1, 20.0);
  std::uniform_real_distribution<double> delta_dist(0.01, 0.49);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + trial % 7;
    const std::size_t k = std::min<std::size_t>(n, 1 + trial % 4);
    const Vec s = oracle::StrictScores(rng, n, 1.05, 1.8);
    const double alpha = alpha_dist(rng);
    const double delta = delta_dist(rng);
    const auto m = ComputeSmoothIndicators(s, Params(alpha, delta, k));
    const auto ref = oracle::SmoothIndicatorRows(s, alpha, delta, k);
    for (std::size_t r = 0; r < k; ++r) {
      double sum = 0;
      for (std::size_t j = 0; j < n; ++j) {
        sum += m.At(r, j);
        CHECK(m.At(r, j) >= 0.0);
        CHECK(m.At(r, j) <= 1.0);
        CHECK(std::abs(m.At(r, j) - ref[r * n + j]) < 1e-12);
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("row one is exactly the parameterized softmax") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec s = oracle::StrictScores(rng, 6, 1.1, 2.0);
    const double alpha = 0.5 + trial;
    Vec logits(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) logits[j] = alpha * s[j];
    const auto expected = StableSoftmax(logits);
    for (GradMode mode : {GradMode::kFull, GradMode::kStopGradient}) {
      auto p = Params(alpha, 0.1, 3);
      p.grad_mode = mode;
      const auto m = ComputeSmoothIndicators(s, p);
      for (std::size_t j = 0; j < s.size(); ++j) CHECK(m.At(0, j) == expected[j]);
    }
  }
}

TEST_CASE("forward values do not depend on the gradient mode") {
  const Vec s{1.3, 2.9, 0.7, 2.2};
  auto full = Params(3.0, 0.2, 4);
  full.grad_mode = GradMode::kFull;
  auto stop = full;
  stop.grad_mode = GradMode::kStopGradient;
  CHECK(ComputeSmoothIndicators(s, full).rows() == ComputeSmoothIndicators(s, stop).rows());
}

TEST_CASE("scaling the scores is equivalent to scaling alpha") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const Vec s = oracle::StrictScores(rng, 5, 1.05, 1.6);
    const double c = 0.25 + 0.25 * trial;
    Vec scaled(s.size());
    for (std::size_t j = 0; j < s.size(); ++j) scaled[j] = c * s[j];
    const auto a = ComputeSmoothIndicators(scaled, Params(1.5, 0.1, 5));
    const auto b = ComputeSmoothIndicators(s, Params(1.5 * c, 0.1, 5));
    for (std::size_t i = 0; i < a.rows().size(); ++i) {
      CHECK(std::abs(a.rows()[i] - b.rows()[i]) < 1e-12);
    }
  }
}

TEST_CASE("error to the hard indicators shrinks as alpha grows") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 4 + trial % 5;
    const std::size_t k = std::min<std::size_t>(n, 3);
    const Vec s = oracle::StrictScores(rng, n, 1.2, 2.0);
    const auto hard = HardIndicatorMatrix(s, k);
    double previous = 2.0;
    for (double alpha : {1.0, 10.0, 100.0, 1000.0}) {
      const auto m = ComputeSmoothIndicators(s, Params(alpha, 0.1, k));
      double err = 0;
      for (std::size_t i = 0; i < hard.size(); ++i) err = std::max(err, std::abs(hard[i] - m.rows()[i]));
      CHECK(err <= previous);
      previous = err;
    }
    CHECK(previous < 1e-6);
  }
}

TEST_CASE("rows above the certificate threshold peak on distinct documents in score order") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 3 + trial % 6;
    const std::size_t k = std::min<std::size_t>(n, 2 + trial % 3);
    const Vec s = oracle::StrictScores(rng, n, 1.2, 2.5);
    const auto cert = ComputeCertificate(s, k, 0.1);
    const auto m = ComputeSmoothIndicators(s, Params(cert.alpha_threshold * 1.01, 0.1, k));
    const auto order = RankPermutation(s);
    for (std::size_t r = 0; r < k; ++r) {
      const auto row = m.Row(r);
      const auto peak = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      CHECK(peak == order[r]);
    }
  }
}

}  // namespace
}  // namespace smoothi
