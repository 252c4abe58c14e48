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

#include "smoothi/rank_core.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "smoothi/errors.hpp"

namespace smoothi {
namespace {

void CheckCutoff(std::size_t k, std::size_t n) {
  if (k < 1 || k > n) {
    throw RangeError("cutoff " + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
}

void CheckSameLength(std::span<const double> relevance, std::span<const double> scores) {
  if (relevance.size() != scores.size()) {
    throw ShapeError("relevance has " + std::to_string(relevance.size()) +
                     " entries but scores have " + std::to_string(scores.size()));
  }
}

}  // namespace

void ValidateScores(std::span<const double> scores, ScoreMode mode) {
  if (scores.empty()) throw InvalidInputError("empty score list");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw InvalidInputError("non-finite score at index " + std::to_string(i));
    }
    if (mode != ScoreMode::kFinite && scores[i] <= 0.0) {
      throw DomainError("scores must be positive, index " + std::to_string(i) +
                        " holds " + std::to_string(scores[i]));
    }
  }
  if (mode == ScoreMode::kStrict) {
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw DomainError("strict mode requires pairwise distinct scores");
    }
  }
}

void ValidateBinaryRelevance(std::span<const double> relevance) {
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    if (relevance[i] != 0.0 && relevance[i] != 1.0) {
      throw GradingError("binary relevance expected, index " + std::to_string(i) + " holds " +
                         std::to_string(relevance[i]));
    }
  }
}

void ValidateRelevance(std::span<const double> relevance, std::span<const double> scores) {
  CheckSameLength(relevance, scores);
  for (std::size_t i = 0; i < relevance.size(); ++i) {
    if (!std::isfinite(relevance[i]) || relevance[i] < 0.0) {
      throw GradingError("relevance grades must be finite and non-negative, index " +
                         std::to_string(i));
    }
  }
}

std::vector<std::size_t> RankPermutation(std::span<const double> scores) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) {
      throw InvalidInputError("NaN score at index " + std::to_string(i));
    }
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

HardIndicator MakeHardIndicator(std::span<const double> scores, std::size_t rank) {
  CheckCutoff(rank, scores.size());
  const auto order = RankPermutation(scores);
  HardIndicator out{rank, std::vector<double>(scores.size(), 0.0)};
  out.one_hot[order[rank - 1]] = 1.0;
  return out;
}

std::vector<double> HardIndicatorMatrix(std::span<const double> scores, std::size_t k) {
  const std::size_t n = scores.size();
  CheckCutoff(k, n);
  const auto order = RankPermutation(scores);
  std::vector<double> rows(k * n, 0.0);
  for (std::size_t r = 0; r < k; ++r) rows[r * n + order[r]] = 1.0;
  return rows;
}

double PrecisionAtK(std::span<const double> relevance, std::span<const double> scores,
                    std::size_t k) {
  CheckSameLength(relevance, scores);
  ValidateBinaryRelevance(relevance);
  CheckCutoff(k, scores.size());
  const auto order = RankPermutation(scores);
  double hits = 0.0;
  for (std::size_t r = 0; r < k; ++r) hits += relevance[order[r]];
  return hits / static_cast<double>(k);
}

double AveragePrecision(std::span<const double> relevance, std::span<const double> scores) {
  CheckSameLength(relevance, scores);
  ValidateBinaryRelevance(relevance);
  const double total = std::accumulate(relevance.begin(), relevance.end(), 0.0);
  if (total == 0.0) throw UndefinedMetricError("average precision undefined without relevant documents");
  const auto order = RankPermutation(scores);
  double hits = 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const double rel = relevance[order[r]];
    hits += rel;
    sum += rel * hits / static_cast<double>(r + 1);
  }
  return sum / total;
}

double DcgAtK(std::span<const double> relevance, std::span<const double> scores, std::size_t k) {
  ValidateRelevance(relevance, scores);
  CheckCutoff(k, scores.size());
  const auto order = RankPermutation(scores);
  double dcg = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    dcg += (std::exp2(relevance[order[r]]) - 1.0) * RankDiscount(r + 1);
  }
  return dcg;
}

double IdealDcgAtK(std::span<const double> relevance, std::size_t k) {
  CheckCutoff(k, relevance.size());
  std::vector<double> sorted(relevance.begin(), relevance.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double dcg = 0.0;
  for (std::size_t r = 0; r < k; ++r) dcg += (std::exp2(sorted[r]) - 1.0) * RankDiscount(r + 1);
  return dcg;
}

double NdcgAtK(std::span<const double> relevance, std::span<const double> scores, std::size_t k) {
  ValidateRelevance(relevance, scores);
  CheckCutoff(k, scores.size());
  const double ideal = IdealDcgAtK(relevance, k);
  if (ideal <= 0.0) throw UndefinedMetricError("NDCG undefined without a positive relevance grade");
  return DcgAtK(relevance, scores, k) / ideal;
}

}  // namespace smoothi
