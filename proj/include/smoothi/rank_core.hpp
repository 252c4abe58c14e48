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

// Exact (non-differentiable) ranking: hard rank indicators obtained by
// sorting, and the P@K / AP / NDCG@K metrics built on them. These serve both
// as evaluation metrics and as the ground truth the smooth indicators are
// measured against.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace smoothi {

enum class ScoreMode {
  kFinite,    // any finite reals
  kPositive,  // finite and strictly positive, ties allowed
  kStrict,    // finite, strictly positive, pairwise distinct
};

/// Throws InvalidInputError on NaN/Inf (or an empty list), DomainError on
/// non-positive entries (kPositive, kStrict) and on ties (kStrict).
void ValidateScores(std::span<const double> scores, ScoreMode mode = ScoreMode::kFinite);

/// Throws GradingError unless every entry is 0 or 1.
void ValidateBinaryRelevance(std::span<const double> relevance);

/// Throws GradingError on negative or non-finite grades, ShapeError when the
/// lengths of `relevance` and `scores` differ.
void ValidateRelevance(std::span<const double> relevance, std::span<const double> scores);

/// Document indices in descending score order. Ties keep ascending index.
std::vector<std::size_t> RankPermutation(std::span<const double> scores);

struct HardIndicator {
  std::size_t rank = 0;         // 1-based
  std::vector<double> one_hot;  // length N, a single 1.0
};

/// One-hot of the document holding rank `rank` (1-based).
HardIndicator MakeHardIndicator(std::span<const double> scores, std::size_t rank);

/// Rows 1..k of hard indicators, row-major k x N.
std::vector<double> HardIndicatorMatrix(std::span<const double> scores, std::size_t k);

double PrecisionAtK(std::span<const double> relevance, std::span<const double> scores,
                    std::size_t k);

double AveragePrecision(std::span<const double> relevance, std::span<const double> scores);

/// DCG@k of the ordering implied by `scores`, with gain 2^rel - 1 and
/// discount log2(rank + 1).
double DcgAtK(std::span<const double> relevance, std::span<const double> scores, std::size_t k);

/// DCG@k of the relevance grades sorted in descending order.
double IdealDcgAtK(std::span<const double> relevance, std::size_t k);

double NdcgAtK(std::span<const double> relevance, std::span<const double> scores, std::size_t k);

/// 1 / log2(rank + 1) for a 1-based rank.
inline double RankDiscount(std::size_t rank) {
  return 1.0 / std::log2(static_cast<double>(rank) + 1.0);
}

}  // namespace smoothi
