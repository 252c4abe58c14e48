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

// Differentiable P@K, AP and NDCG@K. Each metric replaces rel(j_r), the
// relevance of the document at rank r, by sum_j rel(j) * I^{r,alpha}_j.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smoothi/smoothi.hpp"

namespace smoothi {

enum class LossKind {
  kPrecisionAtK,
  kAveragePrecision,
  kNdcgAtK,
};

const char* ToString(LossKind kind);
/// Accepts "p@k" / "precision", "ap" / "map", "ndcg".
LossKind ParseLossKind(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::kNdcgAtK;
  /// Rank cutoff; 0 means the whole list. Ignored for AP, which always runs
  /// over the whole list (up to ap_truncation).
  std::size_t k = 0;
  /// alpha, delta and grad_mode are used; params.k is derived from `k`.
  SmoothIParams params;
  std::size_t ap_truncation = 128;

  /// Number of indicator rows needed for a list of n documents. Throws
  /// RangeError if an explicit cutoff exceeds n.
  std::size_t RowsFor(std::size_t n) const;

  /// Same spec with the cutoff clamped to n, for lists shorter than k.
  LossSpec ClampedTo(std::size_t n) const;
};

struct PositivityShift {
  double margin = 1.0;
};

/// raw - min(raw) + margin. Warns when the shifted list contains ties.
std::vector<double> ShiftScores(std::span<const double> raw, PositivityShift shift = {});

/// The map ShiftScores applies, with min(raw) captured. Subtracting first
/// keeps the minimum at exactly `margin`.
struct ShiftMap {
  double min = 0.0;
  double margin = 1.0;
  double operator()(double s) const { return (s - min) + margin; }
};

ShiftMap MakeShiftMap(std::span<const double> raw, PositivityShift shift = {});

/// Checks relevance against the metric kind: binary for P@K and AP,
/// non-negative otherwise. AP and NDCG also require a relevant document.
void ValidateRelevanceFor(LossKind kind, std::span<const double> relevance,
                          std::span<const double> scores);

/// 1/K for P@K, 1/sum(rel) for AP, 1/idealDCG@K for NDCG@K.
double MetricNormalizer(LossKind kind, std::span<const double> relevance, std::size_t k);

/// Evaluates the metric from k x n indicator rows. If `row_adjoint` is
/// non-null it receives d metric / d I^r_j in the same layout.
double MetricFromIndicators(LossKind kind, std::span<const double> relevance,
                            std::span<const double> rows, std::size_t k, double normalizer,
                            std::vector<double>* row_adjoint = nullptr);

double SmoothPrecisionAtK(std::span<const double> relevance, std::span<const double> scores,
                          const LossSpec& spec);
double SmoothAveragePrecision(std::span<const double> relevance, std::span<const double> scores,
                              const LossSpec& spec);
double SmoothNdcgAtK(std::span<const double> relevance, std::span<const double> scores,
                     const LossSpec& spec);

/// Dispatches on spec.kind. `scores` must already be positive.
double SmoothMetric(std::span<const double> relevance, std::span<const double> scores,
                    const LossSpec& spec);

/// 1 - SmoothMetric(rel, ShiftScores(raw_scores)).
double TrainingLoss(std::span<const double> relevance, std::span<const double> raw_scores,
                    const LossSpec& spec, PositivityShift shift = {});

/// Relevance as the metric sees it: grades >= 1 become 1 for P@K and AP,
/// graded values pass through for NDCG.
std::vector<double> RelevanceForMetric(LossKind kind, std::span<const double> grades);

}  // namespace smoothi
