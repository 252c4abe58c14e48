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

#include "smoothi/smooth_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "smoothi/errors.hpp"
#include "smoothi/logging.hpp"
#include "smoothi/rank_core.hpp"

namespace smoothi {

const char* ToString(LossKind kind) {
  switch (kind) {
    case LossKind::kPrecisionAtK:
      return "p@k";
    case LossKind::kAveragePrecision:
      return "ap";
    case LossKind::kNdcgAtK:
      return "ndcg";
  }
  return "?";
}

LossKind ParseLossKind(std::string_view name) {
  if (name == "p@k" || name == "precision" || name == "p") return LossKind::kPrecisionAtK;
  if (name == "ap" || name == "map") return LossKind::kAveragePrecision;
  if (name == "ndcg" || name == "ndcg@k") return LossKind::kNdcgAtK;
  throw ParameterError("unknown loss kind '" + std::string(name) + "'");
}

std::size_t LossSpec::RowsFor(std::size_t n) const {
  if (kind == LossKind::kAveragePrecision) return std::min(n, ap_truncation);
  if (k == 0) return n;
  if (k > n) {
    throw RangeError("cutoff " + std::to_string(k) + " exceeds list length " + std::to_string(n));
  }
  return k;
}

LossSpec LossSpec::ClampedTo(std::size_t n) const {
  LossSpec out = *this;
  if (out.k > n) out.k = n;
  return out;
}

std::vector<double> ShiftScores(std::span<const double> raw, PositivityShift shift) {
  ValidateScores(raw, ScoreMode::kFinite);
  const ShiftMap map = MakeShiftMap(raw, shift);
  std::vector<double> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), map);
  std::vector<double> sorted = out;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    log::Warning("shifted score list contains ties; strict-mode assumptions do not hold");
  }
  return out;
}

ShiftMap MakeShiftMap(std::span<const double> raw, PositivityShift shift) {
  if (raw.empty()) throw InvalidInputError("empty score list");
  if (!(shift.margin > 0.0)) throw ParameterError("positivity margin must be positive");
  return ShiftMap{*std::min_element(raw.begin(), raw.end()), shift.margin};
}

void ValidateRelevanceFor(LossKind kind, std::span<const double> relevance,
                          std::span<const double> scores) {
  ValidateRelevance(relevance, scores);
  if (kind != LossKind::kNdcgAtK) ValidateBinaryRelevance(relevance);
  if (kind == LossKind::kPrecisionAtK) return;
  const bool any = std::any_of(relevance.begin(), relevance.end(), [](double r) { return r > 0.0; });
  if (!any) {
    throw UndefinedMetricError(std::string(kind == LossKind::kAveragePrecision ? "AP" : "NDCG") +
                               " undefined without a relevant document");
  }
}

double MetricNormalizer(LossKind kind, std::span<const double> relevance, std::size_t k) {
  switch (kind) {
    case LossKind::kPrecisionAtK:
      return 1.0 / static_cast<double>(k);
    case LossKind::kAveragePrecision:
      return 1.0 / std::accumulate(relevance.begin(), relevance.end(), 0.0);
    case LossKind::kNdcgAtK:
      return 1.0 / IdealDcgAtK(relevance, k);
  }
  return 0.0;
}

double MetricFromIndicators(LossKind kind, std::span<const double> relevance,
                            std::span<const double> rows, std::size_t k, double normalizer,
                            std::vector<double>* row_adjoint) {
  const std::size_t n = relevance.size();
  // gain[r] = sum_j rel_j * I^r_j, the smoothed relevance at rank r.
  std::vector<double> gain(k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t j = 0; j < n; ++j) gain[r] += relevance[j] * rows[r * n + j];
  }

  double value = 0.0;
  std::vector<double> d_gain(k, 0.0);
  switch (kind) {
    case LossKind::kPrecisionAtK:
      for (std::size_t r = 0; r < k; ++r) {
        value += gain[r];
        d_gain[r] = normalizer;
      }
      break;
    case LossKind::kAveragePrecision: {
      // value = sum_r gain_r * P_r with P_r = (1/r) sum_{t<=r} gain_t.
      std::vector<double> precision(k);
      double running = 0.0;
      for (std::size_t r = 0; r < k; ++r) {
        running += gain[r];
        precision[r] = running / static_cast<double>(r + 1);
        value += gain[r] * precision[r];
      }
      double tail = 0.0;  // sum_{r>=t} gain_r / r
      for (std::size_t t = k; t-- > 0;) {
        tail += gain[t] / static_cast<double>(t + 1);
        d_gain[t] = normalizer * (precision[t] + tail);
      }
      break;
    }
    case LossKind::kNdcgAtK:
      for (std::size_t r = 0; r < k; ++r) {
        const double pow2 = std::exp2(gain[r]);
        value += (pow2 - 1.0) * RankDiscount(r + 1);
        d_gain[r] = normalizer * std::numbers::ln2 * pow2 * RankDiscount(r + 1);
      }
      break;
  }

  if (row_adjoint != nullptr) {
    row_adjoint->assign(k * n, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t j = 0; j < n; ++j) (*row_adjoint)[r * n + j] = d_gain[r] * relevance[j];
    }
  }
  return normalizer * value;
}

namespace {

double EvaluateSmooth(LossKind kind, std::span<const double> relevance,
                      std::span<const double> scores, const LossSpec& spec) {
  ValidateRelevanceFor(kind, relevance, scores);
  const std::size_t k = spec.RowsFor(scores.size());
  SmoothIParams params = spec.params;
  params.k = k;
  const auto indicators = ComputeSmoothIndicators(scores, params);
  return MetricFromIndicators(kind, relevance, indicators.rows(), k,
                              MetricNormalizer(kind, relevance, k));
}

LossSpec WithKind(const LossSpec& spec, LossKind kind) {
  LossSpec out = spec;
  out.kind = kind;
  return out;
}

}  // namespace

double SmoothPrecisionAtK(std::span<const double> relevance, std::span<const double> scores,
                          const LossSpec& spec) {
  return EvaluateSmooth(LossKind::kPrecisionAtK, relevance, scores,
                        WithKind(spec, LossKind::kPrecisionAtK));
}

double SmoothAveragePrecision(std::span<const double> relevance, std::span<const double> scores,
                              const LossSpec& spec) {
  return EvaluateSmooth(LossKind::kAveragePrecision, relevance, scores,
                        WithKind(spec, LossKind::kAveragePrecision));
}

double SmoothNdcgAtK(std::span<const double> relevance, std::span<const double> scores,
                     const LossSpec& spec) {
  return EvaluateSmooth(LossKind::kNdcgAtK, relevance, scores, WithKind(spec, LossKind::kNdcgAtK));
}

double SmoothMetric(std::span<const double> relevance, std::span<const double> scores,
                    const LossSpec& spec) {
  return EvaluateSmooth(spec.kind, relevance, scores, spec);
}

double TrainingLoss(std::span<const double> relevance, std::span<const double> raw_scores,
                    const LossSpec& spec, PositivityShift shift) {
  const auto shifted = ShiftScores(raw_scores, shift);
  return 1.0 - SmoothMetric(relevance, shifted, spec);
}

std::vector<double> RelevanceForMetric(LossKind kind, std::span<const double> grades) {
  std::vector<double> out(grades.begin(), grades.end());
  if (kind != LossKind::kNdcgAtK) {
    for (double& g : out) g = g >= 1.0 ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace smoothi
