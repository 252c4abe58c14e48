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

#include "smoothi/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "smoothi/errors.hpp"
#include "smoothi/logging.hpp"

namespace smoothi {

std::vector<double> IndicatorVjp(const SmoothIndicatorMatrix& indicators,
                                 std::span<const double> scores,
                                 std::span<const double> row_adjoint, GradMode requested) {
  if (requested != indicators.grad_mode()) {
    throw StateError(std::string("indicator matrix was computed for ") +
                     ToString(indicators.grad_mode()) + " mode, gradient requested in " +
                     ToString(requested) + " mode");
  }
  const std::size_t k = indicators.k();
  const std::size_t n = indicators.n();
  if (scores.size() != n || row_adjoint.size() != k * n) {
    throw ShapeError("indicator adjoint does not match the indicator matrix");
  }
  const double alpha = indicators.alpha();
  const double delta = indicators.delta();
  const bool full = requested == GradMode::kFull;

  std::vector<double> grad(n, 0.0);
  std::vector<double> adj_row(n);
  // Adjoint of the damping product P^{r+1}, carried down from later ranks.
  std::vector<double> adj_prefix_next(n, 0.0);
  std::vector<double> carry(n, 0.0);

  for (std::size_t r = k; r-- > 0;) {
    const auto row = indicators.Row(r);
    const auto prefix = indicators.Prefix(r);
    std::copy_n(row_adjoint.begin() + static_cast<std::ptrdiff_t>(r * n), n, adj_row.begin());

    if (full && r + 1 < k) {
      // P^{r+1}_j = P^r_j * (1 - I^r_j - delta).
      for (std::size_t j = 0; j < n; ++j) {
        adj_row[j] -= adj_prefix_next[j] * prefix[j];
        carry[j] = adj_prefix_next[j] * (1.0 - row[j] - delta);
      }
    }

    double dot = 0.0;
    for (std::size_t j = 0; j < n; ++j) dot += adj_row[j] * row[j];
    for (std::size_t j = 0; j < n; ++j) {
      const double adj_logit = row[j] * (adj_row[j] - dot);
      grad[j] += alpha * prefix[j] * adj_logit;
      if (full) adj_prefix_next[j] = alpha * scores[j] * adj_logit + (r + 1 < k ? carry[j] : 0.0);
    }
  }
  return grad;
}

LossAndGradient ComputeLossAndGradient(std::span<const double> relevance,
                                       std::span<const double> raw_scores, const LossSpec& spec,
                                       PositivityShift shift) {
  ValidateScores(raw_scores, ScoreMode::kFinite);
  return ComputeLossAndGradient(relevance, raw_scores, spec, MakeShiftMap(raw_scores, shift));
}

LossAndGradient ComputeLossAndGradient(std::span<const double> relevance,
                                       std::span<const double> raw_scores, const LossSpec& spec,
                                       const ShiftMap& shift) {
  ValidateScores(raw_scores, ScoreMode::kFinite);
  std::vector<double> scores(raw_scores.size());
  std::transform(raw_scores.begin(), raw_scores.end(), scores.begin(), shift);
  ValidateRelevanceFor(spec.kind, relevance, scores);

  SmoothIParams params = spec.params;
  params.k = spec.RowsFor(scores.size());
  const auto indicators = ComputeSmoothIndicators(scores, params);
  std::vector<double> row_adjoint;
  const double metric =
      MetricFromIndicators(spec.kind, relevance, indicators.rows(), params.k,
                           MetricNormalizer(spec.kind, relevance, params.k), &row_adjoint);

  LossAndGradient out;
  out.loss = 1.0 - metric;
  out.gradient = IndicatorVjp(indicators, scores, row_adjoint, params.grad_mode);
  for (double& g : out.gradient) g = -g;
  return out;
}

std::vector<double> LossGradient(std::span<const double> relevance,
                                 std::span<const double> raw_scores, const LossSpec& spec,
                                 PositivityShift shift) {
  return ComputeLossAndGradient(relevance, raw_scores, spec, shift).gradient;
}

BatchLossAndGradient MeanLossAndGradient(std::span<const std::span<const double>> relevance,
                                         std::span<const std::span<const double>> raw_scores,
                                         const LossSpec& spec, PositivityShift shift,
                                         std::span<const ShiftMap> frozen_shifts) {
  if (relevance.size() != raw_scores.size() ||
      (!frozen_shifts.empty() && frozen_shifts.size() != raw_scores.size())) {
    throw ShapeError("batch has mismatched relevance, score or shift lists");
  }
  BatchLossAndGradient out;
  std::vector<LossAndGradient> per_query(raw_scores.size());
  std::vector<bool> used(raw_scores.size(), false);
  for (std::size_t q = 0; q < raw_scores.size(); ++q) {
    const bool defined =
        spec.kind == LossKind::kPrecisionAtK ||
        std::any_of(relevance[q].begin(), relevance[q].end(), [](double r) { return r > 0.0; });
    if (!defined) {
      ++out.skipped;
      continue;
    }
    const LossSpec clamped = spec.ClampedTo(raw_scores[q].size());
    per_query[q] = frozen_shifts.empty()
                       ? ComputeLossAndGradient(relevance[q], raw_scores[q], clamped, shift)
                       : ComputeLossAndGradient(relevance[q], raw_scores[q], clamped,
                                                frozen_shifts[q]);
    used[q] = true;
    ++out.counted;
  }
  const double count = static_cast<double>(out.counted);
  for (std::size_t q = 0; q < raw_scores.size(); ++q) {
    if (!used[q]) {
      out.gradient.insert(out.gradient.end(), raw_scores[q].size(), 0.0);
      continue;
    }
    out.loss += per_query[q].loss / count;
    for (double g : per_query[q].gradient) out.gradient.push_back(g / count);
  }
  return out;
}

FrozenLoss::FrozenLoss(std::span<const double> relevance,
                       std::span<const double> base_raw_scores, const LossSpec& spec,
                       PositivityShift shift)
    : relevance_(relevance.begin(), relevance.end()),
      spec_(spec),
      rows_(spec.RowsFor(base_raw_scores.size())),
      shift_(MakeShiftMap(base_raw_scores, shift)) {
  std::vector<double> base(base_raw_scores.size());
  std::transform(base_raw_scores.begin(), base_raw_scores.end(), base.begin(), shift_);
  ValidateRelevanceFor(spec.kind, relevance, base);
  normalizer_ = MetricNormalizer(spec.kind, relevance, rows_);
  if (spec.params.grad_mode == GradMode::kStopGradient) {
    SmoothIParams params = spec.params;
    params.k = rows_;
    const auto indicators = ComputeSmoothIndicators(base, params);
    frozen_prefix_.reserve(rows_ * base.size());
    for (std::size_t r = 0; r < rows_; ++r) {
      const auto p = indicators.Prefix(r);
      frozen_prefix_.insert(frozen_prefix_.end(), p.begin(), p.end());
    }
  }
}

double FrozenLoss::operator()(std::span<const double> raw_scores) const {
  std::vector<double> scores(raw_scores.size());
  std::transform(raw_scores.begin(), raw_scores.end(), scores.begin(), shift_);
  std::vector<double> rows;
  if (spec_.params.grad_mode == GradMode::kStopGradient) {
    rows = IndicatorsWithFrozenPrefix(scores, spec_.params.alpha, frozen_prefix_, rows_);
  } else {
    SmoothIParams params = spec_.params;
    params.k = rows_;
    rows = ComputeSmoothIndicators(scores, params).rows();
  }
  return 1.0 - MetricFromIndicators(spec_.kind, relevance_, rows, rows_, normalizer_);
}

double MaxRelativeError(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double denom = std::max({std::abs(a[j]), std::abs(b[j]), 1e-8});
    worst = std::max(worst, std::abs(a[j] - b[j]) / denom);
  }
  return worst;
}

GradientReport FiniteDifferenceCheck(std::span<const double> relevance,
                                     std::span<const double> raw_scores, const LossSpec& spec,
                                     double h, PositivityShift shift) {
  GradientReport report;
  report.step_h = h;
  if (!(h > 0.0)) throw ParameterError("finite-difference step must be positive");
  if (h < 1e-6 || h > 1e-2) {
    report.step_warning = true;
    std::ostringstream msg;
    msg << "finite-difference step " << h
        << " outside [1e-6, 1e-2]; expect cancellation or truncation error";
    log::Warning(msg.str());
  }

  report.analytic = LossGradient(relevance, raw_scores, spec, shift);
  const FrozenLoss loss(relevance, raw_scores, spec, shift);
  std::vector<double> probe(raw_scores.begin(), raw_scores.end());
  report.numeric.resize(probe.size());
  for (std::size_t j = 0; j < probe.size(); ++j) {
    const double saved = probe[j];
    probe[j] = saved + h;
    const double up = loss(probe);
    probe[j] = saved - h;
    const double down = loss(probe);
    probe[j] = saved;
    report.numeric[j] = (up - down) / (2.0 * h);
  }
  for (std::size_t j = 0; j < probe.size(); ++j) {
    report.max_abs_err =
        std::max(report.max_abs_err, std::abs(report.analytic[j] - report.numeric[j]));
  }
  report.max_rel_err = MaxRelativeError(report.analytic, report.numeric);
  return report;
}

}  // namespace smoothi
