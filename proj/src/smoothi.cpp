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
#include <string>

#include "smoothi/errors.hpp"

namespace smoothi {

const char* ToString(GradMode mode) {
  return mode == GradMode::kFull ? "full" : "stop_gradient";
}

GradMode ParseGradMode(std::string_view name) {
  if (name == "full") return GradMode::kFull;
  if (name == "stop_gradient" || name == "stop-gradient") return GradMode::kStopGradient;
  throw ParameterError("unknown grad mode '" + std::string(name) + "'");
}

void SmoothIParams::Validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ParameterError("alpha must be positive and finite, got " + std::to_string(alpha));
  }
  if (!(delta > 0.0 && delta < 0.5)) {
    throw ParameterError("delta must lie in (0, 0.5), got " + std::to_string(delta));
  }
  if (k == 0) throw ParameterError("k must be at least 1");
}

SmoothIndicatorMatrix::SmoothIndicatorMatrix(std::size_t n, const SmoothIParams& params)
    : k_(params.k),
      n_(n),
      alpha_(params.alpha),
      delta_(params.delta),
      grad_mode_(params.grad_mode),
      rows_(params.k * n, 0.0),
      prefix_(params.k * n, 1.0) {}

void StableSoftmaxInto(std::span<const double> logits, std::span<double> out) {
  if (logits.empty()) throw RangeError("softmax of an empty vector");
  const double max_logit = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    out[j] = std::exp(logits[j] - max_logit);
    total += out[j];
  }
  for (double& v : out) v /= total;
}

std::vector<double> StableSoftmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  StableSoftmaxInto(logits, out);
  return out;
}

SmoothIndicatorMatrix ComputeSmoothIndicators(std::span<const double> scores,
                                              const SmoothIParams& params, ScoreMode mode) {
  params.Validate();
  ValidateScores(scores, mode == ScoreMode::kFinite ? ScoreMode::kPositive : mode);
  const std::size_t n = scores.size();
  if (params.k > n) {
    throw RangeError("k = " + std::to_string(params.k) + " exceeds list length " +
                     std::to_string(n));
  }

  SmoothIndicatorMatrix out(n, params);
  std::vector<double> logits(n);
  for (std::size_t r = 0; r < params.k; ++r) {
    auto prefix = out.MutablePrefix(r);
    if (r > 0) {
      const auto prev_prefix = out.Prefix(r - 1);
      const auto prev_row = out.Row(r - 1);
      for (std::size_t j = 0; j < n; ++j) {
        prefix[j] = prev_prefix[j] * (1.0 - prev_row[j] - params.delta);
      }
    }
    // r == 0 keeps the all-ones prefix, so row 1 is exactly softmax(alpha * s).
    for (std::size_t j = 0; j < n; ++j) logits[j] = params.alpha * scores[j] * prefix[j];
    StableSoftmaxInto(logits, out.MutableRow(r));
  }
  return out;
}

std::vector<double> IndicatorsWithFrozenPrefix(std::span<const double> scores, double alpha,
                                               std::span<const double> prefix, std::size_t k) {
  const std::size_t n = scores.size();
  if (prefix.size() < k * n) throw ShapeError("frozen prefix matrix too small");
  std::vector<double> rows(k * n);
  std::vector<double> logits(n);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t j = 0; j < n; ++j) logits[j] = alpha * scores[j] * prefix[r * n + j];
    StableSoftmaxInto(logits, std::span<double>(rows.data() + r * n, n));
  }
  return rows;
}

}  // namespace smoothi
