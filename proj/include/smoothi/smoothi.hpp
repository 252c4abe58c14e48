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

// Smooth rank indicators.
//
// Row r of the indicator matrix is a parameterized softmax over the scores,
// where every score is first damped by the product over earlier ranks l < r
// of (1 - I^l_j - delta). Documents that already took most of the mass at an
// earlier rank see their logit shrink (or flip sign), so the softmax at rank r
// concentrates on the r-th highest score. Row 1 is the plain softmax of
// alpha * scores.

#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "smoothi/rank_core.hpp"

namespace smoothi {

enum class GradMode {
  kFull,          // differentiate through the recursive damping products
  kStopGradient,  // damping products are constants in the backward pass
};

const char* ToString(GradMode mode);
GradMode ParseGradMode(const std::string_view name);

struct SmoothIParams {
  double alpha = 1.0;  // inverse temperature
  double delta = 0.1;  // damping, in (0, 0.5)
  std::size_t k = 1;   // number of ranks to produce
  GradMode grad_mode = GradMode::kStopGradient;

  /// Throws ParameterError if alpha <= 0, delta is outside (0, 0.5) or k == 0.
  void Validate() const;
};

/// K x N matrix of smooth indicators plus the damping products that produced
/// each row. Both are row-major: element (r, j) lives at r * n + j.
class SmoothIndicatorMatrix {
 public:
  SmoothIndicatorMatrix(std::size_t n, const SmoothIParams& params);

  std::size_t k() const { return k_; }
  std::size_t n() const { return n_; }
  double alpha() const { return alpha_; }
  double delta() const { return delta_; }
  GradMode grad_mode() const { return grad_mode_; }

  std::span<const double> Row(std::size_t r) const { return {rows_.data() + r * n_, n_}; }
  std::span<double> MutableRow(std::size_t r) { return {rows_.data() + r * n_, n_}; }
  double At(std::size_t r, std::size_t j) const { return rows_[r * n_ + j]; }

  /// prod_{l < r} (1 - I^l_j - delta); all ones for r = 0.
  std::span<const double> Prefix(std::size_t r) const { return {prefix_.data() + r * n_, n_}; }
  std::span<double> MutablePrefix(std::size_t r) { return {prefix_.data() + r * n_, n_}; }

  const std::vector<double>& rows() const { return rows_; }

 private:
  std::size_t k_;
  std::size_t n_;
  double alpha_;
  double delta_;
  GradMode grad_mode_;
  std::vector<double> rows_;
  std::vector<double> prefix_;
};

/// softmax(logits), computed after subtracting the maximum logit.
std::vector<double> StableSoftmax(std::span<const double> logits);
void StableSoftmaxInto(std::span<const double> logits, std::span<double> out);

/// Computes rows 1..params.k in O(k * n). Scores must be positive; ties are
/// accepted unless `mode` is ScoreMode::kStrict.
SmoothIndicatorMatrix ComputeSmoothIndicators(std::span<const double> scores,
                                              const SmoothIParams& params,
                                              ScoreMode mode = ScoreMode::kPositive);

/// Rows recomputed with caller-supplied damping products (K x N, row-major)
/// held fixed. This is the forward pass the stop-gradient backward pass
/// differentiates.
std::vector<double> IndicatorsWithFrozenPrefix(std::span<const double> scores, double alpha,
                                               std::span<const double> prefix, std::size_t k);

}  // namespace smoothi
