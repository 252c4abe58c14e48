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

// Analytic gradients of the smooth losses with respect to raw scores, and a
// central finite-difference harness to check them.
//
// Two backward passes are offered. In stop-gradient mode each row is a
// softmax over alpha * s_j * P^r_j with the damping product P^r_j frozen, so
// the Jacobian of row r is alpha * P^r_i * I^r_j * (delta_ij - I^r_i). Full
// mode also propagates through P^r_j = prod_{l<r} (1 - I^l_j - delta), which
// is done in a single reverse sweep over the ranks.
//
// The per-list shift to positive scores subtracts min(raw). That minimum is
// held constant in both modes (a stop-gradient on the min), so the gradient of
// the shift is the identity. The true derivative would also route the summed
// gradient to the argmin document.

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smoothi/smooth_metrics.hpp"
#include "smoothi/smoothi.hpp"

namespace smoothi {

/// Pulls an adjoint on the indicator rows (k x n, row-major) back to the
/// scores. Throws StateError if `requested` differs from the mode the matrix
/// was computed for.
std::vector<double> IndicatorVjp(const SmoothIndicatorMatrix& indicators,
                                 std::span<const double> scores,
                                 std::span<const double> row_adjoint, GradMode requested);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;  // d loss / d raw score
};

/// Training loss and its gradient with respect to the raw scores.
LossAndGradient ComputeLossAndGradient(std::span<const double> relevance,
                                       std::span<const double> raw_scores, const LossSpec& spec,
                                       PositivityShift shift = {});

/// Same with the shift captured elsewhere, e.g. frozen at a base point.
LossAndGradient ComputeLossAndGradient(std::span<const double> relevance,
                                       std::span<const double> raw_scores, const LossSpec& spec,
                                       const ShiftMap& shift);

std::vector<double> LossGradient(std::span<const double> relevance,
                                 std::span<const double> raw_scores, const LossSpec& spec,
                                 PositivityShift shift = {});

struct BatchLossAndGradient {
  double loss = 0.0;              // mean over counted queries
  std::vector<double> gradient;   // per-query gradients, concatenated
  std::size_t counted = 0;
  std::size_t skipped = 0;        // metric undefined (no relevant document)
};

/// Mean training loss over a batch of queries. Cutoffs are clamped to each
/// list's length; queries without a relevant document are skipped for AP and
/// NDCG and get a zero gradient. `frozen_shifts`, when non-empty, supplies
/// one ShiftMap per query instead of taking each list's own minimum.
BatchLossAndGradient MeanLossAndGradient(std::span<const std::span<const double>> relevance,
                                         std::span<const std::span<const double>> raw_scores,
                                         const LossSpec& spec, PositivityShift shift = {},
                                         std::span<const ShiftMap> frozen_shifts = {});

/// The training loss as a function of the raw scores with everything the
/// analytic gradient treats as constant frozen at a base point: the shift
/// minimum always, and in stop-gradient mode also the damping products.
class FrozenLoss {
 public:
  FrozenLoss(std::span<const double> relevance, std::span<const double> base_raw_scores,
             const LossSpec& spec, PositivityShift shift = {});

  double operator()(std::span<const double> raw_scores) const;

 private:
  std::vector<double> relevance_;
  LossSpec spec_;
  std::size_t rows_;
  ShiftMap shift_;
  double normalizer_;
  std::vector<double> frozen_prefix_;  // stop-gradient mode only
};

struct GradientReport {
  std::vector<double> analytic;
  std::vector<double> numeric;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;  // denominator max(|analytic|, |numeric|, 1e-8)
  double step_h = 0.0;
  bool step_warning = false;  // h outside [1e-6, 1e-2]
};

inline constexpr double kDefaultFdStep = 1e-4;

/// Central differences of FrozenLoss against the analytic gradient.
GradientReport FiniteDifferenceCheck(std::span<const double> relevance,
                                     std::span<const double> raw_scores, const LossSpec& spec,
                                     double h = kDefaultFdStep, PositivityShift shift = {});

/// max_j |a_j - b_j| / max(|a_j|, |b_j|, 1e-8).
double MaxRelativeError(std::span<const double> a, std::span<const double> b);

}  // namespace smoothi
