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

// Numerical checks of the exponential error bound on smooth indicators.
//
// For strictly positive, distinct scores with smallest score s_min and minimal
// ratio beta between any two ordered scores, let
//
//   c     = ((beta + 1) / 2)^(1 / (K - 1))
//   gamma = min{delta, 0.5 - delta, (1 - delta)(c - 1)/(c + 1)}
//   rate  = s_min * min{1, (beta - 1)/2} / 2^(K - 1)
//
// If alpha > (ln(K - 1) - ln gamma) / rate, then every |I^r_j - I^{r,alpha}_j|
// for r <= K is at most eps_alpha = (K - 1) exp(-alpha * rate). The helpers
// here compute those quantities and measure the actual errors, including the
// consequences for P@K, AP, NDCG@K and Lipschitz compositions.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace smoothi {

struct BoundCertificate {
  double beta = 0.0;
  double s_min = 0.0;
  double c = 0.0;
  double gamma = 0.0;
  double alpha_threshold = 0.0;
  double decay_rate = 0.0;  // s_min * min{1, (beta-1)/2} / 2^(K-1)
  std::size_t k = 0;
  double delta = 0.0;

  bool SatisfiedBy(double alpha) const { return alpha > alpha_threshold; }
};

/// Throws CertificateUndefinedError for ties or non-positive scores,
/// UnsupportedKError for k == 1, RangeError for k > N and ParameterError for
/// delta outside (0, 0.5).
BoundCertificate ComputeCertificate(std::span<const double> scores, std::size_t k, double delta);

double EpsilonAlpha(const BoundCertificate& cert, double alpha);

/// d ln(eps_alpha) / d alpha.
inline double LogEpsilonSlope(const BoundCertificate& cert) { return -cert.decay_rate; }

struct BoundReport {
  double epsilon_alpha = 0.0;
  double max_indicator_err = 0.0;  // over ranks r <= K and all documents
  bool holds = false;
  std::vector<double> per_rank_err;
  // Same measurement restricted to documents with index < K, the literal
  // scope of the bound's quantifier.
  double max_err_first_k_docs = 0.0;
  bool holds_first_k_docs = false;
};

/// Throws PreconditionError when alpha does not exceed the threshold.
BoundReport VerifyIndicatorBound(std::span<const double> scores, std::size_t k, double alpha,
                                 double delta);

struct MetricBoundCheck {
  double exact = 0.0;
  double smooth = 0.0;
  double bound = 0.0;
  bool applicable = true;  // false when alpha is below the threshold this bound needs
  bool holds = true;

  double Error() const { return exact > smooth ? exact - smooth : smooth - exact; }
  double Slack() const { return bound - Error(); }
};

struct MetricBoundReport {
  MetricBoundCheck precision;          // |P@K - P@K^a| <= m * eps(K)
  MetricBoundCheck average_precision;  // |AP - AP^a| <= 2N (eps(N) + eps(N)^2)
  MetricBoundCheck ndcg;               // |NDCG@K - NDCG@K^a| <= N * eps(K)

  bool AllHold() const { return precision.holds && average_precision.holds && ndcg.holds; }
};

/// Binary relevance with at least one relevant document. The AP check uses
/// the certificate at K = N and is marked not applicable when alpha is below
/// that threshold; the other two require alpha above the K threshold.
MetricBoundReport VerifyMetricBounds(std::span<const double> relevance,
                                     std::span<const double> scores, std::size_t k, double alpha,
                                     double delta);

struct LipschitzFunction {
  enum class Kind { kIdentity, kExp2m1 };
  Kind kind = Kind::kIdentity;
  double domain_max = 1.0;  // G for x -> 2^x - 1 on [.., G]

  double operator()(double x) const;
  double Constant() const;  // 1, or 2^G ln 2
};

struct CorollaryReport {
  double lhs = 0.0;  // |h(I) - h(I^alpha)|
  double rhs = 0.0;  // (sum |a|)(sum |b|) * l * eps_alpha
  bool holds = false;
  double Slack() const { return rhs - lhs; }
};

/// h(I) = sum_r a_r g(sum_j b_j I^r_j) evaluated on hard and smooth rows.
CorollaryReport VerifyCorollary(std::span<const double> a_weights,
                                std::span<const double> b_weights, const LipschitzFunction& g,
                                std::span<const double> scores, std::size_t k, double alpha,
                                double delta);

/// Linear fit of ln(max indicator error) against alpha.
struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double theoretical_slope = 0.0;
  std::vector<double> alphas;
  std::vector<double> log_errors;
};

/// Requires every alpha above the threshold and every error strictly
/// positive (no underflow); throws PreconditionError otherwise.
DecayFit FitErrorDecay(std::span<const double> scores, std::size_t k, double delta,
                       std::span<const double> alphas);

/// Positive, distinct scores whose adjacent ratios (in sorted order) lie in
/// [min_ratio, max_ratio], in random order.
std::vector<double> GenerateStrictScores(std::mt19937_64& rng, std::size_t n,
                                         double min_ratio = 1.1, double max_ratio = 3.0);

struct BoundSweepSpec {
  std::size_t instances = 100;
  std::size_t max_docs = 10;
  std::vector<std::size_t> k_values{2, 3, 5};
  std::vector<double> alphas;               // absolute values
  std::vector<double> threshold_multiples;  // alpha = multiple * threshold, per instance
  double delta = 0.1;
  std::uint64_t seed = 1;
};

struct BoundRow {
  enum class Status { kHolds, kViolated, kSkipped };
  std::size_t instance_id = 0;
  std::size_t n = 0;
  std::size_t k = 0;
  double alpha = 0.0;
  double delta = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double alpha_threshold = 0.0;
  double epsilon_alpha = 0.0;
  double max_err = 0.0;
  Status status = Status::kSkipped;
  // Metric-level checks, filled for rows that pass the precondition.
  bool metrics_hold = true;
};

struct BoundSweepResult {
  std::vector<BoundRow> rows;
  std::size_t checked = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  double HoldFraction() const {
    return checked == 0 ? 1.0 : static_cast<double>(checked - violations) / checked;
  }
};

/// Draws `instances` random strict score lists, cycling through k_values,
/// and verifies the indicator and metric bounds at every requested alpha.
BoundSweepResult RunBoundSweep(const BoundSweepSpec& spec);

void WriteBoundCsvHeader(std::ostream& out);
void WriteBoundCsvRow(std::ostream& out, const BoundRow& row);
const char* ToString(BoundRow::Status status);

}  // namespace smoothi
