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

#include "smoothi/bounds_lab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "smoothi/errors.hpp"
#include "smoothi/rank_core.hpp"
#include "smoothi/smooth_metrics.hpp"
#include "smoothi/smoothi.hpp"

namespace smoothi {
namespace {

std::string Num(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

void RequireCondition(const BoundCertificate& cert, double alpha) {
  if (!cert.SatisfiedBy(alpha)) {
    throw PreconditionError("alpha = " + Num(alpha) + " does not exceed the threshold " +
                            Num(cert.alpha_threshold) + " for K = " + std::to_string(cert.k));
  }
}

SmoothIndicatorMatrix Smooth(std::span<const double> scores, std::size_t k, double alpha,
                             double delta) {
  SmoothIParams params;
  params.alpha = alpha;
  params.delta = delta;
  params.k = k;
  return ComputeSmoothIndicators(scores, params, ScoreMode::kStrict);
}

}  // namespace

BoundCertificate ComputeCertificate(std::span<const double> scores, std::size_t k, double delta) {
  if (!(delta > 0.0 && delta < 0.5)) {
    throw ParameterError("delta must lie in (0, 0.5), got " + Num(delta));
  }
  if (k == 1) {
    throw UnsupportedKError("the certificate needs K >= 2 (ln(K-1) and 1/(K-1) are undefined)");
  }
  if (k == 0 || k > scores.size()) {
    throw RangeError("K = " + std::to_string(k) + " outside [2, " + std::to_string(scores.size()) +
                     "]");
  }
  try {
    ValidateScores(scores, ScoreMode::kStrict);
  } catch (const Error& e) {
    throw CertificateUndefinedError(std::string("certificate undefined: ") + e.what());
  }

  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  BoundCertificate cert;
  cert.k = k;
  cert.delta = delta;
  cert.s_min = sorted.back();
  // The minimal ratio over all ordered pairs is attained by a sorted neighbour.
  cert.beta = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    cert.beta = std::min(cert.beta, sorted[i] / sorted[i + 1]);
  }
  if (!std::isfinite(cert.beta)) {
    // Single document: no ordered pair; every ratio constraint is vacuous.
    throw CertificateUndefinedError("certificate needs at least two documents");
  }
  const double km1 = static_cast<double>(k - 1);
  cert.c = std::pow((cert.beta + 1.0) / 2.0, 1.0 / km1);
  cert.gamma = std::min({delta, 0.5 - delta, (1.0 - delta) * (cert.c - 1.0) / (cert.c + 1.0)});
  const double spread = std::min(1.0, (cert.beta - 1.0) / 2.0);
  cert.decay_rate = cert.s_min * spread / std::exp2(km1);
  cert.alpha_threshold = (std::log(km1) - std::log(cert.gamma)) / cert.decay_rate;
  return cert;
}

double EpsilonAlpha(const BoundCertificate& cert, double alpha) {
  return static_cast<double>(cert.k - 1) * std::exp(-alpha * cert.decay_rate);
}

BoundReport VerifyIndicatorBound(std::span<const double> scores, std::size_t k, double alpha,
                                 double delta) {
  const auto cert = ComputeCertificate(scores, k, delta);
  RequireCondition(cert, alpha);
  const std::size_t n = scores.size();
  const auto smooth = Smooth(scores, k, alpha, delta);
  const auto hard = HardIndicatorMatrix(scores, k);

  BoundReport report;
  report.epsilon_alpha = EpsilonAlpha(cert, alpha);
  report.per_rank_err.assign(k, 0.0);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t j = 0; j < n; ++j) {
      const double err = std::abs(hard[r * n + j] - smooth.At(r, j));
      report.per_rank_err[r] = std::max(report.per_rank_err[r], err);
      if (j < k) report.max_err_first_k_docs = std::max(report.max_err_first_k_docs, err);
    }
    report.max_indicator_err = std::max(report.max_indicator_err, report.per_rank_err[r]);
  }
  report.holds = report.max_indicator_err <= report.epsilon_alpha;
  report.holds_first_k_docs = report.max_err_first_k_docs <= report.epsilon_alpha;
  return report;
}

MetricBoundReport VerifyMetricBounds(std::span<const double> relevance,
                                     std::span<const double> scores, std::size_t k, double alpha,
                                     double delta) {
  ValidateRelevanceFor(LossKind::kAveragePrecision, relevance, scores);
  const std::size_t n = scores.size();
  const auto cert_k = ComputeCertificate(scores, k, delta);
  RequireCondition(cert_k, alpha);
  const double eps_k = EpsilonAlpha(cert_k, alpha);

  LossSpec spec;
  spec.k = k;
  spec.params.alpha = alpha;
  spec.params.delta = delta;
  spec.ap_truncation = n;

  MetricBoundReport report;
  const double m = std::accumulate(relevance.begin(), relevance.end(), 0.0);
  report.precision.exact = PrecisionAtK(relevance, scores, k);
  report.precision.smooth = SmoothPrecisionAtK(relevance, scores, spec);
  report.precision.bound = m * eps_k;
  report.precision.holds = report.precision.Error() <= report.precision.bound;

  report.ndcg.exact = NdcgAtK(relevance, scores, k);
  report.ndcg.smooth = SmoothNdcgAtK(relevance, scores, spec);
  report.ndcg.bound = static_cast<double>(n) * eps_k;
  report.ndcg.holds = report.ndcg.Error() <= report.ndcg.bound;

  auto& ap = report.average_precision;
  ap.exact = AveragePrecision(relevance, scores);
  ap.smooth = SmoothAveragePrecision(relevance, scores, spec);
  if (n >= 2) {
    const auto cert_n = ComputeCertificate(scores, n, delta);
    ap.applicable = cert_n.SatisfiedBy(alpha);
    const double eps_n = EpsilonAlpha(cert_n, alpha);
    ap.bound = 2.0 * static_cast<double>(n) * (eps_n + eps_n * eps_n);
  } else {
    ap.applicable = false;
  }
  ap.holds = !ap.applicable || ap.Error() <= ap.bound;
  return report;
}

double LipschitzFunction::operator()(double x) const {
  return kind == Kind::kIdentity ? x : std::exp2(x) - 1.0;
}

double LipschitzFunction::Constant() const {
  return kind == Kind::kIdentity ? 1.0 : std::exp2(domain_max) * std::numbers::ln2;
}

CorollaryReport VerifyCorollary(std::span<const double> a_weights,
                                std::span<const double> b_weights, const LipschitzFunction& g,
                                std::span<const double> scores, std::size_t k, double alpha,
                                double delta) {
  const std::size_t n = scores.size();
  if (a_weights.size() != k || b_weights.size() != n) {
    throw ShapeError("corollary weights must have lengths K and N");
  }
  if (g.kind == LipschitzFunction::Kind::kExp2m1) {
    // Hard and smooth arguments are convex combinations of the b weights.
    const double b_max = *std::max_element(b_weights.begin(), b_weights.end());
    if (b_max > g.domain_max) {
      throw ParameterError("b weights exceed the Lipschitz domain bound G = " +
                           Num(g.domain_max));
    }
  }
  const auto cert = ComputeCertificate(scores, k, delta);
  RequireCondition(cert, alpha);
  const auto smooth = Smooth(scores, k, alpha, delta);
  const auto hard = HardIndicatorMatrix(scores, k);

  double h_hard = 0.0;
  double h_smooth = 0.0;
  for (std::size_t r = 0; r < k; ++r) {
    double arg_hard = 0.0;
    double arg_smooth = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      arg_hard += b_weights[j] * hard[r * n + j];
      arg_smooth += b_weights[j] * smooth.At(r, j);
    }
    h_hard += a_weights[r] * g(arg_hard);
    h_smooth += a_weights[r] * g(arg_smooth);
  }
  auto abs_sum = [](std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0,
                           [](double acc, double x) { return acc + std::abs(x); });
  };
  CorollaryReport report;
  report.lhs = std::abs(h_hard - h_smooth);
  report.rhs = abs_sum(a_weights) * abs_sum(b_weights) * g.Constant() * EpsilonAlpha(cert, alpha);
  report.holds = report.lhs <= report.rhs;
  return report;
}

DecayFit FitErrorDecay(std::span<const double> scores, std::size_t k, double delta,
                       std::span<const double> alphas) {
  if (alphas.size() < 2) throw PreconditionError("decay fit needs at least two alpha values");
  const auto cert = ComputeCertificate(scores, k, delta);
  DecayFit fit;
  fit.theoretical_slope = LogEpsilonSlope(cert);
  for (double alpha : alphas) {
    const auto report = VerifyIndicatorBound(scores, k, alpha, delta);
    if (!(report.max_indicator_err > 0.0)) {
      throw PreconditionError("indicator error underflowed to zero at alpha = " + Num(alpha));
    }
    fit.alphas.push_back(alpha);
    fit.log_errors.push_back(std::log(report.max_indicator_err));
  }
  const double count = static_cast<double>(fit.alphas.size());
  const double mean_x = std::accumulate(fit.alphas.begin(), fit.alphas.end(), 0.0) / count;
  const double mean_y = std::accumulate(fit.log_errors.begin(), fit.log_errors.end(), 0.0) / count;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < fit.alphas.size(); ++i) {
    const double dx = fit.alphas[i] - mean_x;
    const double dy = fit.log_errors[i] - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  fit.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

std::vector<double> GenerateStrictScores(std::mt19937_64& rng, std::size_t n, double min_ratio,
                                         double max_ratio) {
  std::uniform_real_distribution<double> base(0.5, 2.0);
  std::uniform_real_distribution<double> ratio(min_ratio, max_ratio);
  std::vector<double> scores(n);
  if (n == 0) return scores;
  scores[0] = base(rng);
  for (std::size_t i = 1; i < n; ++i) scores[i] = scores[i - 1] * ratio(rng);
  std::shuffle(scores.begin(), scores.end(), rng);
  return scores;
}

BoundSweepResult RunBoundSweep(const BoundSweepSpec& spec) {
  if (!(spec.delta > 0.0 && spec.delta < 0.5)) {
    throw ParameterError("delta must lie in (0, 0.5), got " + Num(spec.delta));
  }
  if (spec.k_values.empty()) throw ParameterError("sweep needs at least one K");
  for (std::size_t k : spec.k_values) {
    if (k < 2 || k > spec.max_docs) {
      throw ParameterError("sweep K values must lie in [2, max_docs]");
    }
  }

  std::mt19937_64 rng(spec.seed);
  BoundSweepResult result;
  for (std::size_t id = 0; id < spec.instances; ++id) {
    const std::size_t k = spec.k_values[id % spec.k_values.size()];
    const std::size_t n = std::uniform_int_distribution<std::size_t>(k, spec.max_docs)(rng);
    const auto scores = GenerateStrictScores(rng, n);
    std::bernoulli_distribution coin(0.4);
    std::vector<double> relevance(n);
    for (double& r : relevance) r = coin(rng) ? 1.0 : 0.0;
    if (std::accumulate(relevance.begin(), relevance.end(), 0.0) == 0.0) relevance[0] = 1.0;

    const auto cert = ComputeCertificate(scores, k, spec.delta);
    std::vector<double> alphas = spec.alphas;
    for (double m : spec.threshold_multiples) alphas.push_back(m * cert.alpha_threshold);

    for (double alpha : alphas) {
      BoundRow row;
      row.instance_id = id;
      row.n = n;
      row.k = k;
      row.alpha = alpha;
      row.delta = spec.delta;
      row.beta = cert.beta;
      row.gamma = cert.gamma;
      row.alpha_threshold = cert.alpha_threshold;
      row.epsilon_alpha = EpsilonAlpha(cert, alpha);
      if (!cert.SatisfiedBy(alpha)) {
        row.status = BoundRow::Status::kSkipped;
        ++result.skipped;
      } else {
        const auto report = VerifyIndicatorBound(scores, k, alpha, spec.delta);
        const auto metrics = VerifyMetricBounds(relevance, scores, k, alpha, spec.delta);
        row.max_err = report.max_indicator_err;
        row.metrics_hold = metrics.AllHold();
        const bool ok = report.holds && row.metrics_hold;
        row.status = ok ? BoundRow::Status::kHolds : BoundRow::Status::kViolated;
        ++result.checked;
        if (!ok) ++result.violations;
      }
      result.rows.push_back(row);
    }
  }
  return result;
}

const char* ToString(BoundRow::Status status) {
  switch (status) {
    case BoundRow::Status::kHolds:
      return "true";
    case BoundRow::Status::kViolated:
      return "false";
    case BoundRow::Status::kSkipped:
      return "precondition-skipped";
  }
  return "?";
}

void WriteBoundCsvHeader(std::ostream& out) {
  out << "instance_id,N,K,alpha,delta,beta,gamma,alpha_threshold,epsilon_alpha,max_err,holds,"
         "metric_bounds_hold\n";
}

void WriteBoundCsvRow(std::ostream& out, const BoundRow& row) {
  const bool skipped = row.status == BoundRow::Status::kSkipped;
  out << row.instance_id << ',' << row.n << ',' << row.k << ',' << Num(row.alpha) << ','
      << Num(row.delta) << ',' << Num(row.beta) << ',' << Num(row.gamma) << ','
      << Num(row.alpha_threshold) << ',' << Num(row.epsilon_alpha) << ','
      << (skipped ? std::string() : Num(row.max_err)) << ',' << ToString(row.status) << ','
      << (skipped ? "" : (row.metrics_hold ? "true" : "false")) << '\n';
}

}  // namespace smoothi
