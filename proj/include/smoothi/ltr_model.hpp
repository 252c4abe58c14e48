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

// Feed-forward document scorer, its training loop and rank-metric evaluation.
//
// Layers: batch-norm -> dense (hidden units) -> ReLU -> batch-norm -> dense
// to one score. All trainable parameters live in one flat vector so the
// optimizer, checkpoints and gradient checks can treat them uniformly.

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smoothi/data_io.hpp"
#include "smoothi/smooth_metrics.hpp"

namespace smoothi {

enum class ScorerMode { kTrain, kEval };

class Scorer {
 public:
  static constexpr double kBatchNormMomentum = 0.9;  // running = m * running + (1 - m) * batch
  static constexpr double kBatchNormEps = 1e-5;

  /// He-uniform dense weights, zero biases, batch-norm scale 1 and shift 0,
  /// running mean 0 and variance 1. Starts in eval mode.
  Scorer(std::size_t input_dim, std::size_t hidden, std::mt19937_64& rng);
  Scorer(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }
  ScorerMode mode() const { return mode_; }
  void SetMode(ScorerMode mode) { mode_ = mode; }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  struct RunningStats {
    Eigen::VectorXd mean1, var1, mean2, var2;
  };
  RunningStats& running() { return running_; }
  const RunningStats& running() const { return running_; }

  /// Intermediate values of one forward pass, needed by Backward.
  struct Cache {
    ScorerMode mode = ScorerMode::kEval;
    Eigen::MatrixXd xhat1, z1, pre_relu, rhat2;
    Eigen::RowVectorXd batch_mean1, batch_var1, batch_mean2, batch_var2;
    Eigen::RowVectorXd inv_std1, inv_std2;
  };

  /// Scores one row per document. Train mode normalizes with the statistics
  /// of `x` itself; eval mode uses the running statistics. Throws ShapeError
  /// on a column count other than input_dim().
  Eigen::VectorXd Forward(const FeatureMatrix& x, Cache* cache = nullptr) const;
  std::vector<double> Score(const FeatureMatrix& x) const;

  /// Gradient of sum_i d_scores[i] * score_i with respect to parameters().
  Eigen::VectorXd Backward(const Cache& cache, const Eigen::VectorXd& d_scores) const;

  /// Folds the batch statistics of a train-mode pass into the running ones.
  void UpdateRunningStats(const Cache& cache);

 private:
  struct Layout {
    Eigen::Index gamma1, beta1, w1, b1, gamma2, beta2, w2, b2, total;
  };
  static Layout MakeLayout(std::size_t input_dim, std::size_t hidden);

  std::size_t input_dim_;
  std::size_t hidden_;
  Layout layout_;
  Eigen::VectorXd params_;
  RunningStats running_;
  ScorerMode mode_ = ScorerMode::kEval;
};

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(Eigen::Index size, double learning_rate, AdamParams params = {});
  void Step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad);
  std::size_t steps() const { return steps_; }

 private:
  double lr_;
  AdamParams p_;
  Eigen::VectorXd m_, v_;
  std::size_t steps_ = 0;
};

/// Rank-metric cutoffs; an NDCG cutoff of 0 means the whole list.
struct EvalCutoffs {
  std::vector<std::size_t> precision{1, 5, 10};
  std::vector<std::size_t> ndcg{1, 5, 10, 0};
};

struct QueryMetrics {
  std::string query_id;
  std::vector<double> values;  // parallel to MetricTable::names
};

struct MetricTable {
  std::vector<std::string> names;  // P@k..., NDCG@k..., NDCG@N, MAP
  std::vector<double> mean;
  std::vector<QueryMetrics> per_query;
  std::size_t skipped = 0;  // queries without any relevant document

  /// Throws ConfigError for an unknown name.
  double Value(std::string_view name) const;
};

using ScoreFn = std::function<std::vector<double>(const QueryGroup&)>;

/// Exact metrics averaged over queries. P@k counts relevant documents in the
/// top min(k, N) and divides by k; NDCG@k with k > N uses N. P@k and MAP
/// binarize grades at 1, NDCG uses raw grades.
MetricTable EvaluateScores(const std::vector<const QueryGroup*>& groups, const ScoreFn& score,
                           const EvalCutoffs& cutoffs = {});

/// Throws StateError unless the scorer is in eval mode.
MetricTable Evaluate(const Scorer& scorer, const std::vector<const QueryGroup*>& groups,
                     const EvalCutoffs& cutoffs = {});

struct ObjectiveResult {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // d loss / d parameters
  std::size_t counted = 0;
  std::size_t skipped = 0;
};

/// Mean smooth loss over a batch of queries scored in one pass (batch-norm
/// statistics span every document of the batch) and its parameter gradient.
ObjectiveResult BatchObjective(const Scorer& scorer, const std::vector<const QueryGroup*>& batch,
                               const LossSpec& loss, std::span<const ShiftMap> frozen_shifts = {},
                               Scorer::Cache* cache = nullptr);

/// Per-query shifts of one batch pass, for holding them fixed in gradient
/// checks.
std::vector<ShiftMap> BatchShifts(const Scorer& scorer, const std::vector<const QueryGroup*>& batch);

struct TrainConfig {
  LossSpec loss = DefaultLoss();
  double learning_rate = 1e-3;
  std::size_t batch_size = 128;  // queries per batch
  std::size_t epochs = 50;
  AdamParams adam;
  std::uint64_t seed = 1;
  std::size_t hidden = 1024;
  std::size_t select_cutoff = 0;  // model selection on validation NDCG@cutoff, 0 = N

  static LossSpec DefaultLoss();
  void Validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::size_t skipped_queries = 0;
  double selection_metric = 0.0;
  MetricTable validation;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
};

struct TrainResult {
  Scorer scorer;  // parameters of the best validation epoch, eval mode
  TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Throws DataError for an empty train or validation split and
/// DivergenceError when the loss or gradient stops being finite.
TrainResult Train(const Dataset& dataset, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

std::uint64_t Fnv1a64(std::string_view text);
std::string HexDigest(std::uint64_t value);

struct Checkpoint {
  Scorer scorer;
  std::string config_hash;
};

inline constexpr int kCheckpointVersion = 1;

void SaveCheckpoint(const std::filesystem::path& path, const Scorer& scorer,
                    const std::string& config_hash);
/// Throws SchemaError on a missing file, wrong version or inconsistent sizes.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

}  // namespace smoothi
