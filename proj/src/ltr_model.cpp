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

#include "smoothi/ltr_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "smoothi/errors.hpp"
#include "smoothi/gradients.hpp"
#include "smoothi/rank_core.hpp"

namespace smoothi {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

// Normalizes columns of x. Train mode reports the batch mean and biased
// variance it used.
void NormalizeColumns(const MatrixXd& x, bool train, const VectorXd& running_mean,
                      const VectorXd& running_var, MatrixXd& xhat, RowVectorXd& mean,
                      RowVectorXd& var, RowVectorXd& inv_std) {
  if (train) {
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).array().square().colwise().mean().matrix();
  } else {
    mean = running_mean.transpose();
    var = running_var.transpose();
  }
  inv_std = (var.array() + Scorer::kBatchNormEps).rsqrt().matrix();
  xhat = ((x.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
}

// Backward through y = xhat * gamma + beta given dL/dy; accumulates the
// gamma/beta gradients and returns dL/dx.
MatrixXd NormalizeBackward(const MatrixXd& dy, const MatrixXd& xhat, const RowVectorXd& inv_std,
                           const RowVectorXd& gamma, bool train,
                           Eigen::Ref<VectorXd> d_gamma, Eigen::Ref<VectorXd> d_beta) {
  d_gamma = (dy.array() * xhat.array()).colwise().sum().transpose();
  d_beta = dy.colwise().sum().transpose();
  const MatrixXd dxhat = (dy.array().rowwise() * gamma.array()).matrix();
  if (!train) return (dxhat.array().rowwise() * inv_std.array()).matrix();
  const double b = static_cast<double>(dy.rows());
  const RowVectorXd sum_dxhat = dxhat.colwise().sum();
  const RowVectorXd sum_dxhat_xhat = (dxhat.array() * xhat.array()).colwise().sum().matrix();
  MatrixXd dx = (b * dxhat.array() - (xhat.array().rowwise() * sum_dxhat_xhat.array()))
                    .matrix();
  dx.rowwise() -= sum_dxhat;
  return (dx.array().rowwise() * (inv_std.array() / b)).matrix();
}

FeatureMatrix Stack(const std::vector<const QueryGroup*>& batch, std::size_t width) {
  Index rows = 0;
  for (const auto* g : batch) rows += static_cast<Index>(g->size());
  FeatureMatrix out(rows, static_cast<Index>(width));
  Index at = 0;
  for (const auto* g : batch) {
    if (static_cast<std::size_t>(g->features.cols()) != width) {
      throw ShapeError("query " + g->query_id + " has the wrong feature width");
    }
    out.middleRows(at, g->features.rows()) = g->features;
    at += g->features.rows();
  }
  return out;
}

bool AllFinite(const VectorXd& v) { return v.allFinite(); }

// Non-finite network scores surface as InvalidInputError from the metric code.
template <typename F>
auto GuardDivergence(std::size_t epoch, F&& f) {
  try {
    return f();
  } catch (const InvalidInputError& e) {
    throw DivergenceError(epoch, e.what());
  }
}

}  // namespace

Scorer::Layout Scorer::MakeLayout(std::size_t input_dim, std::size_t hidden) {
  const auto d = static_cast<Index>(input_dim);
  const auto h = static_cast<Index>(hidden);
  Layout l{};
  l.gamma1 = 0;
  l.beta1 = l.gamma1 + d;
  l.w1 = l.beta1 + d;
  l.b1 = l.w1 + d * h;
  l.gamma2 = l.b1 + h;
  l.beta2 = l.gamma2 + h;
  l.w2 = l.beta2 + h;
  l.b2 = l.w2 + h;
  l.total = l.b2 + 1;
  return l;
}

Scorer::Scorer(std::size_t input_dim, std::size_t hidden, std::mt19937_64& rng)
    : input_dim_(input_dim), hidden_(hidden), layout_(MakeLayout(input_dim, hidden)) {
  if (input_dim == 0 || hidden == 0) throw ParameterError("scorer dimensions must be positive");
  const auto d = static_cast<Index>(input_dim);
  const auto h = static_cast<Index>(hidden);
  params_ = VectorXd::Zero(layout_.total);
  params_.segment(layout_.gamma1, d).setOnes();
  params_.segment(layout_.gamma2, h).setOnes();
  std::uniform_real_distribution<double> u1(-std::sqrt(6.0 / d), std::sqrt(6.0 / d));
  for (Index i = 0; i < d * h; ++i) params_[layout_.w1 + i] = u1(rng);
  std::uniform_real_distribution<double> u2(-std::sqrt(6.0 / h), std::sqrt(6.0 / h));
  for (Index i = 0; i < h; ++i) params_[layout_.w2 + i] = u2(rng);
  running_.mean1 = VectorXd::Zero(d);
  running_.var1 = VectorXd::Ones(d);
  running_.mean2 = VectorXd::Zero(h);
  running_.var2 = VectorXd::Ones(h);
}

Scorer::Scorer(std::size_t input_dim, std::size_t hidden, std::uint64_t seed)
    : Scorer(input_dim, hidden, *std::make_unique<std::mt19937_64>(seed)) {}

VectorXd Scorer::Forward(const FeatureMatrix& x, Cache* cache) const {
  if (static_cast<std::size_t>(x.cols()) != input_dim_) {
    throw ShapeError("feature matrix has " + std::to_string(x.cols()) + " columns, scorer expects " +
                     std::to_string(input_dim_));
  }
  if (x.rows() == 0) throw ShapeError("empty feature matrix");
  const auto d = static_cast<Index>(input_dim_);
  const auto h = static_cast<Index>(hidden_);
  const bool train = mode_ == ScorerMode::kTrain;
  const Eigen::Map<const MatrixXd> w1(params_.data() + layout_.w1, d, h);

  Cache local;
  Cache& c = cache ? *cache : local;
  c.mode = mode_;
  NormalizeColumns(x, train, running_.mean1, running_.var1, c.xhat1, c.batch_mean1, c.batch_var1,
                   c.inv_std1);
  c.z1 = (c.xhat1.array().rowwise() * params_.segment(layout_.gamma1, d).transpose().array())
             .matrix();
  c.z1.rowwise() += params_.segment(layout_.beta1, d).transpose();
  c.pre_relu = c.z1 * w1;
  c.pre_relu.rowwise() += params_.segment(layout_.b1, h).transpose();
  const MatrixXd relu = c.pre_relu.cwiseMax(0.0);
  NormalizeColumns(relu, train, running_.mean2, running_.var2, c.rhat2, c.batch_mean2,
                   c.batch_var2, c.inv_std2);
  // The second batch-norm affine map folds into the output layer.
  const auto w2 = params_.segment(layout_.w2, h);
  VectorXd scores = c.rhat2 * params_.segment(layout_.gamma2, h).cwiseProduct(w2);
  scores.array() += params_.segment(layout_.beta2, h).dot(w2) + params_[layout_.b2];
  return scores;
}

std::vector<double> Scorer::Score(const FeatureMatrix& x) const {
  const VectorXd s = Forward(x);
  return {s.data(), s.data() + s.size()};
}

VectorXd Scorer::Backward(const Cache& c, const VectorXd& d_scores) const {
  const auto d = static_cast<Index>(input_dim_);
  const auto h = static_cast<Index>(hidden_);
  const bool train = c.mode == ScorerMode::kTrain;
  if (d_scores.size() != c.rhat2.rows()) throw ShapeError("score adjoint does not match the cache");
  const Eigen::Map<const MatrixXd> w1(params_.data() + layout_.w1, d, h);
  const auto gamma2 = params_.segment(layout_.gamma2, h);
  const auto w2 = params_.segment(layout_.w2, h);
  VectorXd grad = VectorXd::Zero(layout_.total);

  // dL/dz2 = d_scores * w2^T is rank one, so the second batch norm backward
  // reduces to one matrix-vector product and a single fused pass.
  const VectorXd rtd = c.rhat2.transpose() * d_scores;
  const double dsum = d_scores.sum();
  grad.segment(layout_.w2, h) = gamma2.cwiseProduct(rtd) + params_.segment(layout_.beta2, h) * dsum;
  grad[layout_.b2] = dsum;
  grad.segment(layout_.gamma2, h) = w2.cwiseProduct(rtd);
  grad.segment(layout_.beta2, h) = w2 * dsum;
  const RowVectorXd scale = gamma2.cwiseProduct(w2).transpose().cwiseProduct(c.inv_std2);
  MatrixXd d_pre;
  if (train) {
    const double b = static_cast<double>(d_scores.size());
    const RowVectorXd corr = rtd.transpose() / b;
    const VectorXd centered = d_scores.array() - dsum / b;
    d_pre = (c.pre_relu.array() > 0.0)
                .select(((c.rhat2.array().rowwise() * -corr.array()).colwise() + centered.array())
                            .rowwise() *
                            scale.array(),
                        0.0);
  } else {
    d_pre = (c.pre_relu.array() > 0.0).select((d_scores * scale).array(), 0.0);
  }

  Eigen::Map<MatrixXd>(grad.data() + layout_.w1, d, h) = c.z1.transpose() * d_pre;
  grad.segment(layout_.b1, h) = d_pre.colwise().sum().transpose();
  const MatrixXd dz1 = d_pre * w1.transpose();
  NormalizeBackward(dz1, c.xhat1, c.inv_std1, params_.segment(layout_.gamma1, d).transpose(), train,
                    grad.segment(layout_.gamma1, d), grad.segment(layout_.beta1, d));
  return grad;
}

void Scorer::UpdateRunningStats(const Cache& c) {
  if (c.mode != ScorerMode::kTrain) throw StateError("running statistics need a train-mode pass");
  const double m = kBatchNormMomentum;
  const double b = static_cast<double>(c.rhat2.rows());
  // Unbiased variance for the running estimate.
  const double unbias = b > 1 ? b / (b - 1) : 1.0;
  running_.mean1 = m * running_.mean1 + (1 - m) * c.batch_mean1.transpose();
  running_.var1 = m * running_.var1 + (1 - m) * unbias * c.batch_var1.transpose();
  running_.mean2 = m * running_.mean2 + (1 - m) * c.batch_mean2.transpose();
  running_.var2 = m * running_.var2 + (1 - m) * unbias * c.batch_var2.transpose();
}

Adam::Adam(Index size, double learning_rate, AdamParams params)
    : lr_(learning_rate), p_(params), m_(VectorXd::Zero(size)), v_(VectorXd::Zero(size)) {
  if (!(learning_rate >= 0.0)) throw ParameterError("learning rate must be non-negative");
}

void Adam::Step(VectorXd& theta, const VectorXd& grad) {
  ++steps_;
  m_ = p_.beta1 * m_ + (1 - p_.beta1) * grad;
  v_ = p_.beta2 * v_ + (1 - p_.beta2) * grad.cwiseAbs2();
  const double c1 = 1 - std::pow(p_.beta1, static_cast<double>(steps_));
  const double c2 = 1 - std::pow(p_.beta2, static_cast<double>(steps_));
  theta.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + p_.eps);
}

double MetricTable::Value(std::string_view name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError("no metric named " + std::string(name));
  return mean[static_cast<std::size_t>(it - names.begin())];
}

MetricTable EvaluateScores(const std::vector<const QueryGroup*>& groups, const ScoreFn& score,
                           const EvalCutoffs& cutoffs) {
  MetricTable table;
  for (std::size_t k : cutoffs.precision) {
    if (k == 0) throw ConfigError("precision cutoff must be positive");
    table.names.push_back("P@" + std::to_string(k));
  }
  for (std::size_t k : cutoffs.ndcg) table.names.push_back(k == 0 ? "NDCG@N" : "NDCG@" + std::to_string(k));
  table.names.push_back("MAP");
  table.mean.assign(table.names.size(), 0.0);

  for (const auto* g : groups) {
    const bool any = std::any_of(g->relevance.begin(), g->relevance.end(),
                                 [](double r) { return r > 0.0; });
    if (!any) {
      ++table.skipped;
      continue;
    }
    const std::vector<double> s = score(*g);
    const std::size_t n = g->size();
    const auto binary = RelevanceForMetric(LossKind::kPrecisionAtK, g->relevance);
    QueryMetrics row{g->query_id, {}};
    for (std::size_t k : cutoffs.precision) {
      const std::size_t kk = std::min(k, n);
      row.values.push_back(PrecisionAtK(binary, s, kk) * static_cast<double>(kk) /
                           static_cast<double>(k));
    }
    for (std::size_t k : cutoffs.ndcg) {
      row.values.push_back(NdcgAtK(g->relevance, s, k == 0 ? n : std::min(k, n)));
    }
    // Positive grades below 1 binarize to nothing relevant: AP counts as 0.
    const bool any_binary = std::any_of(binary.begin(), binary.end(), [](double r) { return r > 0; });
    row.values.push_back(any_binary ? AveragePrecision(binary, s) : 0.0);
    table.per_query.push_back(std::move(row));
  }
  if (!table.per_query.empty()) {
    for (std::size_t m = 0; m < table.names.size(); ++m) {
      double sum = 0.0;
      for (const auto& q : table.per_query) sum += q.values[m];
      table.mean[m] = sum / static_cast<double>(table.per_query.size());
    }
  }
  return table;
}

MetricTable Evaluate(const Scorer& scorer, const std::vector<const QueryGroup*>& groups,
                     const EvalCutoffs& cutoffs) {
  if (scorer.mode() != ScorerMode::kEval) throw StateError("evaluation needs an eval-mode scorer");
  // Eval mode scores rows independently, so one stacked pass serves every query.
  std::unordered_map<const QueryGroup*, Index> offset;
  Index at = 0;
  for (const auto* g : groups) {
    offset.emplace(g, at);
    at += static_cast<Index>(g->size());
  }
  const VectorXd all = groups.empty() ? VectorXd() : scorer.Forward(Stack(groups, scorer.input_dim()));
  return EvaluateScores(
      groups,
      [&](const QueryGroup& g) {
        const double* first = all.data() + offset.at(&g);
        return std::vector<double>(first, first + g.size());
      },
      cutoffs);
}

std::vector<ShiftMap> BatchShifts(const Scorer& scorer,
                                  const std::vector<const QueryGroup*>& batch) {
  const VectorXd scores = scorer.Forward(Stack(batch, scorer.input_dim()));
  std::vector<ShiftMap> out;
  std::size_t at = 0;
  for (const auto* g : batch) {
    out.push_back(MakeShiftMap(std::span<const double>(scores.data() + at, g->size())));
    at += g->size();
  }
  return out;
}

ObjectiveResult BatchObjective(const Scorer& scorer, const std::vector<const QueryGroup*>& batch,
                               const LossSpec& loss, std::span<const ShiftMap> frozen_shifts,
                               Scorer::Cache* cache) {
  if (batch.empty()) throw DataError("empty batch");
  Scorer::Cache local;
  Scorer::Cache& c = cache ? *cache : local;
  const VectorXd scores = scorer.Forward(Stack(batch, scorer.input_dim()), &c);

  std::vector<std::span<const double>> rels;
  std::vector<std::span<const double>> lists;
  std::size_t at = 0;
  for (const auto* g : batch) {
    rels.emplace_back(g->relevance);
    lists.emplace_back(scores.data() + at, g->size());
    at += g->size();
  }
  const auto mean = MeanLossAndGradient(rels, lists, loss, {}, frozen_shifts);

  ObjectiveResult out;
  out.loss = mean.loss;
  out.counted = mean.counted;
  out.skipped = mean.skipped;
  out.gradient = scorer.Backward(
      c, Eigen::Map<const VectorXd>(mean.gradient.data(), static_cast<Index>(mean.gradient.size())));
  return out;
}

LossSpec TrainConfig::DefaultLoss() {
  LossSpec spec;
  spec.kind = LossKind::kNdcgAtK;
  spec.k = 0;
  spec.params.alpha = 10.0;
  spec.params.delta = 0.1;
  spec.params.grad_mode = GradMode::kStopGradient;
  return spec;
}

void TrainConfig::Validate() const {
  if (epochs == 0) throw ConfigError("epochs must be at least 1");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (hidden == 0) throw ConfigError("hidden width must be at least 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be a finite non-negative number");
  }
  SmoothIParams p = loss.params;
  p.k = 1;
  try {
    p.Validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

TrainResult Train(const Dataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.Validate();
  if (!dataset.HasSplit(kTrainSplit) || !dataset.HasSplit(kValidationSplit)) {
    throw DataError("training needs train and validation splits");
  }
  const auto train = dataset.Split(kTrainSplit);
  const auto validation = dataset.Split(kValidationSplit);
  if (train.empty()) throw DataError("train split is empty");
  if (validation.empty()) throw DataError("validation split is empty");

  std::mt19937_64 rng(config.seed);
  Scorer scorer(dataset.feature_dim(), config.hidden, rng);
  Adam adam(scorer.parameters().size(), config.learning_rate, config.adam);

  EvalCutoffs cutoffs;
  if (std::find(cutoffs.ndcg.begin(), cutoffs.ndcg.end(), config.select_cutoff) == cutoffs.ndcg.end()) {
    cutoffs.ndcg.push_back(config.select_cutoff);
  }
  const std::string select_name =
      config.select_cutoff == 0 ? "NDCG@N" : "NDCG@" + std::to_string(config.select_cutoff);

  TrainResult result{scorer, {}};
  double best = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  Scorer::Cache cache;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    scorer.SetMode(ScorerMode::kTrain);
    double loss_sum = 0.0;
    std::size_t counted = 0;
    std::size_t skipped = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      std::vector<const QueryGroup*> batch;
      for (std::size_t i = begin; i < std::min(order.size(), begin + config.batch_size); ++i) {
        batch.push_back(train[order[i]]);
      }
      const auto obj = GuardDivergence(epoch, [&] {
        return BatchObjective(scorer, batch, config.loss, {}, &cache);
      });
      skipped += obj.skipped;
      if (obj.counted == 0) continue;
      if (!std::isfinite(obj.loss) || !AllFinite(obj.gradient)) {
        throw DivergenceError(epoch, "loss or gradient is not finite");
      }
      scorer.UpdateRunningStats(cache);
      adam.Step(scorer.parameters(), obj.gradient);
      if (!AllFinite(scorer.parameters())) throw DivergenceError(epoch, "parameters are not finite");
      loss_sum += obj.loss * static_cast<double>(obj.counted);
      counted += obj.counted;
    }
    scorer.SetMode(ScorerMode::kEval);

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = counted ? loss_sum / static_cast<double>(counted) : 0.0;
    record.skipped_queries = skipped;
    record.validation = GuardDivergence(epoch, [&] { return Evaluate(scorer, validation, cutoffs); });
    record.selection_metric = record.validation.Value(select_name);
    if (!std::isfinite(record.selection_metric)) {
      throw DivergenceError(epoch, "validation metric is not finite");
    }
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (record.selection_metric > best) {
      best = record.selection_metric;
      result.scorer = scorer;
      result.history.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(record);
    result.history.epochs.push_back(std::move(record));
  }
  result.scorer.SetMode(ScorerMode::kEval);
  return result;
}

std::uint64_t Fnv1a64(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string HexDigest(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

namespace {

nlohmann::json ToJson(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd FromJson(const nlohmann::json& j, std::size_t expected, const char* what) {
  const auto values = j.get<std::vector<double>>();
  if (values.size() != expected) {
    throw SchemaError(std::string("checkpoint field ") + what + " has " +
                      std::to_string(values.size()) + " entries, expected " +
                      std::to_string(expected));
  }
  return Eigen::Map<const VectorXd>(values.data(), static_cast<Index>(values.size()));
}

}  // namespace

void SaveCheckpoint(const std::filesystem::path& path, const Scorer& scorer,
                    const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["format"] = "smoothi-scorer";
  j["version"] = kCheckpointVersion;
  j["input_dim"] = scorer.input_dim();
  j["hidden"] = scorer.hidden();
  j["config_hash"] = config_hash;
  j["parameters"] = ToJson(scorer.parameters());
  j["running"] = {{"mean1", ToJson(scorer.running().mean1)},
                  {"var1", ToJson(scorer.running().var1)},
                  {"mean2", ToJson(scorer.running().mean2)},
                  {"var2", ToJson(scorer.running().var2)}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump() << '\n';
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open checkpoint " + path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.at("format") != "smoothi-scorer") throw SchemaError("not a scorer checkpoint");
    if (j.at("version") != kCheckpointVersion) {
      throw SchemaError("unsupported checkpoint version " + j.at("version").dump());
    }
    const auto d = j.at("input_dim").get<std::size_t>();
    const auto h = j.at("hidden").get<std::size_t>();
    Scorer scorer(d, h, std::uint64_t{0});
    scorer.parameters() = FromJson(j.at("parameters"), scorer.parameters().size(), "parameters");
    const auto& r = j.at("running");
    scorer.running().mean1 = FromJson(r.at("mean1"), d, "mean1");
    scorer.running().var1 = FromJson(r.at("var1"), d, "var1");
    scorer.running().mean2 = FromJson(r.at("mean2"), h, "mean2");
    scorer.running().var2 = FromJson(r.at("var2"), h, "var2");
    if ((scorer.running().var1.array() <= 0).any() || (scorer.running().var2.array() <= 0).any()) {
      throw SchemaError("checkpoint running variance must be positive");
    }
    return {std::move(scorer), j.at("config_hash").get<std::string>()};
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("malformed checkpoint " + path.string() + ": " + e.what());
  }
}

}  // namespace smoothi
