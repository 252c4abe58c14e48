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

#include "smoothi/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <type_traits>

#include "smoothi/errors.hpp"
#include "smoothi/gradients.hpp"
#include "smoothi/logging.hpp"
#include "smoothi/rank_core.hpp"

namespace smoothi::cli {
namespace {

namespace fs = std::filesystem;

// Calls f(key, field) for every config field. Used by both directions of
// the JSON mapping so the key list exists once.
template <typename Config, typename F>
void VisitFields(Config& c, F&& f) {
  f("dataset", c.dataset);
  f("train_path", c.train_path);
  f("validation_path", c.validation_path);
  f("test_path", c.test_path);
  f("letor_root", c.letor_root);
  f("fold", c.fold);
  f("synthetic_train_queries", c.synthetic_train_queries);
  f("synthetic_validation_queries", c.synthetic_validation_queries);
  f("synthetic_test_queries", c.synthetic_test_queries);
  f("synthetic_docs_per_query", c.synthetic_docs_per_query);
  f("synthetic_feature_dim", c.synthetic_feature_dim);
  f("synthetic_graded", c.synthetic_graded);
  f("synthetic_seed", c.synthetic_seed);
  f("loss", c.loss);
  f("k", c.k);
  f("alpha", c.alpha);
  f("delta", c.delta);
  f("grad_mode", c.grad_mode);
  f("ap_truncation", c.ap_truncation);
  f("learning_rate", c.learning_rate);
  f("epochs", c.epochs);
  f("batch_size", c.batch_size);
  f("hidden", c.hidden);
  f("select_cutoff", c.select_cutoff);
  f("seed", c.seed);
  f("output_dir", c.output_dir);
  f("checkpoint", c.checkpoint);
  f("eval_split", c.eval_split);
  f("run_tag", c.run_tag);
  f("instances", c.instances);
  f("max_docs", c.max_docs);
  f("max_k", c.max_k);
  f("alpha_min", c.alpha_min);
  f("alpha_max", c.alpha_max);
  f("step", c.step);
  f("tolerance", c.tolerance);
  f("kinds", c.kinds);
  f("grad_modes", c.grad_modes);
  f("k_values", c.k_values);
  f("alphas", c.alphas);
  f("threshold_multiples", c.threshold_multiples);
  f("alpha_grid", c.alpha_grid);
  f("delta_grid", c.delta_grid);
}

template <typename T>
bool TypeMatches(const nlohmann::json& v) {
  if constexpr (std::is_same_v<T, bool>) {
    return v.is_boolean();
  } else if constexpr (std::is_unsigned_v<T>) {
    return v.is_number_unsigned();
  } else if constexpr (std::is_floating_point_v<T>) {
    return v.is_number();
  } else if constexpr (std::is_same_v<T, std::string>) {
    return v.is_string();
  } else {
    if (!v.is_array()) return false;
    return std::all_of(v.begin(), v.end(),
                       [](const nlohmann::json& e) { return TypeMatches<typename T::value_type>(e); });
  }
}

std::string Num(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc() ? std::string(buf, end) : std::to_string(v);
}

// Numeric query ids compare numerically, others lexicographically.
bool QidLess(const std::string& a, const std::string& b) {
  std::uint64_t x = 0;
  std::uint64_t y = 0;
  const auto ra = std::from_chars(a.data(), a.data() + a.size(), x);
  const auto rb = std::from_chars(b.data(), b.data() + b.size(), y);
  const bool na = ra.ec == std::errc() && ra.ptr == a.data() + a.size();
  const bool nb = rb.ec == std::errc() && rb.ptr == b.data() + b.size();
  if (na && nb && x != y) return x < y;
  if (na != nb) return na;
  return a < b;
}

class RunLog {
 public:
  RunLog(const fs::path& path) : out_(path, std::ios::app) {}
  void Line(const std::string& msg) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    out_ << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << ' ' << msg << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

fs::path PrepareOutput(const RunConfig& config, const Context& ctx, const std::string& command) {
  const fs::path dir = ctx.OutputDir(config);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::ofstream out(dir / "config.resolved.json");
  if (!out) throw DataError("cannot write into " + dir.string());
  out << config.ToJson().dump(2) << '\n';
  RunLog(dir / (command + ".log")).Line("start " + command);
  return dir;
}

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void Say(const Context& ctx, const std::string& line) {
  if (ctx.out) *ctx.out << line << '\n';
}

std::string ConfigHash(const RunConfig& config) {
  return HexDigest(Fnv1a64(config.ToJson().dump()));
}

}  // namespace

RunConfig RunConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  std::set<std::string> known;
  VisitFields(c, [&](const char* key, auto& field) {
    using T = std::decay_t<decltype(field)>;
    known.insert(key);
    const auto it = j.find(key);
    if (it == j.end()) return;
    if (!TypeMatches<T>(*it)) {
      throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
    field = it->get<T>();
  });
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  return c;
}

nlohmann::ordered_json RunConfig::ToJson() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  VisitFields(*this, [&](const char* key, const auto& field) { j[key] = field; });
  return j;
}

void RunConfig::Validate(bool strict_paper) const {
  Require(dataset == "synthetic" || dataset == "svmlight" || dataset == "letor",
          "dataset must be synthetic, svmlight or letor");
  if (dataset == "svmlight") {
    Require(!train_path.empty() && !validation_path.empty() && !test_path.empty(),
            "svmlight datasets need train_path, validation_path and test_path");
  }
  if (dataset == "letor") Require(!letor_root.empty() && fold >= 1, "letor datasets need letor_root and fold >= 1");
  Require(synthetic_train_queries >= 1 && synthetic_validation_queries >= 1 &&
              synthetic_docs_per_query >= 1 && synthetic_feature_dim >= 1,
          "synthetic sizes must be positive (test queries may be 0)");
  Require(eval_split == kTrainSplit || eval_split == kValidationSplit || eval_split == kTestSplit,
          "eval_split must be train, validation or test");
  Require(ap_truncation >= 1, "ap_truncation must be at least 1");
  Require(instances >= 1 && max_docs >= 1 && max_k >= 1, "instance counts must be positive");
  Require(alpha_min > 0 && alpha_min <= alpha_max && std::isfinite(alpha_max),
          "need 0 < alpha_min <= alpha_max");
  Require(step > 0 && tolerance > 0, "step and tolerance must be positive");
  Require(!alpha_grid.empty() && !delta_grid.empty(), "sweep grids must not be empty");
  for (double m : threshold_multiples) Require(m > 0, "threshold multiples must be positive");
  for (double a : alphas) Require(a > 0, "alphas must be positive");
  for (std::size_t kv : k_values) Require(kv >= 2 && kv <= max_docs, "k_values must lie in [2, max_docs]");
  try {
    MakeTrainConfig().Validate();
    for (const auto& kind : kinds) ParseLossKind(kind);
    for (const auto& mode : grad_modes) ParseGradMode(mode);
    for (double a : alpha_grid) {
      for (double d : delta_grid) SmoothIParams{a, d, 1, GradMode::kStopGradient}.Validate();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  std::vector<std::string> deviations;
  if (learning_rate != 1e-2 && learning_rate != 1e-3) deviations.push_back("learning_rate not in {1e-2, 1e-3}");
  if (batch_size != 128) deviations.push_back("batch_size != 128");
  if (epochs != 50) deviations.push_back("epochs != 50");
  if (hidden != 1024) deviations.push_back("hidden != 1024");
  for (const auto& d : deviations) {
    if (strict_paper) throw ConfigError("--strict-paper: " + d);
    log::Warning("training recipe deviation: " + d);
  }
}

LossSpec RunConfig::MakeLossSpec() const {
  LossSpec spec;
  spec.kind = ParseLossKind(loss);
  spec.k = k;
  spec.params.alpha = alpha;
  spec.params.delta = delta;
  spec.params.grad_mode = ParseGradMode(grad_mode);
  spec.ap_truncation = ap_truncation;
  return spec;
}

TrainConfig RunConfig::MakeTrainConfig() const {
  TrainConfig t;
  try {
    t.loss = MakeLossSpec();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  t.learning_rate = learning_rate;
  t.batch_size = batch_size;
  t.epochs = epochs;
  t.seed = seed;
  t.hidden = hidden;
  t.select_cutoff = select_cutoff;
  return t;
}

RunConfig LoadRunConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return RunConfig::FromJson(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config " + path.string() + ": " + e.what());
  }
}

Context Context::FromEnvironment() {
  Context ctx;
  if (const char* root = std::getenv(kOutputRootEnv); root && *root) ctx.output_root = root;
  return ctx;
}

fs::path Context::OutputDir(const RunConfig& config) const {
  const fs::path dir(config.output_dir);
  return dir.is_absolute() ? dir : output_root / dir;
}

Dataset LoadDataset(const RunConfig& config) {
  if (config.dataset == "synthetic") {
    SyntheticSpec spec;
    spec.docs_per_query = config.synthetic_docs_per_query;
    spec.feature_dim = config.synthetic_feature_dim;
    spec.seed = config.synthetic_seed;
    spec.graded = config.synthetic_graded;
    return SynthesizeSplits(spec, config.synthetic_train_queries,
                            config.synthetic_validation_queries, config.synthetic_test_queries);
  }
  FoldPaths paths;
  if (config.dataset == "svmlight") {
    paths = {config.train_path, config.validation_path, config.test_path};
  } else {
    const auto folds = LetorFoldPaths(config.letor_root, config.fold);
    paths = folds.back();
  }
  for (const auto& p : {paths.train, paths.validation, paths.test}) {
    if (!fs::is_regular_file(p)) throw DataError("data file not found: " + p.string());
  }
  return std::move(AssembleFolds({paths}).front());
}

TrainOutcome CmdTrain(const RunConfig& config, const Context& ctx) {
  const auto dataset = LoadDataset(config);
  const fs::path dir = PrepareOutput(config, ctx, "train");
  RunLog log(dir / "train.log");
  log.Line("dataset " + config.dataset + ", feature_dim " + std::to_string(dataset.feature_dim()));

  std::ofstream history(dir / "history.csv");
  bool header = false;
  const auto result = Train(dataset, config.MakeTrainConfig(), [&](const EpochRecord& e) {
    if (!header) {
      history << "epoch,train_loss,skipped_queries,selection_metric";
      for (const auto& name : e.validation.names) history << ",val_" << name;
      history << '\n';
      header = true;
    }
    history << e.epoch << ',' << Num(e.train_loss) << ',' << e.skipped_queries << ','
            << Num(e.selection_metric);
    for (double v : e.validation.mean) history << ',' << Num(v);
    history << '\n';
    log.Line("epoch " + std::to_string(e.epoch) + " loss " + Num(e.train_loss) + " val " +
             Num(e.selection_metric) + " seconds " + Num(e.seconds));
  });

  TrainOutcome out{dir / "model.json", result.history};
  SaveCheckpoint(out.checkpoint, result.scorer, ConfigHash(config));
  log.Line("best epoch " + std::to_string(result.history.best_epoch));
  Say(ctx, "trained " + std::to_string(result.history.epochs.size()) + " epochs, best epoch " +
               std::to_string(result.history.best_epoch) + ", checkpoint " + out.checkpoint.string());
  return out;
}

EvaluateOutcome CmdEvaluate(const RunConfig& config, const Context& ctx) {
  const fs::path dir = ctx.OutputDir(config);
  const fs::path ckpt_path = config.checkpoint.empty() ? dir / "model.json" : fs::path(config.checkpoint);
  const auto ckpt = LoadCheckpoint(ckpt_path);
  const auto dataset = LoadDataset(config);
  if (ckpt.scorer.input_dim() != dataset.feature_dim()) {
    throw SchemaError("checkpoint expects " + std::to_string(ckpt.scorer.input_dim()) +
                      " features, dataset has " + std::to_string(dataset.feature_dim()));
  }
  PrepareOutput(config, ctx, "evaluate");

  auto groups = dataset.Split(config.eval_split);
  std::stable_sort(groups.begin(), groups.end(),
                   [](const QueryGroup* a, const QueryGroup* b) { return QidLess(a->query_id, b->query_id); });
  EvaluateOutcome out;
  out.metrics = Evaluate(ckpt.scorer, groups);
  out.run_file = dir / "run.trec";

  std::ofstream run(out.run_file);
  for (const auto* g : groups) {
    const auto scores = ckpt.scorer.Score(g->features);
    const auto order = RankPermutation(scores);
    for (std::size_t r = 0; r < order.size(); ++r) {
      run << g->query_id << " Q0 " << g->doc_ids[order[r]] << ' ' << (r + 1) << ' '
          << Num(scores[order[r]]) << ' ' << config.run_tag << '\n';
    }
  }

  nlohmann::ordered_json j;
  j["split"] = config.eval_split;
  j["checkpoint_config_hash"] = ckpt.config_hash;
  j["evaluated_queries"] = out.metrics.per_query.size();
  j["skipped_queries"] = out.metrics.skipped;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  for (std::size_t m = 0; m < out.metrics.names.size(); ++m) summary[out.metrics.names[m]] = out.metrics.mean[m];
  j["summary"] = summary;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& q : out.metrics.per_query) {
    nlohmann::ordered_json row;
    row["qid"] = q.query_id;
    for (std::size_t m = 0; m < out.metrics.names.size(); ++m) row[out.metrics.names[m]] = q.values[m];
    rows.push_back(row);
  }
  j["per_query"] = rows;
  std::ofstream(dir / "metrics.json") << j.dump(2) << '\n';
  RunLog(dir / "evaluate.log").Line("evaluated " + std::to_string(out.metrics.per_query.size()) + " queries");
  Say(ctx, "NDCG@N " + Num(out.metrics.Value("NDCG@N")) + ", MAP " + Num(out.metrics.Value("MAP")));
  return out;
}

GradcheckOutcome CmdGradcheck(const RunConfig& config, const Context& ctx) {
  const fs::path dir = PrepareOutput(config, ctx, "gradcheck");
  std::vector<LossKind> kinds;
  for (const auto& k : config.kinds) kinds.push_back(ParseLossKind(k));
  std::vector<GradMode> modes;
  for (const auto& m : config.grad_modes) modes.push_back(ParseGradMode(m));

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> log_alpha(std::log10(config.alpha_min), std::log10(config.alpha_max));
  std::bernoulli_distribution coin(0.5);
  GradcheckOutcome out;
  // Silence the step-size warning per instance; it is reported once below.
  log::ScopedWarningSink quiet([](const std::string&) {});
  for (std::size_t i = 0; i < config.instances; ++i) {
    const std::size_t n = config.max_docs == 1 ? 1 : 2 + i % (config.max_docs - 1);
    const std::size_t k = 1 + i % std::min(n, config.max_k);
    std::vector<double> s(n);
    for (double& v : s) v = normal(rng);
    std::vector<double> rel(n);
    for (double& r : rel) r = coin(rng) ? 1.0 : 0.0;
    if (std::none_of(rel.begin(), rel.end(), [](double r) { return r > 0; })) {
      rel[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)] = 1.0;
    }
    const double alpha = std::pow(10.0, log_alpha(rng));
    for (LossKind kind : kinds) {
      for (GradMode mode : modes) {
        LossSpec spec;
        spec.kind = kind;
        spec.k = k;
        spec.params.alpha = alpha;
        spec.params.delta = config.delta;
        spec.params.grad_mode = mode;
        const auto report = FiniteDifferenceCheck(rel, s, spec, config.step);
        GradcheckRow row{i, ToString(kind), ToString(mode), n, k, alpha,
                         report.max_abs_err, report.max_rel_err, report.max_rel_err <= config.tolerance};
        if (!row.pass) ++out.failures;
        out.rows.push_back(row);
      }
    }
  }

  std::ofstream csv(dir / "gradcheck.csv");
  csv << "instance,kind,mode,N,K,alpha,max_abs_err,max_rel_err,pass\n";
  for (const auto& r : out.rows) {
    csv << r.instance << ',' << r.kind << ',' << r.mode << ',' << r.n << ',' << r.k << ','
        << Num(r.alpha) << ',' << Num(r.max_abs_err) << ',' << Num(r.max_rel_err) << ','
        << (r.pass ? "true" : "false") << '\n';
  }
  double worst = 0.0;
  for (const auto& r : out.rows) worst = std::max(worst, r.max_rel_err);
  RunLog(dir / "gradcheck.log").Line("rows " + std::to_string(out.rows.size()) + " failures " +
                                     std::to_string(out.failures));
  Say(ctx, std::to_string(out.rows.size() - out.failures) + "/" + std::to_string(out.rows.size()) +
               " reports within " + Num(config.tolerance) + ", worst max_rel_err " + Num(worst) +
               (config.step < 1e-6 || config.step > 1e-2 ? " (step outside [1e-6, 1e-2])" : ""));
  return out;
}

BoundSweepResult CmdVerifyBounds(const RunConfig& config, const Context& ctx) {
  BoundSweepSpec spec;
  spec.instances = config.instances;
  spec.max_docs = config.max_docs;
  spec.k_values = config.k_values;
  spec.alphas = config.alphas;
  spec.threshold_multiples = config.threshold_multiples;
  spec.delta = config.delta;
  spec.seed = config.seed;
  const auto result = RunBoundSweep(spec);

  const fs::path dir = PrepareOutput(config, ctx, "verify-bounds");
  std::ofstream csv(dir / "bounds.csv");
  WriteBoundCsvHeader(csv);
  for (const auto& row : result.rows) WriteBoundCsvRow(csv, row);
  nlohmann::ordered_json summary;
  summary["rows"] = result.rows.size();
  summary["checked"] = result.checked;
  summary["violations"] = result.violations;
  summary["precondition_skipped"] = result.skipped;
  summary["hold_fraction"] = result.HoldFraction();
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  RunLog(dir / "verify-bounds.log").Line("checked " + std::to_string(result.checked));
  Say(ctx, "holds fraction " + Num(result.HoldFraction()) + " over " + std::to_string(result.checked) +
               " checked rows, " + std::to_string(result.skipped) + " precondition-skipped");
  return result;
}

SweepOutcome CmdSweep(const RunConfig& config, const Context& ctx) {
  const auto dataset = LoadDataset(config);
  const fs::path dir = PrepareOutput(config, ctx, "sweep");
  RunLog log(dir / "sweep.log");
  SweepOutcome out;
  for (double a : config.alpha_grid) {
    for (double d : config.delta_grid) {
      auto tc = config.MakeTrainConfig();
      tc.loss.params.alpha = a;
      tc.loss.params.delta = d;
      const auto result = Train(dataset, tc);
      const auto& best = result.history.epochs[result.history.best_epoch - 1];
      out.cells.push_back({a, d, best.selection_metric, result.history.best_epoch});
      log.Line("alpha " + Num(a) + " delta " + Num(d) + " metric " + Num(best.selection_metric));
    }
  }
  for (std::size_t i = 1; i < out.cells.size(); ++i) {
    if (out.cells[i].validation_metric > out.cells[out.best].validation_metric) out.best = i;
  }

  std::ofstream csv(dir / "sweep.csv");
  csv << "alpha,delta,validation_metric,best_epoch\n";
  for (const auto& c : out.cells) {
    csv << Num(c.alpha) << ',' << Num(c.delta) << ',' << Num(c.validation_metric) << ',' << c.best_epoch << '\n';
  }
  const auto& b = out.cells[out.best];
  nlohmann::ordered_json summary;
  summary["best_alpha"] = b.alpha;
  summary["best_delta"] = b.delta;
  summary["best_validation_metric"] = b.validation_metric;
  summary["cells"] = out.cells.size();
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
  Say(ctx, "best cell alpha " + Num(b.alpha) + " delta " + Num(b.delta) + " validation " +
               Num(b.validation_metric));
  return out;
}

int ExitCodeFor(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) return kExitDivergence;
  if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const GradingError*>(&e)) return kExitData;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const SchemaError*>(&e) ||
      dynamic_cast<const ParameterError*>(&e) || dynamic_cast<const RangeError*>(&e) ||
      dynamic_cast<const nlohmann::json::exception*>(&e)) {
    return kExitConfig;
  }
  return kExitFailure;
}

int RunCommand(const std::string& command, const RunConfig& config, const Context& ctx,
               std::ostream& err) {
  try {
    config.Validate(ctx.strict_paper);
    if (command == "train") {
      CmdTrain(config, ctx);
    } else if (command == "evaluate") {
      CmdEvaluate(config, ctx);
    } else if (command == "gradcheck") {
      if (CmdGradcheck(config, ctx).failures > 0) {
        err << "gradcheck: tolerance exceeded\n";
        return kExitGradcheck;
      }
    } else if (command == "verify-bounds") {
      CmdVerifyBounds(config, ctx);
    } else if (command == "sweep") {
      CmdSweep(config, ctx);
    } else {
      err << "unknown command '" << command << "'\n";
      return kExitConfig;
    }
  } catch (const std::exception& e) {
    err << command << ": " << e.what() << '\n';
    return ExitCodeFor(e);
  }
  return kExitOk;
}

}  // namespace smoothi::cli
