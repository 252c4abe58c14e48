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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"
#include "smoothi/errors.hpp"
#include "smoothi/logging.hpp"

namespace smoothi::cli {
namespace {

namespace fs = std::filesystem;

struct TempRoot {
  fs::path path;
  explicit TempRoot(const std::string& name) : path(fs::temp_directory_path() / ("smoothi_cli_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempRoot() { fs::remove_all(path); }
};

RunConfig Small() {
  RunConfig c;
  c.synthetic_train_queries = 60;
  c.synthetic_validation_queries = 20;
  c.synthetic_test_queries = 20;
  c.synthetic_docs_per_query = 8;
  c.synthetic_feature_dim = 5;
  c.hidden = 16;
  c.epochs = 3;
  c.batch_size = 16;
  c.learning_rate = 1e-2;
  c.instances = 10;
  return c;
}

Context Ctx(const TempRoot& root) {
  Context ctx;
  ctx.output_root = root.path;
  return ctx;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t Lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) ++n;
  return n;
}

TEST_CASE("config keys are checked") {
  CHECK_THROWS_AS(RunConfig::FromJson(nlohmann::json::parse(R"({"learning_rte": 0.01})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::FromJson(nlohmann::json::parse(R"({"epochs": -3})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::FromJson(nlohmann::json::parse(R"({"alpha": "ten"})")), ConfigError);
  CHECK_THROWS_AS(RunConfig::FromJson(nlohmann::json::parse("[1]")), ConfigError);
  const auto c = RunConfig::FromJson(nlohmann::json::parse(R"({"alpha": 3, "kinds": ["ap"]})"));
  CHECK(c.alpha == 3.0);
  CHECK(c.kinds == std::vector<std::string>{"ap"});
}

TEST_CASE("resolved config round-trips") {
  RunConfig c = Small();
  c.alpha = 0.3;
  c.delta_grid = {0.05};
  const auto again = RunConfig::FromJson(nlohmann::json::parse(c.ToJson().dump()));
  CHECK(again.ToJson() == c.ToJson());
}

TEST_CASE("validation and exit codes") {
  TempRoot root("exit");
  log::ScopedWarningSink quiet([](const std::string&) {});
  std::ostringstream err;
  auto ctx = Ctx(root);

  RunConfig missing = Small();
  missing.dataset = "svmlight";
  missing.train_path = (root.path / "nope.txt").string();
  missing.validation_path = missing.train_path;
  missing.test_path = missing.train_path;
  CHECK(RunCommand("train", missing, ctx, err) == kExitData);

  RunConfig bad_delta = Small();
  bad_delta.delta = 0.6;
  CHECK(RunCommand("train", bad_delta, ctx, err) == kExitConfig);

  RunConfig lr = Small();
  lr.learning_rate = 5e-3;
  lr.epochs = 50;
  lr.hidden = 1024;
  ctx.strict_paper = true;
  CHECK(RunCommand("train", lr, ctx, err) == kExitConfig);
  ctx.strict_paper = false;

  CHECK(RunCommand("fly", Small(), ctx, err) == kExitConfig);

  RunConfig tight = Small();
  tight.tolerance = 1e-14;
  CHECK(RunCommand("gradcheck", tight, ctx, err) == kExitGradcheck);
  CHECK(fs::exists(ctx.OutputDir(tight) / "gradcheck.csv"));

  CHECK(ExitCodeFor(DivergenceError(3, "nan")) == kExitDivergence);
  CHECK(ExitCodeFor(std::runtime_error("x")) == kExitFailure);
}

TEST_CASE("train then evaluate") {
  TempRoot root("train");
  log::ScopedWarningSink quiet([](const std::string&) {});
  const auto ctx = Ctx(root);
  const RunConfig c = Small();
  const auto trained = CmdTrain(c, ctx);
  CHECK(fs::exists(trained.checkpoint));
  CHECK(trained.history.epochs.size() == 3);
  const fs::path dir = ctx.OutputDir(c);
  CHECK(Lines(dir / "history.csv") == 4);
  CHECK(fs::exists(dir / "config.resolved.json"));
  CHECK(RunConfig::FromJson(nlohmann::json::parse(Slurp(dir / "config.resolved.json"))).ToJson() == c.ToJson());

  const auto eval = CmdEvaluate(c, ctx);
  CHECK(eval.metrics.per_query.size() == 20);

  // Ranks are 1-based and contiguous per query.
  std::ifstream run(eval.run_file);
  std::map<std::string, int> last_rank;
  std::size_t rows = 0;
  for (std::string qid, q0, doc, tag; run >> qid >> q0 >> doc;) {
    int rank = 0;
    double score = 0;
    run >> rank >> score >> tag;
    CHECK(q0 == "Q0");
    CHECK(rank == last_rank[qid] + 1);
    last_rank[qid] = rank;
    ++rows;
  }
  CHECK(rows == 20 * 8);

  // Summary means are per-query averages.
  const auto metrics = nlohmann::json::parse(Slurp(dir / "metrics.json"));
  double sum = 0;
  for (const auto& q : metrics["per_query"]) sum += q["NDCG@10"].get<double>();
  CHECK(metrics["summary"]["NDCG@10"].get<double>() == doctest::Approx(sum / 20).epsilon(1e-12));

  RunConfig wide = c;
  wide.synthetic_feature_dim = 7;
  CHECK_THROWS_AS(CmdEvaluate(wide, ctx), SchemaError);
}

TEST_CASE("sweep grid") {
  TempRoot root("sweep");
  log::ScopedWarningSink quiet([](const std::string&) {});
  const auto ctx = Ctx(root);
  RunConfig c = Small();
  c.epochs = 2;
  c.alpha_grid = {1.0, 10.0};
  c.delta_grid = {0.1, 0.2, 0.3};
  const auto sweep = CmdSweep(c, ctx);
  CHECK(sweep.cells.size() == 6);
  CHECK(Lines(ctx.OutputDir(c) / "sweep.csv") == 7);

  RunConfig single = c;
  single.alpha_grid = {c.alpha};
  single.delta_grid = {c.delta};
  single.output_dir = "single";
  const auto cell = CmdSweep(single, ctx).cells.at(0);
  single.output_dir = "single_train";
  const auto trained = CmdTrain(single, ctx);
  const auto& best = trained.history.epochs[trained.history.best_epoch - 1];
  CHECK(cell.validation_metric == best.selection_metric);
  CHECK(cell.best_epoch == trained.history.best_epoch);
}

TEST_CASE("outputs are deterministic") {
  log::ScopedWarningSink quiet([](const std::string&) {});
  std::string first;
  for (int rep = 0; rep < 2; ++rep) {
    TempRoot root("det" + std::to_string(rep));
    const auto ctx = Ctx(root);
    const RunConfig c = Small();
    CmdTrain(c, ctx);
    CmdEvaluate(c, ctx);
    const fs::path dir = ctx.OutputDir(c);
    const std::string all = Slurp(dir / "model.json") + Slurp(dir / "history.csv") +
                            Slurp(dir / "run.trec") + Slurp(dir / "metrics.json");
    if (rep == 0) first = all;
    else CHECK(all == first);
  }
}

TEST_CASE("verify-bounds writes one row per instance and alpha") {
  TempRoot root("bounds");
  const auto ctx = Ctx(root);
  RunConfig c = Small();
  c.instances = 12;
  c.threshold_multiples = {1.01, 3.0};
  const auto result = CmdVerifyBounds(c, ctx);
  CHECK(result.rows.size() == 24);
  CHECK(result.violations == 0);
  CHECK(Lines(ctx.OutputDir(c) / "bounds.csv") == 25);
}

}  // namespace
}  // namespace smoothi::cli
