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

// Command implementations behind the `smoothi` executable: train, evaluate,
// gradcheck, verify-bounds and sweep. Each reads a flat JSON RunConfig,
// writes deterministic CSV/JSON/TREC outputs into its output directory and a
// timestamped log next to them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "smoothi/bounds_lab.hpp"
#include "smoothi/data_io.hpp"
#include "smoothi/ltr_model.hpp"

namespace smoothi::cli {

inline constexpr const char* kOutputRootEnv = "SMOOTHI_OUTPUT_ROOT";

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitData = 3,
  kExitDivergence = 4,
  kExitGradcheck = 5,
};

struct RunConfig {
  // Data.
  std::string dataset = "synthetic";  // synthetic | svmlight | letor
  std::string train_path, validation_path, test_path;
  std::string letor_root;
  std::size_t fold = 1;
  std::size_t synthetic_train_queries = 1000;
  std::size_t synthetic_validation_queries = 200;
  std::size_t synthetic_test_queries = 200;
  std::size_t synthetic_docs_per_query = 20;
  std::size_t synthetic_feature_dim = 10;
  bool synthetic_graded = false;
  std::uint64_t synthetic_seed = 1;

  // Loss.
  std::string loss = "ndcg";
  std::size_t k = 0;  // 0 = whole list
  double alpha = 10.0;
  double delta = 0.1;
  std::string grad_mode = "stop_gradient";
  std::size_t ap_truncation = 128;

  // Training.
  double learning_rate = 1e-3;
  std::size_t epochs = 50;
  std::size_t batch_size = 128;
  std::size_t hidden = 1024;
  std::size_t select_cutoff = 0;
  std::uint64_t seed = 1;

  // Outputs.
  std::string output_dir = "run";
  std::string checkpoint;  // evaluate; default <output_dir>/model.json
  std::string eval_split = "test";
  std::string run_tag = "smoothi";

  // gradcheck and verify-bounds instance generators.
  std::size_t instances = 100;
  std::size_t max_docs = 10;
  std::size_t max_k = 5;
  double alpha_min = 0.1;
  double alpha_max = 10.0;
  double step = 1e-4;
  double tolerance = 1e-4;
  std::vector<std::string> kinds{"p@k", "ap", "ndcg"};
  std::vector<std::string> grad_modes{"full", "stop_gradient"};
  std::vector<std::size_t> k_values{2, 3, 5};
  std::vector<double> alphas;
  std::vector<double> threshold_multiples{1.01, 1.5, 2.0, 4.0};

  // sweep.
  std::vector<double> alpha_grid{0.1, 1.0, 10.0, 100.0};
  std::vector<double> delta_grid{0.01, 0.05, 0.1, 0.2, 0.3, 0.4};

  /// Throws ConfigError on unknown keys or wrong value types.
  static RunConfig FromJson(const nlohmann::json& j);
  nlohmann::ordered_json ToJson() const;

  /// Throws ConfigError on invalid values. With strict_paper, learning rate
  /// must be 1e-2 or 1e-3, batch size 128, epochs 50 and hidden width 1024;
  /// otherwise deviations only warn.
  void Validate(bool strict_paper) const;

  LossSpec MakeLossSpec() const;
  TrainConfig MakeTrainConfig() const;
};

RunConfig LoadRunConfig(const std::filesystem::path& path);

struct Context {
  std::filesystem::path output_root = ".";
  bool strict_paper = false;
  std::ostream* out = nullptr;  // human-readable summary, optional

  /// Output root from SMOOTHI_OUTPUT_ROOT, else the working directory.
  static Context FromEnvironment();
  std::filesystem::path OutputDir(const RunConfig& config) const;
};

/// Train/validation/test splits for the configured data source. Missing files
/// are DataErrors.
Dataset LoadDataset(const RunConfig& config);

struct TrainOutcome {
  std::filesystem::path checkpoint;
  TrainHistory history;
};
TrainOutcome CmdTrain(const RunConfig& config, const Context& ctx);

struct EvaluateOutcome {
  MetricTable metrics;
  std::filesystem::path run_file;
};
/// Throws SchemaError when the checkpoint does not fit the dataset.
EvaluateOutcome CmdEvaluate(const RunConfig& config, const Context& ctx);

struct GradcheckRow {
  std::size_t instance = 0;
  std::string kind;
  std::string mode;
  std::size_t n = 0;
  std::size_t k = 0;
  double alpha = 0.0;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  bool pass = false;
};
struct GradcheckOutcome {
  std::vector<GradcheckRow> rows;
  std::size_t failures = 0;
};
/// Random instances as in the unit tests: standard-normal raw scores, binary
/// relevance with at least one relevant document, alpha log-uniform.
GradcheckOutcome CmdGradcheck(const RunConfig& config, const Context& ctx);

BoundSweepResult CmdVerifyBounds(const RunConfig& config, const Context& ctx);

struct SweepCell {
  double alpha = 0.0;
  double delta = 0.0;
  double validation_metric = 0.0;
  std::size_t best_epoch = 0;
};
struct SweepOutcome {
  std::vector<SweepCell> cells;
  std::size_t best = 0;  // index into cells
};
SweepOutcome CmdSweep(const RunConfig& config, const Context& ctx);

/// Runs a command by name and maps exceptions to exit codes, printing the
/// diagnostic to `err`.
int RunCommand(const std::string& command, const RunConfig& config, const Context& ctx,
               std::ostream& err);

int ExitCodeFor(const std::exception& e);

}  // namespace smoothi::cli
