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

// LETOR / SVMlight ingestion, fold assembly and a seeded synthetic generator.
//
// Line format: `<rel> qid:<id> <k>:<v> ... [# comment]`. Feature indices are
// 1-based and may be sparse; absent indices read as 0.

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace smoothi {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct QueryGroup {
  std::string query_id;
  std::vector<std::string> doc_ids;
  FeatureMatrix features;  // one row per document
  std::vector<double> relevance;

  std::size_t size() const { return relevance.size(); }
};

inline constexpr const char* kTrainSplit = "train";
inline constexpr const char* kValidationSplit = "validation";
inline constexpr const char* kTestSplit = "test";

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::size_t feature_dim) : feature_dim_(feature_dim) {}

  std::size_t feature_dim() const { return feature_dim_; }
  const std::vector<QueryGroup>& groups() const { return groups_; }

  /// Appends groups under `split`. Throws SchemaError on a feature width
  /// other than feature_dim() and DataError on a query id already present.
  void AddSplit(const std::string& split, std::vector<QueryGroup> groups);

  bool HasSplit(const std::string& split) const { return splits_.count(split) > 0; }
  std::vector<std::string> SplitNames() const;  // insertion order
  /// Groups of a split in insertion order. Throws DataError if absent.
  std::vector<const QueryGroup*> Split(const std::string& split) const;

  std::size_t DocumentCount(const std::string& split) const;

 private:
  std::size_t feature_dim_ = 0;
  std::vector<QueryGroup> groups_;
  std::map<std::string, std::vector<std::size_t>> splits_;
  std::map<std::string, std::string> split_of_query_;
  std::vector<std::string> split_order_;
};

struct ParsedFile {
  std::vector<QueryGroup> groups;
  std::size_t max_feature_index = 0;
};

/// Parses one SVMlight stream. Groups follow the order in which each qid
/// first appears. With `feature_dim` set, rows are padded to that width and
/// any larger index is a SchemaError; otherwise the width is the largest index
/// seen. Throws ParseError (with the 1-based line) on malformed lines and
/// DataError when no document is found.
ParsedFile ParseSvmlightStream(std::istream& in, const std::string& source,
                               std::optional<std::size_t> feature_dim = std::nullopt);

/// Single-split Dataset from a file, split name "all".
Dataset ParseSvmlight(const std::filesystem::path& path);

struct FoldPaths {
  std::filesystem::path train;
  std::filesystem::path validation;
  std::filesystem::path test;
};

/// One Dataset per fold with train/validation/test splits. The width comes
/// from the train file; a missing file or a wider validation/test file is a
/// SchemaError.
std::vector<Dataset> AssembleFolds(const std::vector<FoldPaths>& folds);

/// LETOR directory layout: Fold1..Fold5 each holding train.txt, vali.txt,
/// test.txt.
std::vector<FoldPaths> LetorFoldPaths(const std::filesystem::path& root, std::size_t folds = 5);

struct SyntheticSpec {
  std::size_t n_queries = 100;
  std::size_t docs_per_query = 20;
  std::size_t feature_dim = 10;
  std::uint64_t seed = 1;
  bool graded = false;  // grades 2 / 1 / 0 by quartile instead of top-third binary
};

struct SyntheticData {
  std::vector<QueryGroup> groups;
  std::vector<double> hidden_weights;  // rel is a function of x . w
};

/// Seeded standard-normal features scored by a hidden linear function. Binary
/// relevance marks the top max(1, round(N/3)) documents per query.
SyntheticData Synthesize(const SyntheticSpec& spec);

/// Synthesize n_train + n_validation + n_test queries and split them in that
/// order.
Dataset SynthesizeSplits(SyntheticSpec spec, std::size_t n_train, std::size_t n_validation,
                         std::size_t n_test);

void WriteSvmlight(std::ostream& out, const std::vector<const QueryGroup*>& groups);
/// TREC qrels: `qid 0 docid rel`.
void WriteQrels(std::ostream& out, const std::vector<const QueryGroup*>& groups);
/// Query and document counts per split, feature width.
std::string DatasetStatsJson(const Dataset& dataset, const std::string& name);

}  // namespace smoothi
