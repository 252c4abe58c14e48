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

#include "smoothi/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string_view>
#include <unordered_map>

#include "json.hpp"

#include "smoothi/errors.hpp"
#include "smoothi/rank_core.hpp"

namespace smoothi {
namespace {

bool ParseDouble(std::string_view text, double& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

bool ParseIndex(std::string_view text, std::size_t& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> Tokens(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto start = s.find_first_not_of(" \t\r", pos);
    if (start == std::string_view::npos) break;
    auto end = s.find_first_of(" \t\r", start);
    if (end == std::string_view::npos) end = s.size();
    out.push_back(s.substr(start, end - start));
    pos = end;
  }
  return out;
}

// LETOR comments look like `docid = GX000-00-0000000 inc = 1 prob = 0.02`;
// otherwise the first token of the comment is the id.
std::string DocIdFromComment(std::string_view comment) {
  const auto tokens = Tokens(comment);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == "docid" && i + 2 < tokens.size() && tokens[i + 1] == "=") {
      return std::string(tokens[i + 2]);
    }
    if (tokens[i].starts_with("docid=") && tokens[i].size() > 6) {
      return std::string(tokens[i].substr(6));
    }
  }
  return tokens.empty() ? std::string() : std::string(tokens.front());
}

struct PendingDoc {
  double relevance;
  std::string doc_id;
  std::vector<std::pair<std::size_t, double>> features;
};

std::string FormatNumber(double v) {
  std::ostringstream out;
  out.precision(std::numeric_limits<double>::max_digits10);
  out << v;
  return out.str();
}

}  // namespace

void Dataset::AddSplit(const std::string& split, std::vector<QueryGroup> groups) {
  if (!splits_.count(split)) split_order_.push_back(split);
  auto& indices = splits_[split];
  for (auto& g : groups) {
    if (static_cast<std::size_t>(g.features.cols()) != feature_dim_) {
      throw SchemaError("query " + g.query_id + " has " + std::to_string(g.features.cols()) +
                        " features, dataset expects " + std::to_string(feature_dim_));
    }
    if (static_cast<std::size_t>(g.features.rows()) != g.size() || g.doc_ids.size() != g.size() ||
        g.size() == 0) {
      throw DataError("query " + g.query_id + " has inconsistent document counts");
    }
    const auto [it, inserted] = split_of_query_.emplace(g.query_id, split);
    if (!inserted) {
      throw DataError("query " + g.query_id + " already belongs to split " + it->second);
    }
    indices.push_back(groups_.size());
    groups_.push_back(std::move(g));
  }
}

std::vector<std::string> Dataset::SplitNames() const { return split_order_; }

std::vector<const QueryGroup*> Dataset::Split(const std::string& split) const {
  const auto it = splits_.find(split);
  if (it == splits_.end()) throw DataError("dataset has no split named " + split);
  std::vector<const QueryGroup*> out;
  out.reserve(it->second.size());
  for (std::size_t i : it->second) out.push_back(&groups_[i]);
  return out;
}

std::size_t Dataset::DocumentCount(const std::string& split) const {
  std::size_t total = 0;
  for (const auto* g : Split(split)) total += g->size();
  return total;
}

ParsedFile ParseSvmlightStream(std::istream& in, const std::string& source,
                               std::optional<std::size_t> feature_dim) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<PendingDoc>> docs;
  std::size_t max_index = 0;
  std::string line;
  std::size_t line_no = 0;

  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    std::string_view comment;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      comment = view.substr(hash + 1);
      view = view.substr(0, hash);
    }
    view = Trim(view);
    if (view.empty()) continue;

    const auto tokens = Tokens(view);
    PendingDoc doc;
    if (!ParseDouble(tokens[0], doc.relevance)) {
      throw ParseError(source, line_no, "relevance '" + std::string(tokens[0]) + "' is not a number");
    }
    if (doc.relevance < 0.0) throw ParseError(source, line_no, "negative relevance grade");
    if (tokens.size() < 2 || !tokens[1].starts_with("qid:") || tokens[1].size() == 4) {
      throw ParseError(source, line_no, "expected qid:<id> as the second field");
    }
    const std::string qid(tokens[1].substr(4));

    std::size_t last_index = 0;
    for (std::size_t t = 2; t < tokens.size(); ++t) {
      const auto colon = tokens[t].find(':');
      std::size_t index = 0;
      double value = 0.0;
      if (colon == std::string_view::npos || !ParseIndex(tokens[t].substr(0, colon), index) ||
          !ParseDouble(tokens[t].substr(colon + 1), value)) {
        throw ParseError(source, line_no, "malformed feature '" + std::string(tokens[t]) + "'");
      }
      if (index == 0) throw ParseError(source, line_no, "feature indices are 1-based");
      if (index <= last_index) {
        throw ParseError(source, line_no, "feature indices must be strictly increasing");
      }
      if (feature_dim && index > *feature_dim) {
        throw SchemaError(source + ":" + std::to_string(line_no) + ": feature index " +
                          std::to_string(index) + " exceeds width " +
                          std::to_string(*feature_dim));
      }
      last_index = index;
      max_index = std::max(max_index, index);
      doc.features.emplace_back(index, value);
    }
    doc.doc_id = DocIdFromComment(comment);

    auto [it, inserted] = docs.try_emplace(qid);
    if (inserted) order.push_back(qid);
    it->second.push_back(std::move(doc));
  }
  if (in.bad()) throw DataError("read error in " + source);
  if (order.empty()) throw DataError(source + " contains no documents");

  ParsedFile out;
  out.max_feature_index = max_index;
  const std::size_t width = feature_dim.value_or(max_index);
  for (const auto& qid : order) {
    auto& pending = docs[qid];
    QueryGroup g;
    g.query_id = qid;
    g.features = FeatureMatrix::Zero(static_cast<Eigen::Index>(pending.size()),
                                     static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < pending.size(); ++i) {
      g.relevance.push_back(pending[i].relevance);
      g.doc_ids.push_back(pending[i].doc_id.empty() ? qid + "_" + std::to_string(i + 1)
                                                    : pending[i].doc_id);
      for (const auto& [index, value] : pending[i].features) {
        g.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(index - 1)) = value;
      }
    }
    out.groups.push_back(std::move(g));
  }
  return out;
}

namespace {

ParsedFile ParseFile(const std::filesystem::path& path, std::optional<std::size_t> width,
                     bool missing_is_schema) {
  std::ifstream in(path);
  if (!in) {
    const std::string what = "cannot open " + path.string();
    if (missing_is_schema) throw SchemaError(what);
    throw DataError(what);
  }
  return ParseSvmlightStream(in, path.string(), width);
}

}  // namespace

Dataset ParseSvmlight(const std::filesystem::path& path) {
  auto parsed = ParseFile(path, std::nullopt, false);
  Dataset out(parsed.max_feature_index);
  out.AddSplit("all", std::move(parsed.groups));
  return out;
}

std::vector<Dataset> AssembleFolds(const std::vector<FoldPaths>& folds) {
  std::vector<Dataset> out;
  for (const auto& fold : folds) {
    auto train = ParseFile(fold.train, std::nullopt, true);
    const std::size_t width = train.max_feature_index;
    auto vali = ParseFile(fold.validation, width, true);
    auto test = ParseFile(fold.test, width, true);
    Dataset d(width);
    d.AddSplit(kTrainSplit, std::move(train.groups));
    d.AddSplit(kValidationSplit, std::move(vali.groups));
    d.AddSplit(kTestSplit, std::move(test.groups));
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<FoldPaths> LetorFoldPaths(const std::filesystem::path& root, std::size_t folds) {
  std::vector<FoldPaths> out;
  for (std::size_t f = 1; f <= folds; ++f) {
    const auto dir = root / ("Fold" + std::to_string(f));
    out.push_back({dir / "train.txt", dir / "vali.txt", dir / "test.txt"});
  }
  return out;
}

SyntheticData Synthesize(const SyntheticSpec& spec) {
  if (spec.n_queries == 0 || spec.docs_per_query == 0 || spec.feature_dim == 0) {
    throw ParameterError("synthetic dataset sizes must be positive");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal;
  SyntheticData out;
  out.hidden_weights.resize(spec.feature_dim);
  for (double& w : out.hidden_weights) w = normal(rng);
  const Eigen::Map<const Eigen::VectorXd> w(out.hidden_weights.data(),
                                            static_cast<Eigen::Index>(spec.feature_dim));

  const std::size_t n = spec.docs_per_query;
  const auto count = [&](double fraction) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(n * fraction)));
  };
  const std::size_t top_third = count(1.0 / 3.0);
  const std::size_t quartile = count(0.25);

  for (std::size_t q = 0; q < spec.n_queries; ++q) {
    QueryGroup g;
    g.query_id = std::to_string(q + 1);
    g.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.feature_dim));
    for (Eigen::Index i = 0; i < g.features.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.features.cols(); ++j) g.features(i, j) = normal(rng);
    }
    const Eigen::VectorXd hidden = g.features * w;
    const auto order = RankPermutation(std::span<const double>(hidden.data(), n));
    g.relevance.assign(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      double grade = 0.0;
      if (spec.graded) {
        grade = r < quartile ? 2.0 : (r < 2 * quartile ? 1.0 : 0.0);
      } else {
        grade = r < top_third ? 1.0 : 0.0;
      }
      g.relevance[order[r]] = grade;
    }
    for (std::size_t i = 0; i < n; ++i) g.doc_ids.push_back(g.query_id + "_" + std::to_string(i + 1));
    out.groups.push_back(std::move(g));
  }
  return out;
}

Dataset SynthesizeSplits(SyntheticSpec spec, std::size_t n_train, std::size_t n_validation,
                         std::size_t n_test) {
  spec.n_queries = n_train + n_validation + n_test;
  auto data = Synthesize(spec);
  Dataset out(spec.feature_dim);
  auto begin = std::make_move_iterator(data.groups.begin());
  const auto take = [&](std::size_t count) {
    std::vector<QueryGroup> part(begin, begin + static_cast<std::ptrdiff_t>(count));
    begin += static_cast<std::ptrdiff_t>(count);
    return part;
  };
  out.AddSplit(kTrainSplit, take(n_train));
  out.AddSplit(kValidationSplit, take(n_validation));
  out.AddSplit(kTestSplit, take(n_test));
  return out;
}

void WriteSvmlight(std::ostream& out, const std::vector<const QueryGroup*>& groups) {
  for (const auto* g : groups) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      out << FormatNumber(g->relevance[i]) << " qid:" << g->query_id;
      for (Eigen::Index j = 0; j < g->features.cols(); ++j) {
        out << ' ' << (j + 1) << ':' << FormatNumber(g->features(static_cast<Eigen::Index>(i), j));
      }
      out << " # " << g->doc_ids[i] << '\n';
    }
  }
}

void WriteQrels(std::ostream& out, const std::vector<const QueryGroup*>& groups) {
  for (const auto* g : groups) {
    for (std::size_t i = 0; i < g->size(); ++i) {
      out << g->query_id << " 0 " << g->doc_ids[i] << ' ' << FormatNumber(g->relevance[i]) << '\n';
    }
  }
}

std::string DatasetStatsJson(const Dataset& dataset, const std::string& name) {
  nlohmann::ordered_json j;
  j["dataset"] = name;
  j["feature_dim"] = dataset.feature_dim();
  nlohmann::ordered_json queries = nlohmann::ordered_json::object();
  nlohmann::ordered_json docs = nlohmann::ordered_json::object();
  for (const auto& split : dataset.SplitNames()) {
    queries[split] = dataset.Split(split).size();
    docs[split] = dataset.DocumentCount(split);
  }
  j["queries"] = std::move(queries);
  j["docs"] = std::move(docs);
  return j.dump(2);
}

}  // namespace smoothi
