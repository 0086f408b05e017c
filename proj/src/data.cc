/*
 * Copyright 2026 The ShapNet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "shapnet/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "nlohmann/json.hpp"
#include "shapnet/error.h"

namespace shapnet {
namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> SplitCsvLine(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cell += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      cells.push_back(Trim(cell));
      cell.clear();
    } else {
      cell += ch;
    }
  }
  cells.push_back(Trim(cell));
  return cells;
}

bool ParseDouble(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc() && ptr == end && std::isfinite(*out);
}

std::string FormatNumber(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

std::string QuoteIfNeeded(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

Dataset Dataset::Subset(const std::vector<int>& rows) const {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), d());
  out.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    Require(rows[i] >= 0 && rows[i] < n(), "subset row ", rows[i],
            " out of range");
    out.features.row(i) = features.row(rows[i]);
    out.targets[i] = targets[rows[i]];
  }
  out.task = task;
  out.num_classes = num_classes;
  out.feature_names = feature_names;
  out.class_labels = class_labels;
  return out;
}

void Dataset::Validate() const {
  Require(features.rows() == targets.size(), "dataset has ", features.rows(),
          " feature rows but ", targets.size(), " targets");
  Require(features.allFinite(), "dataset features contain non-finite values");
  Require(static_cast<int>(feature_names.size()) == d(), "dataset has ",
          feature_names.size(), " feature names for ", d(), " features");
  if (task == TaskKind::kClassification) {
    Require(num_classes >= 2, "classification needs at least two classes");
    for (Eigen::Index i = 0; i < targets.size(); ++i) {
      const double t = targets[i];
      Require(t == std::floor(t) && t >= 0 && t < num_classes, "class target ",
              t, " at row ", i, " outside [0, ", num_classes, ")");
    }
  } else {
    Require(targets.allFinite(), "regression targets are not finite");
  }
}

Matrix NormalizationStats::Apply(const Matrix& features) const {
  Require(features.cols() == mean.size(), "normalization expects ",
          mean.size(), " features, got ", features.cols());
  Matrix out = features.rowwise() - mean.transpose();
  out.array().rowwise() /= std.transpose().array();
  return out;
}

std::string NormalizationStats::ToJson() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["mean"] = std::vector<double>(mean.data(), mean.data() + mean.size());
  j["std"] = std::vector<double>(std.data(), std.data() + std.size());
  j["degenerate_features"] = degenerate_features;
  return j.dump(2);
}

NormalizationStats NormalizationStats::FromJson(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  Require(j.value("format_version", 0) == 1,
          "unsupported normalization stats format");
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto stdev = j.at("std").get<std::vector<double>>();
  Require(mean.size() == stdev.size(), "normalization mean/std length mismatch");
  NormalizationStats stats;
  stats.mean = Eigen::Map<const Vector>(mean.data(), mean.size());
  stats.std = Eigen::Map<const Vector>(stdev.data(), stdev.size());
  stats.degenerate_features = j.value("degenerate_features", std::vector<int>{});
  return stats;
}

NormalizationStats FitNormalization(const Matrix& features) {
  Require(features.rows() >= 1, "cannot fit normalization on zero rows");
  NormalizationStats stats;
  stats.mean = features.colwise().mean().transpose();
  const Matrix centered = features.rowwise() - stats.mean.transpose();
  stats.std = (centered.colwise().squaredNorm() /
               static_cast<double>(features.rows()))
                  .cwiseSqrt()
                  .transpose();
  for (Eigen::Index j = 0; j < stats.std.size(); ++j) {
    if (!(stats.std[j] > 0.0)) {
      stats.std[j] = 1.0;
      stats.degenerate_features.push_back(static_cast<int>(j));
    }
  }
  return stats;
}

double SyntheticTarget(const Vector& v) {
  Require(v.size() == kSyntheticFeatures, "synthetic target needs ",
          kSyntheticFeatures, " features");
  return v.prod() + v.squaredNorm();
}

Dataset GenerateSynthetic(int n, uint64_t seed, double noise_scale) {
  Require(n >= 1, "synthetic dataset needs n >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.task = TaskKind::kRegression;
  ds.features.resize(n, kSyntheticFeatures);
  ds.targets.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kSyntheticFeatures; ++j) ds.features(i, j) = uniform(rng);
    ds.targets[i] = SyntheticTarget(ds.features.row(i).transpose()) +
                    noise_scale * normal(rng);
  }
  for (int j = 0; j < kSyntheticFeatures; ++j) {
    ds.feature_names.push_back("v" + std::to_string(j));
  }
  return ds;
}

Dataset ParseCsv(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (!Trim(line).empty()) header = SplitCsvLine(line);
  }
  Require(!header.empty(), "CSV has no header row");

  int label_col = -1;
  std::vector<int> feature_cols;
  Dataset ds;
  ds.task = options.task;
  for (size_t c = 0; c < header.size(); ++c) {
    if (header[c] == options.label_column) {
      label_col = static_cast<int>(c);
    } else if (options.feature_columns.empty() &&
               std::find(options.drop_columns.begin(), options.drop_columns.end(),
                         header[c]) == options.drop_columns.end()) {
      feature_cols.push_back(static_cast<int>(c));
      ds.feature_names.push_back(header[c]);
    }
  }
  for (const std::string& name : options.feature_columns) {
    auto it = std::find(header.begin(), header.end(), name);
    Require(it != header.end(), "feature column '", name,
            "' not found in CSV header");
    feature_cols.push_back(static_cast<int>(it - header.begin()));
    ds.feature_names.push_back(name);
  }
  Require(label_col >= 0 || options.label_optional, "label column '",
          options.label_column, "' not found in CSV header");
  Require(!feature_cols.empty(), "CSV has no feature columns");

  std::unordered_map<std::string, int> label_index;
  for (const std::string& label : options.class_labels) {
    label_index.emplace(label, static_cast<int>(ds.class_labels.size()));
    ds.class_labels.push_back(label);
  }
  const bool fixed_labels = !options.class_labels.empty();
  std::vector<std::vector<double>> rows;
  std::vector<double> targets;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    const auto cells = SplitCsvLine(line);
    Require(cells.size() == header.size(), "CSV row ", line_no, " has ",
            cells.size(), " cells, header has ", header.size());
    std::vector<double> row;
    for (int c : feature_cols) {
      double v;
      Require(ParseDouble(cells[c], &v), "CSV row ", line_no, " column '",
              header[c], "': cannot parse '", cells[c], "' as a number");
      row.push_back(v);
    }
    if (label_col < 0) {
      targets.push_back(0.0);
      rows.push_back(std::move(row));
      continue;
    }
    const std::string& label = cells[label_col];
    Require(!label.empty(), "CSV row ", line_no, " has an empty label");
    if (options.task == TaskKind::kClassification) {
      auto it = label_index.find(label);
      if (it == label_index.end()) {
        Require(!fixed_labels, "CSV row ", line_no, ": unknown class label '",
                label, "'");
        it = label_index
                 .emplace(label, static_cast<int>(ds.class_labels.size()))
                 .first;
        ds.class_labels.push_back(label);
      }
      targets.push_back(it->second);
    } else {
      double v;
      Require(ParseDouble(label, &v), "CSV row ", line_no,
              ": cannot parse target '", label, "' as a number");
      targets.push_back(v);
    }
    rows.push_back(std::move(row));
  }
  Require(!rows.empty(), "CSV has no data rows");

  ds.features.resize(static_cast<Eigen::Index>(rows.size()),
                     static_cast<Eigen::Index>(feature_cols.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) ds.features(i, j) = rows[i][j];
  }
  ds.targets = Eigen::Map<const Vector>(targets.data(), targets.size());
  ds.num_classes = options.task == TaskKind::kClassification
                       ? static_cast<int>(ds.class_labels.size())
                       : 0;
  ds.Validate();
  return ds;
}

Dataset LoadCsv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path);
  Require(in.good(), "cannot open CSV file '", path, "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseCsv(buffer.str(), options);
}

std::string FormatCsv(const Dataset& dataset, const std::string& label_column) {
  std::ostringstream out;
  for (const auto& name : dataset.feature_names) out << QuoteIfNeeded(name) << ',';
  out << QuoteIfNeeded(label_column) << '\n';
  for (int i = 0; i < dataset.n(); ++i) {
    for (int j = 0; j < dataset.d(); ++j) {
      out << FormatNumber(dataset.features(i, j)) << ',';
    }
    if (dataset.task == TaskKind::kClassification) {
      const int c = dataset.class_of(i);
      out << QuoteIfNeeded(c < static_cast<int>(dataset.class_labels.size())
                               ? dataset.class_labels[c]
                               : std::to_string(c));
    } else {
      out << FormatNumber(dataset.targets[i]);
    }
    out << '\n';
  }
  return out.str();
}

void WriteCsv(const Dataset& dataset, const std::string& path,
              const std::string& label_column) {
  std::ofstream out(path);
  Require(out.good(), "cannot write CSV file '", path, "'");
  out << FormatCsv(dataset, label_column);
}

SplitResult SplitNormalize(const Dataset& dataset, double train_fraction,
                           uint64_t seed) {
  Require(train_fraction > 0.0 && train_fraction < 1.0,
          "train_fraction must lie in (0, 1), got ", train_fraction);
  const int n = dataset.n();
  const int n_train = static_cast<int>(std::lround(n * train_fraction));
  Require(n_train >= 1 && n_train < n, "dataset of ", n,
          " rows is too small for a nonempty split at fraction ",
          train_fraction);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitResult result;
  result.train_rows.assign(order.begin(), order.begin() + n_train);
  result.test_rows.assign(order.begin() + n_train, order.end());
  result.train = dataset.Subset(result.train_rows);
  result.test = dataset.Subset(result.test_rows);
  result.stats = FitNormalization(result.train.features);
  result.train.features = result.stats.Apply(result.train.features);
  result.test.features = result.stats.Apply(result.test.features);
  return result;
}

}  // namespace shapnet
