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

#ifndef SHAPNET_DATA_H_
#define SHAPNET_DATA_H_

#include <cstdint>
#include <string>
#include <vector>

#include "shapnet/core_math.h"

namespace shapnet {

enum class TaskKind { kRegression, kClassification };

// n instances of d scalar features (one channel each).
struct Dataset {
  Matrix features;  // n x d
  Vector targets;   // class indices (as doubles) or regression values
  TaskKind task = TaskKind::kRegression;
  int num_classes = 0;
  std::vector<std::string> feature_names;
  // Original label strings by class index, in first-appearance order.
  std::vector<std::string> class_labels;

  int n() const { return static_cast<int>(features.rows()); }
  int d() const { return static_cast<int>(features.cols()); }
  int class_of(int row) const { return static_cast<int>(targets[row]); }

  Dataset Subset(const std::vector<int>& rows) const;
  // Throws unless features are finite and class targets in range.
  void Validate() const;
};

struct NormalizationStats {
  Vector mean;
  Vector std;
  // Zero-variance features pass through with std = 1.
  std::vector<int> degenerate_features;

  Matrix Apply(const Matrix& features) const;
  std::string ToJson() const;
  static NormalizationStats FromJson(const std::string& text);
};

NormalizationStats FitNormalization(const Matrix& features);

inline constexpr int kSyntheticFeatures = 16;

// prod_i v_i + sum_i v_i^2 for one 16-feature row.
double SyntheticTarget(const Vector& v);

// v ~ U[-0.5, 0.5]^16, y = SyntheticTarget(v) + noise_scale * N(0, 1).
Dataset GenerateSynthetic(int n, uint64_t seed, double noise_scale = 0.05);

struct CsvOptions {
  std::string label_column = "label";
  TaskKind task = TaskKind::kClassification;
  // Columns ignored entirely (identifiers, free text).
  std::vector<std::string> drop_columns;
  // When set, exactly these feature columns in this order; any other
  // non-label column is ignored.
  std::vector<std::string> feature_columns;
  // When set, classes map to these indices and other labels are errors.
  std::vector<std::string> class_labels;
  // Missing label column gives all-zero targets instead of an error.
  bool label_optional = false;
};

// Header row required; every remaining cell must parse as a number.
Dataset LoadCsv(const std::string& path, const CsvOptions& options);
Dataset ParseCsv(const std::string& text, const CsvOptions& options);

// Writes features plus a trailing label column; classification targets are
// written as their original label strings.
void WriteCsv(const Dataset& dataset, const std::string& path,
              const std::string& label_column = "label");
std::string FormatCsv(const Dataset& dataset,
                      const std::string& label_column = "label");

struct SplitResult {
  Dataset train;
  Dataset test;
  NormalizationStats stats;
  std::vector<int> train_rows;
  std::vector<int> test_rows;
};

// Seeded shuffle, split, then z-score both parts with training statistics.
SplitResult SplitNormalize(const Dataset& dataset, double train_fraction,
                           uint64_t seed);

}  // namespace shapnet

#endif  // SHAPNET_DATA_H_
