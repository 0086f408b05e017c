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

// JSON persistence for trained networks and CSV writers for explanations.

#ifndef SHAPNET_SERIALIZATION_H_
#define SHAPNET_SERIALIZATION_H_

#include <memory>
#include <string>
#include <vector>

#include "shapnet/core_math.h"
#include "shapnet/data.h"
#include "shapnet/networks.h"

namespace shapnet {

inline constexpr int kModelFormatVersion = 1;

// Dataset facts a model needs at explain time.
struct ModelInfo {
  std::string preset;
  TaskKind task = TaskKind::kRegression;
  std::string label_column = "label";
  std::vector<std::string> feature_names;
  std::vector<std::string> class_labels;
  std::vector<std::string> drop_columns;
};

struct LoadedModel {
  std::unique_ptr<ShapNet> net;
  ModelInfo info;
};

// Parameters are written with round-trip precision, so a reloaded model
// reproduces predictions bitwise.
std::string ModelToJson(const ShapNet& net, const ModelInfo& info = {});
LoadedModel ModelFromJson(const std::string& text);

void SaveModel(const ShapNet& net, const ModelInfo& info,
               const std::string& path);
LoadedModel LoadModel(const std::string& path);

// Long format: instance,feature,<one column per output>.
std::string ExplanationsToCsv(const std::vector<Matrix>& explanations,
                              const std::vector<std::string>& feature_names,
                              const std::vector<std::string>& output_names);

// instance,layer,feature,channel,value for every trace entry.
std::string TracesToCsv(const std::vector<std::vector<Matrix>>& traces);

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, const std::string& contents);

}  // namespace shapnet

#endif  // SHAPNET_SERIALIZATION_H_
