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

// Named network and training configurations for the bundled datasets.

#ifndef SHAPNET_PRESETS_H_
#define SHAPNET_PRESETS_H_

#include <memory>
#include <string>
#include <vector>

#include "shapnet/core_math.h"
#include "shapnet/data.h"
#include "shapnet/networks.h"
#include "shapnet/training.h"

namespace shapnet {

enum class DatasetSource { kSynthetic, kCsv };

struct Preset {
  std::string name;
  DatasetSource source = DatasetSource::kCsv;
  std::string data_file;  // file name under the data directory
  CsvOptions csv;
  int synthetic_n = 0;
  double train_fraction = 0.75;

  NetworkKind kind = NetworkKind::kDeep;
  int d = 0;
  // Deep: one spec per layer. Shallow: layers[0] describes every module.
  std::vector<LayerSpec> layers;
  std::vector<std::vector<int>> active_sets;  // shallow only
  Activation activation = Activation::ReLU();
  TrainConfig train;
};

// Base names plus "-l1", "-l1-all" and "-linf" variants of each.
std::vector<std::string> PresetNames();
Preset GetPreset(const std::string& name);

// reference is d x 1; the network's parameters are drawn from `seed`.
std::unique_ptr<ShapNet> BuildNetwork(const Preset& preset,
                                      const Matrix& reference, uint64_t seed);

// Directory holding the bundled CSV files: $SHAPNET_DATA_DIR if set, else the
// source tree's data/ directory.
std::string DefaultDataDir();

// Synthetic presets generate from `seed`; CSV presets read `path`, or the
// bundled file when `path` is empty.
Dataset LoadPresetData(const Preset& preset, const std::string& path,
                       uint64_t seed);

struct PresetRun {
  std::unique_ptr<ShapNet> net;
  SplitResult split;  // normalized parts plus the row indices into the data
  TrainHistory history;
};

// Split (seed + 1), build (seed + 2) and train (shuffle seed + 3) on the
// training part, tracking the held-out metric. The reference is zero, the
// training mean after z-scoring.
PresetRun TrainPreset(const Preset& preset, const Dataset& data,
                      double train_fraction, const TrainConfig& config,
                      uint64_t seed);

}  // namespace shapnet

#endif  // SHAPNET_PRESETS_H_
