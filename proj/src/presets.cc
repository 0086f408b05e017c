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

#include "shapnet/presets.h"

#include <cstdlib>
#include <filesystem>

#include "shapnet/error.h"

#ifndef SHAPNET_SOURCE_DATA_DIR
#define SHAPNET_SOURCE_DATA_DIR "data"
#endif

namespace shapnet {
namespace {

constexpr const char* kBaseNames[] = {"synthetic", "synthetic-shallow", "yeast",
                                      "breast-cancer", "breast-cancer-wide"};

struct RegVariant {
  const char* suffix;
  RegKind reg;
  double lambda;
};

// lambda defaults: 1e-3 for l1 penalties, 1e-2 for linf.
constexpr RegVariant kVariants[] = {{"", RegKind::kNone, 0.0},
                                    {"-l1", RegKind::kL1Output, 1e-3},
                                    {"-l1-all", RegKind::kL1AllLayers, 1e-3},
                                    {"-linf", RegKind::kLInfOutput, 1e-2}};

Preset BasePreset(const std::string& base) {
  Preset p;
  p.name = base;
  if (base == "synthetic" || base == "synthetic-shallow") {
    p.source = DatasetSource::kSynthetic;
    p.synthetic_n = 10000;
    p.csv.label_column = "y";
    p.csv.task = TaskKind::kRegression;
    p.d = kSyntheticFeatures;
    p.train.loss = LossKind::kMse;
    p.train.epochs = 30;
    p.train.batch_size = 64;
    p.train.lr = 1e-3;
    if (base == "synthetic") {
      p.kind = NetworkKind::kDeep;
      p.layers = {{8, {32}}, {8, {32}}, {8, {32}}, {1, {32}}};
    } else {
      p.kind = NetworkKind::kShallow;
      p.layers = {{1, {32, 32}}};
      // Overlapping neighbour pairs around a ring.
      for (int i = 0; i + 1 < p.d; ++i) p.active_sets.push_back({i, i + 1});
      p.active_sets.push_back({0, p.d - 1});
    }
    return p;
  }
  p.train.loss = LossKind::kSoftmaxCrossEntropy;
  p.train.epochs = 9;
  p.train.batch_size = 32;
  p.train.lr = 1e-3;
  p.train.folds = 5;
  if (base == "yeast") {
    p.data_file = "yeast.csv";
    p.csv.label_column = "localization";
    p.csv.drop_columns = {"sequence_name"};
    p.d = 8;
    p.layers = {{25, {50}}, {50, {100, 100}}, {10, {150, 150}}};
    return p;
  }
  if (base == "breast-cancer" || base == "breast-cancer-wide") {
    p.data_file = "breast_cancer.csv";
    p.csv.label_column = "diagnosis";
    p.csv.drop_columns = {"id"};
    p.d = 30;
    if (base == "breast-cancer") {
      p.layers = {{4, {16}}, {4, {16}}, {4, {16}}, {4, {16}}, {2, {16}}};
    } else {
      p.layers = {{25, {50}},
                  {50, {100, 100}},
                  {75, {150, 150}},
                  {100, {200, 200}},
                  {2, {250, 250}}};
    }
    return p;
  }
  Fail("unknown preset base '", base, "'");
}

}  // namespace

std::vector<std::string> PresetNames() {
  std::vector<std::string> names;
  for (const char* base : kBaseNames) {
    for (const RegVariant& v : kVariants) names.push_back(std::string(base) + v.suffix);
  }
  return names;
}

Preset GetPreset(const std::string& name) {
  // Longest suffix first so "-l1-all" is not read as "-l1".
  for (const RegVariant* v :
       {&kVariants[2], &kVariants[1], &kVariants[3], &kVariants[0]}) {
    const std::string suffix = v->suffix;
    if (name.size() <= suffix.size() ||
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) {
      continue;
    }
    const std::string base = name.substr(0, name.size() - suffix.size());
    bool known = false;
    for (const char* b : kBaseNames) known = known || base == b;
    if (!known) continue;
    Preset p = BasePreset(base);
    p.name = name;
    p.train.reg = v->reg;
    p.train.lambda = v->lambda;
    return p;
  }
  std::string all;
  for (const auto& n : PresetNames()) all += (all.empty() ? "" : ", ") + n;
  Fail("unknown preset '", name, "' (available: ", all, ")");
}

std::unique_ptr<ShapNet> BuildNetwork(const Preset& preset,
                                      const Matrix& reference, uint64_t seed) {
  Require(reference.rows() == preset.d && reference.cols() == 1,
          "preset ", preset.name, " needs a ", preset.d, "x1 reference");
  Rng rng(seed);
  if (preset.kind == NetworkKind::kShallow) {
    return std::make_unique<ShallowShapNet>(
        ShallowShapNet::Random(preset.d, 1, reference, preset.active_sets,
                               preset.layers.at(0), preset.activation, rng));
  }
  return std::make_unique<DeepShapNet>(DeepShapNet::Random(
      preset.d, reference, preset.layers, preset.activation, rng));
}

std::string DefaultDataDir() {
  if (const char* env = std::getenv("SHAPNET_DATA_DIR"); env != nullptr && *env) {
    return env;
  }
  return SHAPNET_SOURCE_DATA_DIR;
}

Dataset LoadPresetData(const Preset& preset, const std::string& path,
                       uint64_t seed) {
  if (preset.source == DatasetSource::kSynthetic && path.empty()) {
    return GenerateSynthetic(preset.synthetic_n, seed);
  }
  const std::string file =
      path.empty()
          ? (std::filesystem::path(DefaultDataDir()) / preset.data_file).string()
          : path;
  Require(std::filesystem::exists(file), "dataset file '", file,
          "' not found (see tools/prepare_data.py)");
  Dataset ds = LoadCsv(file, preset.csv);
  Require(ds.d() == preset.d, "preset ", preset.name, " expects ", preset.d,
          " features, '", file, "' has ", ds.d());
  return ds;
}

PresetRun TrainPreset(const Preset& preset, const Dataset& data,
                      double train_fraction, const TrainConfig& config,
                      uint64_t seed) {
  PresetRun run;
  run.split = SplitNormalize(data, train_fraction, seed + 1);
  run.net = BuildNetwork(preset, Matrix::Zero(preset.d, 1), seed + 2);
  TrainConfig cfg = config;
  cfg.seed = seed + 3;
  cfg.folds = 0;
  run.history = Train(*run.net, run.split.train, &run.split.test, cfg);
  return run;
}

}  // namespace shapnet
