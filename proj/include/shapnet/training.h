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

#ifndef SHAPNET_TRAINING_H_
#define SHAPNET_TRAINING_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "shapnet/core_math.h"
#include "shapnet/data.h"
#include "shapnet/networks.h"

namespace shapnet {

enum class LossKind { kMse, kSoftmaxCrossEntropy };
enum class RegKind { kNone, kL1Output, kL1AllLayers, kLInfOutput };

struct TrainConfig {
  int epochs = 9;
  int batch_size = 32;
  double lr = 1e-3;
  LossKind loss = LossKind::kSoftmaxCrossEntropy;
  RegKind reg = RegKind::kNone;
  double lambda = 0.0;
  uint64_t seed = 0;
  int folds = 0;  // 0: plain split

  void Validate() const;
};

std::string ToString(LossKind kind);
std::string ToString(RegKind kind);
LossKind ParseLossKind(const std::string& text);
RegKind ParseRegKind(const std::string& text);

struct LossResult {
  double loss = 0.0;
  Vector grad;  // d loss / d prediction
};

// MSE averages over outputs (target broadcast); cross-entropy treats
// `target` as a class index and the prediction as raw logits.
LossResult ComputeLoss(const Vector& prediction, double target, LossKind kind);

struct PenaltyResult {
  double penalty = 0.0;
  std::vector<Matrix> grad_trace;  // same shapes as the trace
};

// Penalty on one instance's trace (each entry d x c_l):
//   L1Output    lambda * sum |Z^(L)|
//   L1AllLayers lambda * sum_l sum |Z^(l)|
//   LInfOutput  lambda * max |Z^(L)|, subgradient at the first row-major
//               argmax only.
PenaltyResult RegularizationPenalty(const std::vector<Matrix>& trace,
                                    RegKind kind, double lambda);

// Batched variant on flattened traces (batch x (d * c_l)); the penalty is
// the mean over instances, matching the mean loss.
PenaltyResult BatchRegularizationPenalty(const std::vector<Matrix>& trace,
                                         RegKind kind, double lambda);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double test_metric = 0.0;  // NaN when no evaluation set is given
  double penalty = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;  // epochs[0] is the untrained model

  // epoch,train_loss,test_metric,penalty
  std::string ToCsv() const;
};

// Accuracy for classification, mean squared error for regression.
double EvaluateMetric(const ShapNet& net, const Dataset& data);
Matrix PredictBatch(const ShapNet& net, const Matrix& features);

// Mini-batch Adam over a seeded per-epoch shuffle. Regularizer gradients are
// seeded into the backward pass through the trace. Deterministic in config.
TrainHistory Train(ShapNet& net, const Dataset& train, const Dataset* test,
                   const TrainConfig& config);

// Builds a fresh network for a fold from its (normalized) training data.
using NetworkBuilder =
    std::function<std::unique_ptr<ShapNet>(const Dataset& train, uint64_t seed)>;

struct FoldResult {
  int fold = 0;
  int train_size = 0;
  int test_size = 0;
  double metric = 0.0;
  TrainHistory history;
};

struct CrossValidationResult {
  std::vector<FoldResult> folds;
  double mean_metric = 0.0;
};

// Seeded shuffle, then contiguous folds whose sizes differ by at most one.
std::vector<std::vector<int>> FoldAssignment(int n, int folds, uint64_t seed);

// Seed used for fold `fold` of a run seeded with `seed`.
uint64_t FoldSeed(uint64_t seed, int fold);

// Sees each trained fold model with its normalized held-out part.
using FoldCallback =
    std::function<void(int fold, const ShapNet& net, const Dataset& test)>;

// Each fold normalizes with its own training statistics and trains from a
// fold-derived seed.
CrossValidationResult CrossValidate(const Dataset& dataset,
                                    const NetworkBuilder& builder,
                                    const TrainConfig& config,
                                    const FoldCallback& on_fold = nullptr);

}  // namespace shapnet

#endif  // SHAPNET_TRAINING_H_
