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

// Conditional per-instance pruning for deep networks. Small intermediate
// rows are clamped to zero and modules that would only see zeros are
// skipped; missingness guarantees their outputs are zero anyway.

#ifndef SHAPNET_PRUNING_H_
#define SHAPNET_PRUNING_H_

#include <string>
#include <vector>

#include "shapnet/core_math.h"
#include "shapnet/data.h"
#include "shapnet/networks.h"

namespace shapnet {

struct PruneStats {
  int modules_total = 0;
  int modules_skipped = 0;
  std::vector<int> per_layer_skipped;
  // Nonzero intermediate rows forced to zero.
  int features_clamped = 0;
  // skipped[l][j] is true when module j of layer l was not evaluated.
  std::vector<std::vector<bool>> skipped;

  double fraction_skipped() const {
    return modules_total == 0 ? 0.0
                              : static_cast<double>(modules_skipped) / modules_total;
  }
};

struct PrunedOutput {
  Vector prediction;
  Matrix explanation;         // d_raw x outputs
  std::vector<Matrix> trace;  // d_internal x c_l per layer, after clamping
  PruneStats stats;
};

// Rows of every representation fed into layer l >= 1 whose l1 norm is below
// epsilon become zero. A module is skipped when all of its inputs equal its
// reference slice exactly, which at epsilon = 0 only happens for padding or
// inputs that already sit at the reference.
PrunedOutput PrunedForward(const DeepShapNet& net, const Matrix& x,
                           double epsilon);

struct PrunePoint {
  double epsilon = 0.0;
  double mean_fraction_skipped = 0.0;
  double metric = 0.0;  // accuracy or MSE on the pruned predictions
};

struct PruneCurve {
  std::vector<PrunePoint> points;
  double unpruned_metric = 0.0;
  std::string metric_name;

  std::string ToCsv() const;
};

// One pruned pass over `data` per epsilon, in the order given. Results do not
// depend on `threads`.
PruneCurve PruneSweep(const DeepShapNet& net, const Dataset& data,
                      const std::vector<double>& epsilons, int threads = 1);

}  // namespace shapnet

#endif  // SHAPNET_PRUNING_H_
