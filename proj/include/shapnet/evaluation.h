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

// Feature-removal curves and summary statistics of attribution matrices.

#ifndef SHAPNET_EVALUATION_H_
#define SHAPNET_EVALUATION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "shapnet/core_math.h"
#include "shapnet/networks.h"

namespace shapnet {

enum class RemovalOrder { kTopSalient, kLeastSalient, kRandom };

std::string ToString(RemovalOrder order);
RemovalOrder ParseRemovalOrder(const std::string& text);

enum class RemovalMetric {
  kClassLogit,      // logit of the originally predicted class
  kRelativeChange,  // |after - before| / max(|before|, delta)
};

inline constexpr double kRelativeChangeFloor = 1e-8;

struct RemovalCurve {
  std::vector<int> ks;
  std::vector<double> metric_values;
  RemovalOrder ordering = RemovalOrder::kTopSalient;
  RemovalMetric metric = RemovalMetric::kClassLogit;
  uint64_t seed = 0;  // only meaningful for kRandom

  std::string ToCsv() const;
};

// Feature order for removal. Saliency is the attribution toward `cls`:
// descending signed value for kTopSalient, ascending magnitude for
// kLeastSalient, ties broken by feature index.
std::vector<int> RankFeatures(const Matrix& explanation, int cls,
                              RemovalOrder order, uint64_t seed);

// x and explanation are d_raw x c and d_raw x outputs. Removed features take
// the network's first-layer reference values. The ranking is computed once,
// so larger k always removes a superset.
RemovalCurve RemovalCurveFor(const ShapNet& net, const Matrix& x,
                             const Matrix& explanation,
                             const std::vector<int>& ks, RemovalMetric metric,
                             RemovalOrder order, uint64_t seed = 0);

inline RemovalCurve TopKRemovalCurve(
    const ShapNet& net, const Matrix& x, const Matrix& explanation,
    const std::vector<int>& ks, RemovalOrder order = RemovalOrder::kTopSalient,
    uint64_t seed = 0) {
  return RemovalCurveFor(net, x, explanation, ks, RemovalMetric::kClassLogit,
                         order, seed);
}

inline RemovalCurve LeastKRemovalCurve(
    const ShapNet& net, const Matrix& x, const Matrix& explanation,
    const std::vector<int>& ks,
    RemovalOrder order = RemovalOrder::kLeastSalient, uint64_t seed = 0) {
  return RemovalCurveFor(net, x, explanation, ks,
                         RemovalMetric::kRelativeChange, order, seed);
}

// Pointwise mean of curves sharing ks, ordering and metric.
RemovalCurve AverageCurves(const std::vector<RemovalCurve>& curves);

inline constexpr double kDefaultSparsityTau = 0.01;

struct AttributionStats {
  double cv = 0.0;        // mean over non-degenerate instances
  double sparsity = 0.0;  // mean fraction of entries with |phi| < tau
  double tau = kDefaultSparsityTau;
  int n_instances = 0;
  // Instances whose attributions are all zero; excluded from cv.
  std::vector<int> degenerate_instances;

  std::string ToJson() const;
};

AttributionStats ComputeAttributionStats(const std::vector<Matrix>& explanations,
                                         double tau = kDefaultSparsityTau);

}  // namespace shapnet

#endif  // SHAPNET_EVALUATION_H_
