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

#include "shapnet/evaluation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "nlohmann/json.hpp"
#include "shapnet/error.h"

namespace shapnet {

std::string ToString(RemovalOrder order) {
  switch (order) {
    case RemovalOrder::kTopSalient:
      return "top_salient";
    case RemovalOrder::kLeastSalient:
      return "least_salient";
    case RemovalOrder::kRandom:
      return "random";
  }
  return "random";
}

RemovalOrder ParseRemovalOrder(const std::string& text) {
  for (RemovalOrder o : {RemovalOrder::kTopSalient, RemovalOrder::kLeastSalient,
                         RemovalOrder::kRandom}) {
    if (ToString(o) == text) return o;
  }
  Fail("unknown removal order '", text,
       "' (expected top_salient, least_salient or random)");
}

std::string RemovalCurve::ToCsv() const {
  std::ostringstream out;
  out.precision(17);
  const char* name =
      metric == RemovalMetric::kClassLogit ? "class_logit" : "relative_change";
  out << "ordering,seed,k," << name << '\n';
  for (size_t i = 0; i < ks.size(); ++i) {
    out << ToString(ordering) << ',' << seed << ',' << ks[i] << ','
        << metric_values[i] << '\n';
  }
  return out.str();
}

std::vector<int> RankFeatures(const Matrix& explanation, int cls,
                              RemovalOrder order, uint64_t seed) {
  Require(cls >= 0 && cls < explanation.cols(), "class ", cls,
          " out of range for ", explanation.cols(), " outputs");
  std::vector<int> idx(explanation.rows());
  std::iota(idx.begin(), idx.end(), 0);
  const auto phi = explanation.col(cls);
  switch (order) {
    case RemovalOrder::kTopSalient:
      std::stable_sort(idx.begin(), idx.end(),
                       [&](int a, int b) { return phi[a] > phi[b]; });
      break;
    case RemovalOrder::kLeastSalient:
      std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return std::abs(phi[a]) < std::abs(phi[b]);
      });
      break;
    case RemovalOrder::kRandom: {
      Rng rng(seed);
      std::shuffle(idx.begin(), idx.end(), rng);
      break;
    }
  }
  return idx;
}

RemovalCurve RemovalCurveFor(const ShapNet& net, const Matrix& x,
                             const Matrix& explanation,
                             const std::vector<int>& ks, RemovalMetric metric,
                             RemovalOrder order, uint64_t seed) {
  const int d = net.d_raw();
  Require(net.num_outputs() >= 2,
          "removal curves need a classification network (class logits)");
  Require(x.rows() == d && x.cols() == net.channels_in(), "input is ",
          x.rows(), "x", x.cols(), ", network expects ", d, "x",
          net.channels_in());
  Require(explanation.rows() == d && explanation.cols() == net.num_outputs(),
          "explanation must be ", d, "x", net.num_outputs());
  Require(!ks.empty(), "removal curve needs at least one k");
  for (size_t i = 0; i < ks.size(); ++i) {
    Require(ks[i] >= 0 && ks[i] <= d, "k = ", ks[i], " outside [0, ", d, "]");
    Require(i == 0 || ks[i] > ks[i - 1], "ks must be strictly increasing");
  }

  // Row 0 holds the untouched instance; every row goes through one forward
  // pass so identical inputs give identical logits.
  Matrix batch(static_cast<Eigen::Index>(ks.size()) + 1, x.size());
  batch.row(0) = ShapNet::FlattenInstance(x);
  Matrix removed = x;
  std::vector<int> ranking;
  Eigen::Index cls = 0;
  {
    const Vector before = net.ForwardBatch(batch.topRows(1), nullptr)
                              .prediction.row(0)
                              .transpose();
    before.maxCoeff(&cls);
    ranking = RankFeatures(explanation, static_cast<int>(cls), order, seed);
  }
  int done = 0;
  for (size_t i = 0; i < ks.size(); ++i) {
    for (; done < ks[i]; ++done) {
      removed.row(ranking[done]) = net.reference().row(ranking[done]);
    }
    batch.row(i + 1) = ShapNet::FlattenInstance(removed);
  }
  const Matrix logits = net.ForwardBatch(batch, nullptr).prediction;

  RemovalCurve curve;
  curve.ks = ks;
  curve.ordering = order;
  curve.metric = metric;
  curve.seed = seed;
  const double base = logits(0, cls);
  for (size_t i = 0; i < ks.size(); ++i) {
    const double after = logits(i + 1, cls);
    curve.metric_values.push_back(
        metric == RemovalMetric::kClassLogit
            ? after
            : std::abs(after - base) /
                  std::max(std::abs(base), kRelativeChangeFloor));
  }
  return curve;
}

RemovalCurve AverageCurves(const std::vector<RemovalCurve>& curves) {
  Require(!curves.empty(), "no curves to average");
  RemovalCurve mean = curves.front();
  std::fill(mean.metric_values.begin(), mean.metric_values.end(), 0.0);
  for (const RemovalCurve& c : curves) {
    Require(c.ks == mean.ks && c.metric == mean.metric &&
                c.ordering == mean.ordering,
            "curves disagree on ks, metric or ordering");
    for (size_t i = 0; i < c.ks.size(); ++i) {
      mean.metric_values[i] += c.metric_values[i] / curves.size();
    }
  }
  return mean;
}

AttributionStats ComputeAttributionStats(const std::vector<Matrix>& explanations,
                                         double tau) {
  Require(!explanations.empty(), "attribution stats need at least one instance");
  Require(tau >= 0.0, "tau must be >= 0");
  AttributionStats stats;
  stats.tau = tau;
  stats.n_instances = static_cast<int>(explanations.size());
  double cv_sum = 0.0;
  double sparsity_sum = 0.0;
  for (size_t i = 0; i < explanations.size(); ++i) {
    const Matrix& phi = explanations[i];
    Require(phi.size() > 0, "empty attribution for instance ", i);
    const Eigen::ArrayXXd mag = phi.array().abs();
    sparsity_sum += static_cast<double>((mag < tau).count()) / mag.size();
    const double mean = mag.mean();
    if (mean == 0.0) {
      stats.degenerate_instances.push_back(static_cast<int>(i));
      continue;
    }
    const double var = (mag - mean).square().mean();
    cv_sum += std::sqrt(var) / mean;
  }
  stats.sparsity = sparsity_sum / explanations.size();
  const size_t valid = explanations.size() - stats.degenerate_instances.size();
  stats.cv = valid == 0 ? std::numeric_limits<double>::quiet_NaN()
                        : cv_sum / static_cast<double>(valid);
  return stats;
}

std::string AttributionStats::ToJson() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["n_instances"] = n_instances;
  j["tau"] = tau;
  j["sparsity"] = sparsity;
  if (std::isfinite(cv)) {
    j["cv"] = cv;
  } else {
    j["cv"] = nullptr;
  }
  j["degenerate_instances"] = degenerate_instances;
  return j.dump(2);
}

}  // namespace shapnet
