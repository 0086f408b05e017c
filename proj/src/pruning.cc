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

#include "shapnet/pruning.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "shapnet/error.h"
#include "shapnet/parallel.h"

namespace shapnet {

PrunedOutput PrunedForward(const DeepShapNet& net, const Matrix& x,
                           double epsilon) {
  Require(epsilon >= 0.0, "epsilon must be >= 0, got ", epsilon);
  Require(x.rows() == net.d_raw() && x.cols() == net.channels_in(), "input is ",
          x.rows(), "x", x.cols(), ", network expects ", net.d_raw(), "x",
          net.channels_in());
  const auto& layers = net.layers();
  const int d = net.d_internal();

  PrunedOutput out;
  PruneStats& stats = out.stats;
  stats.per_layer_skipped.assign(layers.size(), 0);
  stats.skipped.resize(layers.size());

  Matrix current = net.PadBatch(ShapNet::FlattenInstance(x));
  for (size_t l = 0; l < layers.size(); ++l) {
    const ShapleyTransformLayer& layer = layers[l];
    const int c_in = layer.channels_in;
    const int c_out = layer.channels_out;
    if (l > 0) {
      for (int i = 0; i < d; ++i) {
        auto row = current.middleCols(i * c_in, c_in);
        const double norm = row.cwiseAbs().sum();
        if (norm < epsilon && norm > 0.0) {
          row.setZero();
          ++stats.features_clamped;
        }
      }
    }

    Matrix next = Matrix::Zero(1, d * c_out);
    Matrix slice(1, 2 * c_in);
    stats.skipped[l].assign(layer.modules.size(), false);
    for (size_t j = 0; j < layer.modules.size(); ++j) {
      const ShapleyModule& module = layer.modules[j];
      const auto [a, b] = layer.pairs[j];
      slice.leftCols(c_in) = current.middleCols(a * c_in, c_in);
      slice.rightCols(c_in) = current.middleCols(b * c_in, c_in);
      ++stats.modules_total;
      if (slice.row(0).transpose() == module.reference_slice()) {
        stats.skipped[l][j] = true;
        ++stats.modules_skipped;
        ++stats.per_layer_skipped[l];
        continue;
      }
      const Matrix attribution = module.Forward(slice, nullptr);
      next.middleCols(a * c_out, c_out) = attribution.leftCols(c_out);
      next.middleCols(b * c_out, c_out) = attribution.rightCols(c_out);
    }
    out.trace.push_back(next.row(0).reshaped<Eigen::RowMajor>(d, c_out));
    current = std::move(next);
  }

  const int outputs = net.num_outputs();
  Matrix prediction = Matrix::Zero(1, outputs);
  for (int i = 0; i < d; ++i) prediction += current.middleCols(i * outputs, outputs);
  out.prediction = prediction.row(0).transpose();
  out.explanation = out.trace.back().topRows(net.d_raw());
  return out;
}

std::string PruneCurve::ToCsv() const {
  std::ostringstream csv;
  csv.precision(17);
  csv << "epsilon,mean_fraction_skipped," << metric_name << '\n';
  for (const PrunePoint& p : points) {
    csv << p.epsilon << ',' << p.mean_fraction_skipped << ',' << p.metric << '\n';
  }
  return csv.str();
}

PruneCurve PruneSweep(const DeepShapNet& net, const Dataset& data,
                      const std::vector<double>& epsilons, int threads) {
  Require(!epsilons.empty(), "prune sweep needs at least one epsilon");
  Require(data.n() >= 1, "prune sweep needs a nonempty dataset");
  const bool classify = data.task == TaskKind::kClassification;
  PruneCurve curve;
  curve.metric_name = classify ? "accuracy" : "mse";
  auto score = [&](const Vector& prediction, int row) {
    if (!classify) return (prediction.array() - data.targets[row]).square().mean();
    Eigen::Index arg = 0;
    prediction.maxCoeff(&arg);
    return static_cast<double>(static_cast<int>(arg) == data.class_of(row));
  };
  auto instance = [&](int row) -> Matrix {
    return data.features.row(row).reshaped<Eigen::RowMajor>(net.d_raw(),
                                                             net.channels_in());
  };
  // Per-instance forwards so the epsilon = 0 point matches exactly.
  std::vector<double> scores(data.n());
  std::vector<double> fractions(data.n());
  ParallelFor(data.n(), threads, [&](int i) {
    scores[i] = score(net.Explain(instance(i)).prediction, i);
  });
  curve.unpruned_metric =
      std::accumulate(scores.begin(), scores.end(), 0.0) / data.n();
  for (double eps : epsilons) {
    PrunePoint point;
    point.epsilon = eps;
    ParallelFor(data.n(), threads, [&](int i) {
      const PrunedOutput out = PrunedForward(net, instance(i), eps);
      fractions[i] = out.stats.fraction_skipped();
      scores[i] = score(out.prediction, i);
    });
    point.mean_fraction_skipped =
        std::accumulate(fractions.begin(), fractions.end(), 0.0) / data.n();
    point.metric = std::accumulate(scores.begin(), scores.end(), 0.0) / data.n();
    curve.points.push_back(point);
  }
  return curve;
}

}  // namespace shapnet
