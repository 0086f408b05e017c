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

#include "shapnet/oracle.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "nlohmann/json.hpp"
#include "shapnet/error.h"
#include "shapnet/parallel.h"

namespace shapnet {
namespace {

constexpr Eigen::Index kEvaluationChunk = 4096;

void CheckInputs(const BlackBoxFunction& fn, const Matrix& x,
                 const Matrix& reference) {
  Require(static_cast<bool>(fn.evaluate), "black box has no evaluator");
  Require(x.rows() == fn.d && x.cols() == fn.c, "instance is ", x.rows(), "x",
          x.cols(), ", black box expects ", fn.d, "x", fn.c);
  Require(reference.rows() == fn.d && reference.cols() == fn.c,
          "reference shape does not match the black box");
}

Matrix Evaluate(const BlackBoxFunction& fn, const Matrix& inputs) {
  Matrix out = fn.evaluate(inputs);
  Require(out.rows() == inputs.rows() && out.cols() == fn.outputs,
          "black box returned ", out.rows(), "x", out.cols(), ", expected ",
          inputs.rows(), "x", fn.outputs);
  return out;
}

}  // namespace

BlackBoxFunction AsBlackBox(const ShapNet& net) {
  BlackBoxFunction fn;
  fn.d = net.d_raw();
  fn.c = net.channels_in();
  fn.outputs = net.num_outputs();
  fn.evaluate = [&net](const Matrix& inputs) {
    return net.ForwardBatch(inputs, nullptr).prediction;
  };
  return fn;
}

Matrix ExactShapley(const BlackBoxFunction& fn, const Matrix& x,
                    const Matrix& reference) {
  CheckInputs(fn, x, reference);
  const int d = fn.d;
  const int c = fn.c;
  Require(d <= kMaxExactFeatures, "exact Shapley over d=", d,
          " features needs 2^d evaluations; use SampledShapley for d > ",
          kMaxExactFeatures);
  const Eigen::Index num_masks = Eigen::Index{1} << d;

  const Matrix x_flat = ShapNet::FlattenInstance(x);
  const Matrix r_flat = ShapNet::FlattenInstance(reference);
  Matrix values(num_masks, fn.outputs);
  for (Eigen::Index start = 0; start < num_masks; start += kEvaluationChunk) {
    const Eigen::Index count = std::min(kEvaluationChunk, num_masks - start);
    Matrix inputs(count, d * c);
    for (Eigen::Index row = 0; row < count; ++row) {
      const Eigen::Index mask = start + row;
      for (int i = 0; i < d; ++i) {
        inputs.row(row).segment(i * c, c) = ((mask >> i) & 1)
                                                ? x_flat.row(0).segment(i * c, c)
                                                : r_flat.row(0).segment(i * c, c);
      }
    }
    values.middleRows(start, count) = Evaluate(fn, inputs);
  }

  // w(s) = s! (d - s - 1)! / d! = 1 / (d * C(d - 1, s)).
  std::vector<double> weights(d);
  double binom = 1.0;
  for (int s = 0; s < d; ++s) {
    weights[s] = 1.0 / (static_cast<double>(d) * binom);
    binom = binom * (d - 1 - s) / (s + 1);
  }

  Matrix phi = Matrix::Zero(d, fn.outputs);
  for (Eigen::Index mask = 0; mask < num_masks; ++mask) {
    const int size = std::popcount(static_cast<uint64_t>(mask));
    if (size == d) continue;
    const double w = weights[size];
    for (int i = 0; i < d; ++i) {
      const Eigen::Index bit = Eigen::Index{1} << i;
      if (mask & bit) continue;
      phi.row(i) += w * (values.row(mask | bit) - values.row(mask));
    }
  }
  return phi;
}

SampledShapleyResult SampledShapley(const BlackBoxFunction& fn, const Matrix& x,
                                    const Matrix& reference, int n_permutations,
                                    uint64_t seed) {
  CheckInputs(fn, x, reference);
  Require(n_permutations >= 1, "n_permutations must be >= 1");
  const int d = fn.d;
  const int c = fn.c;
  const Matrix x_flat = ShapNet::FlattenInstance(x);
  const Matrix r_flat = ShapNet::FlattenInstance(reference);

  Rng rng(seed);
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);

  Matrix sum = Matrix::Zero(d, fn.outputs);
  Matrix sum_sq = Matrix::Zero(d, fn.outputs);
  // Permutations are evaluated in chunks; each contributes d + 1 prefixes.
  const int per_chunk = std::max<int>(1, static_cast<int>(kEvaluationChunk / (d + 1)));
  std::vector<std::vector<int>> chunk_orders;
  for (int done = 0; done < n_permutations;) {
    const int count = std::min(per_chunk, n_permutations - done);
    chunk_orders.clear();
    Matrix inputs(static_cast<Eigen::Index>(count) * (d + 1), d * c);
    for (int q = 0; q < count; ++q) {
      std::shuffle(order.begin(), order.end(), rng);
      chunk_orders.push_back(order);
      const Eigen::Index base = static_cast<Eigen::Index>(q) * (d + 1);
      inputs.row(base) = r_flat.row(0);
      for (int t = 0; t < d; ++t) {
        inputs.row(base + t + 1) = inputs.row(base + t);
        const int i = order[t];
        inputs.row(base + t + 1).segment(i * c, c) =
            x_flat.row(0).segment(i * c, c);
      }
    }
    const Matrix values = Evaluate(fn, inputs);
    for (int q = 0; q < count; ++q) {
      const Eigen::Index base = static_cast<Eigen::Index>(q) * (d + 1);
      for (int t = 0; t < d; ++t) {
        const int i = chunk_orders[q][t];
        const RowVector delta = values.row(base + t + 1) - values.row(base + t);
        sum.row(i) += delta;
        sum_sq.row(i) += delta.cwiseAbs2();
      }
    }
    done += count;
  }

  SampledShapleyResult result;
  result.n_permutations = n_permutations;
  const double n = n_permutations;
  result.values = sum / n;
  if (n_permutations > 1) {
    const Matrix variance =
        ((sum_sq - n * result.values.cwiseAbs2()) / (n - 1.0)).cwiseMax(0.0);
    result.standard_error = (variance / n).cwiseSqrt();
  } else {
    result.standard_error = Matrix::Zero(d, fn.outputs);
  }
  return result;
}

double NormalizedL1(const Vector& phi, const Vector& gamma, double floor) {
  Require(phi.size() == gamma.size(), "NormalizedL1 length mismatch: ",
          phi.size(), " vs ", gamma.size());
  Require(phi.size() > 0, "NormalizedL1 of empty vectors");
  const double denom =
      static_cast<double>(phi.size()) * std::max(std::abs(phi.sum()), floor);
  return (phi - gamma).lpNorm<1>() / denom;
}

bool NormalizedL1Degenerate(const Vector& phi, double floor) {
  return std::abs(phi.sum()) < floor;
}

double WeightedExplanationError(const Vector& logits,
                                const Vector& per_class_errors) {
  Require(logits.size() == per_class_errors.size() && logits.size() > 0,
          "logits and per-class errors must have equal nonzero length");
  const double max_logit = logits.maxCoeff();
  const Vector exps = (logits.array() - max_logit).exp().matrix();
  return exps.dot(per_class_errors) / exps.sum();
}

double ExplanationError(const Matrix& oracle, const Matrix& candidate,
                        const Vector& logits) {
  Require(oracle.rows() == candidate.rows() && oracle.cols() == candidate.cols(),
          "explanations differ in shape");
  Vector errors(oracle.cols());
  for (Eigen::Index j = 0; j < oracle.cols(); ++j) {
    errors[j] = NormalizedL1(oracle.col(j), candidate.col(j));
  }
  if (errors.size() == 1) return errors[0];
  return WeightedExplanationError(logits, errors);
}

double VerificationReport::mean_error() const {
  if (per_instance.empty()) return 0.0;
  return std::accumulate(per_instance.begin(), per_instance.end(), 0.0) /
         static_cast<double>(per_instance.size());
}

double VerificationReport::std_error() const {
  if (per_instance.size() < 2) return 0.0;
  const double mean = mean_error();
  double ss = 0.0;
  for (double e : per_instance) ss += (e - mean) * (e - mean);
  return std::sqrt(ss / static_cast<double>(per_instance.size()));
}

double VerificationReport::max_error() const {
  if (per_instance.empty()) return 0.0;
  return *std::max_element(per_instance.begin(), per_instance.end());
}

std::string VerificationReport::ToJson() const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["model_id"] = model_id;
  j["method"] = method;
  j["n_instances"] = per_instance.size();
  j["mean_error"] = mean_error();
  j["std_error"] = std_error();
  j["max_error"] = max_error();
  j["degenerate_instances"] = degenerate_instances;
  j["per_instance"] = per_instance;
  return j.dump(2);
}

VerificationReport ExplanationFidelity(const ShapNet& net,
                                       const Matrix& instances,
                                       const FidelityOptions& options,
                                       const std::string& model_id) {
  const int d = net.d_raw();
  const int c = net.channels_in();
  Require(instances.cols() == d * c, "instances have ", instances.cols(),
          " columns, network expects ", d * c);
  Require(options.method == OracleMethod::kExact || options.permutations >= 1,
          "permutations must be >= 1");
  const BlackBoxFunction fn = AsBlackBox(net);
  const Matrix reference = net.reference();
  const int n = static_cast<int>(instances.rows());
  std::vector<double> errors(n);
  std::vector<char> degenerate(n, 0);
  ParallelFor(n, options.threads, [&](int i) {
    const Matrix x = instances.row(i).reshaped<Eigen::RowMajor>(d, c);
    const Explained e = net.Explain(x);
    const Matrix oracle =
        options.method == OracleMethod::kExact
            ? ExactShapley(fn, x, reference)
            : SampledShapley(fn, x, reference, options.permutations,
                             options.seed + static_cast<uint64_t>(i))
                  .values;
    errors[i] = ExplanationError(oracle, e.explanation, e.prediction);
    for (Eigen::Index j = 0; j < oracle.cols(); ++j) {
      if (NormalizedL1Degenerate(oracle.col(j))) degenerate[i] = 1;
    }
  });
  VerificationReport report;
  report.model_id = model_id;
  report.method = options.method == OracleMethod::kExact
                      ? "exact"
                      : "sampled_" + std::to_string(options.permutations);
  report.per_instance = std::move(errors);
  for (char flag : degenerate) report.degenerate_instances += flag;
  return report;
}

}  // namespace shapnet
