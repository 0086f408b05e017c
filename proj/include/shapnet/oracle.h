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

#ifndef SHAPNET_ORACLE_H_
#define SHAPNET_ORACLE_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "shapnet/core_math.h"
#include "shapnet/networks.h"

namespace shapnet {

// A deterministic function of d features with c channels each. `evaluate`
// receives one flattened d x c input per row and returns one row of
// `outputs` values per input.
struct BlackBoxFunction {
  int d = 0;
  int c = 1;
  int outputs = 1;
  std::function<Matrix(const Matrix&)> evaluate;
};

// The prediction of `net` as a black box over its raw features. The network
// must outlive the returned function.
BlackBoxFunction AsBlackBox(const ShapNet& net);

inline constexpr int kMaxExactFeatures = 20;

// Baseline Shapley values by evaluating all 2^d coalitions once each.
// x and reference are d x c; returns d x outputs.
Matrix ExactShapley(const BlackBoxFunction& fn, const Matrix& x,
                    const Matrix& reference);

struct SampledShapleyResult {
  Matrix values;          // d x outputs, mean marginal contribution
  Matrix standard_error;  // d x outputs, sample std / sqrt(n)
  int n_permutations = 0;
};

// Permutation-sampling estimate: each permutation inserts features in order
// starting from the reference and credits each with its marginal change.
SampledShapleyResult SampledShapley(const BlackBoxFunction& fn, const Matrix& x,
                                    const Matrix& reference, int n_permutations,
                                    uint64_t seed);

inline constexpr double kNormalizedL1Floor = 1e-8;

// ||phi - gamma||_1 / (d * max(|sum phi|, floor)) with d = phi.size().
double NormalizedL1(const Vector& phi, const Vector& gamma,
                    double floor = kNormalizedL1Floor);

// True when the denominator of NormalizedL1 hit the floor.
bool NormalizedL1Degenerate(const Vector& phi,
                            double floor = kNormalizedL1Floor);

// sum_j softmax(logits)_j * per_class_errors_j.
double WeightedExplanationError(const Vector& logits,
                                const Vector& per_class_errors);

// Column-wise NormalizedL1 between a reference attribution and a candidate,
// combined with the softmax weights of `logits` when there are several
// outputs.
double ExplanationError(const Matrix& oracle, const Matrix& candidate,
                        const Vector& logits);

struct VerificationReport {
  std::string model_id;
  std::string method;
  std::vector<double> per_instance;
  int degenerate_instances = 0;

  double mean_error() const;
  double std_error() const;
  double max_error() const;
  // {format_version, model_id, method, n_instances, mean_error, std_error,
  //  max_error, degenerate_instances, per_instance}
  std::string ToJson() const;
};

enum class OracleMethod { kExact, kSampled };

struct FidelityOptions {
  OracleMethod method = OracleMethod::kExact;
  int permutations = 100000;  // sampled only
  uint64_t seed = 0;          // instance i samples with a seed derived from it
  int threads = 1;
};

// Compares each instance's intrinsic explanation against the oracle with
// ExplanationError. Rows of `instances` are flattened d_raw x c inputs.
VerificationReport ExplanationFidelity(const ShapNet& net,
                                       const Matrix& instances,
                                       const FidelityOptions& options,
                                       const std::string& model_id = "");

}  // namespace shapnet

#endif  // SHAPNET_ORACLE_H_
