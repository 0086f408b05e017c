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

// Randomized property checks that compare networks against the brute-force
// oracle and finite differences. Used by `shapnet verify` and the
// acceptance runner.

#ifndef SHAPNET_VERIFICATION_H_
#define SHAPNET_VERIFICATION_H_

#include <cstdint>
#include <string>
#include <vector>

#include "shapnet/networks.h"

namespace shapnet {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;   // worst value seen over all trials
  double tolerance = 0.0;  // passed iff measured <= tolerance
  int trials = 0;
  std::string detail;
};

struct CheckOptions {
  int trials = 100;
  std::vector<int> dims = {4, 8, 12};
  int k = 2;  // active-set size for shallow modules
  uint64_t seed = 0;
  int threads = 1;
};

// Intrinsic explanation of random shallow networks vs exact Shapley values
// (normalized l1, tolerance 1e-6).
CheckResult CheckShallowExactness(const CheckOptions& options);

// Linear aggregation of module outputs vs the oracle applied to the
// aggregated function, active sets of size <= 3 (max abs, 1e-10).
CheckResult CheckLinearAggregation(const CheckOptions& options);

// |sum of explanation rows - prediction| on random deep forwards (1e-12).
CheckResult CheckDeepLocalAccuracy(const CheckOptions& options);

// Features equal to their reference must get exactly zero attribution.
// Counts violations; tolerance 0.
CheckResult CheckDeepMissingness(const CheckOptions& options);

// Shallow local accuracy: prediction equals the explanation column sums.
CheckResult CheckShallowLocalAccuracy(const CheckOptions& options);

// Pruned forward at epsilon = 0 vs the plain forward (bitwise), and clamped
// rows staying zero downstream at positive epsilon. Counts violations.
CheckResult CheckPruningIdentity(const CheckOptions& options);

// Permutation-sampled Shapley values vs exact enumeration on random deep
// networks: worst |sampled - exact| / standard_error over all coordinates
// (tolerance 3). Coordinates with zero standard error must match to 1e-12.
CheckResult CheckSampledOracle(const CheckOptions& options, int permutations);

// Analytic parameter gradients of a random linear functional of the
// prediction and every layer's representation vs central differences, on
// small networks (<= 2000 parameters). Max relative error, tolerance 1e-4.
CheckResult CheckGradients(const CheckOptions& options, NetworkKind kind);

// {format_version, all_passed, checks: [...]}.
std::string ChecksToJson(const std::vector<CheckResult>& checks);

}  // namespace shapnet

#endif  // SHAPNET_VERIFICATION_H_
