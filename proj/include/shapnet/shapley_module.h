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

#ifndef SHAPNET_SHAPLEY_MODULE_H_
#define SHAPNET_SHAPLEY_MODULE_H_

#include <vector>

#include "shapnet/core_math.h"

namespace shapnet {

inline constexpr int kMaxActiveSetSize = 4;

// Sorted, distinct feature indices that a module's inner function reads.
struct ActiveSet {
  std::vector<int> indices;

  int size() const { return static_cast<int>(indices.size()); }

  // Validates 1 <= k <= k_max, strict increase and range [0, d).
  static ActiveSet Make(std::vector<int> indices, int d,
                        int k_max = kMaxActiveSetSize);
};

// weight_by_size[s] = 1 / (k * C(k-1, s)): the Shapley weight of a coalition
// of s other players when adding one player.
struct CoalitionWeightTable {
  int k = 0;
  std::vector<double> weight_by_size;
};

// Tables are built once per k and shared.
const CoalitionWeightTable& CoalitionWeights(int k);

struct ModuleCache {
  MlpCache inner;
  Matrix coalition_outputs;  // (batch * 2^k) x c', row b * 2^k + mask
  int batch = 0;
};

// Wraps an inner function over k active positions (c channels each) and emits
// exact Shapley values of each position for every one of the c' outputs.
//
// Coalitions are enumerated by binary counting on a k-bit mask: bit p set
// means active position p takes the instance value, otherwise the reference.
// The base value f(reference) is never emitted, so attributions sum to
// f(x) - f(reference).
class ShapleyModule {
 public:
  ShapleyModule() = default;
  ShapleyModule(ActiveSet active_set, Mlp inner, Vector reference_slice,
                int channels_in, int channels_out);

  const ActiveSet& active_set() const { return active_set_; }
  const Mlp& inner() const { return inner_; }
  Mlp& mutable_inner() { return inner_; }
  const Vector& reference_slice() const { return reference_slice_; }
  int k() const { return active_set_.size(); }
  int channels_in() const { return channels_in_; }
  int channels_out() const { return channels_out_; }
  int num_coalitions() const { return 1 << k(); }

  // x_slices is batch x (k * c), position-major. Returns batch x (k * c'),
  // where columns [p * c', (p + 1) * c') hold the attribution of position p.
  // Performs exactly batch * 2^k inner evaluations.
  Matrix Forward(const Matrix& x_slices, ModuleCache* cache = nullptr) const;

  // Single instance: returns the k x c' attribution matrix.
  Matrix Forward(const Vector& x_slice) const;

  // grad_attribution is batch x (k * c'). Returns batch x (k * c) and adds
  // the inner parameter gradients into `grads` (may be null).
  Matrix Backward(const ModuleCache& cache, const Matrix& grad_attribution,
                  MlpGrads* grads) const;

  // The inner function evaluated on a raw k * c input, for oracles and tests.
  Vector EvaluateInner(const Vector& x_slice) const {
    return inner_.Forward(x_slice);
  }

 private:
  ActiveSet active_set_;
  Mlp inner_;
  Vector reference_slice_;
  int channels_in_ = 0;
  int channels_out_ = 0;
};

}  // namespace shapnet

#endif  // SHAPNET_SHAPLEY_MODULE_H_
