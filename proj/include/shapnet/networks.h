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

#ifndef SHAPNET_NETWORKS_H_
#define SHAPNET_NETWORKS_H_

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "shapnet/core_math.h"
#include "shapnet/shapley_module.h"

namespace shapnet {

// One instance over d explainable features with c channels each, together
// with the reference it is explained against. Both are d x c.
struct FeatureTensor {
  Matrix values;
  Matrix reference;

  int d() const { return static_cast<int>(values.rows()); }
  int c() const { return static_cast<int>(values.cols()); }

  static FeatureTensor Make(Matrix values, Matrix reference);
};

// Appends features whose value equals their reference (zero for both), so
// they receive zero attribution at every layer.
FeatureTensor PadFeatures(const FeatureTensor& x, int d_padded);

// Smallest power of two >= d.
int NextPowerOfTwo(int d);

// Pairs i with i XOR 2^(layer_index mod log2(d_padded)), each pair listed
// once with the smaller index first, ordered by that index.
std::vector<std::pair<int, int>> ButterflyPairs(int d_padded, int layer_index);

// Batched tensors are flattened one instance per row: feature i, channel ch
// lives at column i * c + ch.
struct NetworkForward {
  Matrix prediction;          // batch x num_outputs
  std::vector<Matrix> trace;  // per transform layer, batch x (d_internal * c_l)
};

struct NetworkCache {
  std::vector<std::vector<ModuleCache>> modules;  // [layer][module]
  int batch = 0;
};

// Parameter gradients for every inner function, in inner_functions() order.
using NetworkGrads = std::vector<MlpGrads>;

// Single-instance result with tensors reshaped to feature rows.
struct Explained {
  Vector prediction;                // num_outputs
  Matrix explanation;               // d_raw x num_outputs
  std::vector<Matrix> trace;        // per layer, d_internal x c_l
};

enum class NetworkKind { kShallow, kDeep };

// Common surface of Shallow and Deep ShapNets. The last trace entry is the
// output explanation (including padding rows) and the prediction is its sum
// over features.
class ShapNet {
 public:
  virtual ~ShapNet() = default;

  virtual NetworkKind kind() const = 0;
  virtual int d_raw() const = 0;
  virtual int d_internal() const = 0;
  virtual int channels_in() const = 0;
  virtual int num_outputs() const = 0;
  // Channel count of each trace layer.
  virtual std::vector<int> trace_channels() const = 0;
  // d_raw x channels_in input reference.
  virtual const Matrix& reference() const = 0;

  virtual NetworkForward ForwardBatch(const Matrix& x,
                                      NetworkCache* cache) const = 0;

  // grad_prediction is batch x num_outputs. grad_trace, when given, holds
  // one seed per trace layer (empty matrices are skipped).
  virtual NetworkGrads Backward(const NetworkCache& cache,
                                const Matrix& grad_prediction,
                                const std::vector<Matrix>* grad_trace) const = 0;

  virtual std::vector<const Mlp*> inner_functions() const = 0;
  virtual std::vector<Mlp*> mutable_inner_functions() = 0;

  virtual std::unique_ptr<ShapNet> Clone() const = 0;

  int num_trace_layers() const {
    return static_cast<int>(trace_channels().size());
  }
  int num_parameters() const;
  Vector GetParameters() const;
  void SetParameters(const Vector& params);
  Vector FlattenGrads(const NetworkGrads& grads) const;

  // x is d_raw x channels_in.
  Explained Explain(const Matrix& x) const;
  // Rejects tensors whose reference differs from the network's.
  Explained Explain(const FeatureTensor& x) const;

  // Flattens d_raw x c rows into one batch row.
  static Matrix FlattenInstance(const Matrix& x);
};

// Per-layer construction parameters: output channels and inner hidden widths.
struct LayerSpec {
  int channels_out = 1;
  std::vector<int> hidden;
};

// One Shapley transform followed by a linear aggregation and a sum over
// features. Its explanation is the exact Shapley value of its prediction.
class ShallowShapNet : public ShapNet {
 public:
  // `aggregation` is C'' x C', C' the stacked module output channels.
  ShallowShapNet(int d, int c, Matrix reference,
                 std::vector<ShapleyModule> modules, Matrix aggregation);

  // Modules over `active_sets`, each mapping k * c inputs through `spec`.
  // The aggregation is the stacked identity (plain summation).
  static ShallowShapNet Random(int d, int c, Matrix reference,
                               const std::vector<std::vector<int>>& active_sets,
                               const LayerSpec& spec, Activation activation,
                               Rng& rng);

  // Stacked identity [I I ... I] for `num_modules` blocks of width c_out.
  static Matrix SummationAggregation(int num_modules, int c_out);

  NetworkKind kind() const override { return NetworkKind::kShallow; }
  int d_raw() const override { return d_; }
  int d_internal() const override { return d_; }
  int channels_in() const override { return c_; }
  int num_outputs() const override {
    return static_cast<int>(aggregation_.rows());
  }
  std::vector<int> trace_channels() const override { return {num_outputs()}; }
  const Matrix& reference() const override { return reference_; }

  NetworkForward ForwardBatch(const Matrix& x,
                              NetworkCache* cache) const override;
  NetworkGrads Backward(const NetworkCache& cache, const Matrix& grad_prediction,
                        const std::vector<Matrix>* grad_trace) const override;

  std::vector<const Mlp*> inner_functions() const override;
  std::vector<Mlp*> mutable_inner_functions() override;
  std::unique_ptr<ShapNet> Clone() const override {
    return std::make_unique<ShallowShapNet>(*this);
  }

  const std::vector<ShapleyModule>& modules() const { return modules_; }
  const Matrix& aggregation() const { return aggregation_; }

 private:
  Matrix GatherSlices(const Matrix& x, const ShapleyModule& module) const;

  int d_;
  int c_;
  Matrix reference_;
  std::vector<ShapleyModule> modules_;
  Matrix aggregation_;
  std::vector<int> block_offsets_;
};

struct ShapleyTransformLayer {
  int layer_index = 0;
  std::vector<std::pair<int, int>> pairs;
  std::vector<ShapleyModule> modules;  // modules[j] covers pairs[j]
  int channels_in = 0;
  int channels_out = 0;
};

// Cascade of disjoint-pair Shapley transforms wired by the butterfly
// schedule. Layers after the first explain against a zero reference.
class DeepShapNet : public ShapNet {
 public:
  DeepShapNet(int d_raw, Matrix reference,
              std::vector<ShapleyTransformLayer> layers);

  // layer_specs[l].channels_out gives c_{l+1}; c_0 is reference.cols().
  static DeepShapNet Random(int d_raw, Matrix reference,
                            const std::vector<LayerSpec>& layer_specs,
                            Activation activation, Rng& rng);

  NetworkKind kind() const override { return NetworkKind::kDeep; }
  int d_raw() const override { return d_raw_; }
  int d_internal() const override { return d_padded_; }
  int channels_in() const override {
    return static_cast<int>(reference_.cols());
  }
  int num_outputs() const override { return layers_.back().channels_out; }
  std::vector<int> trace_channels() const override;
  const Matrix& reference() const override { return reference_; }

  NetworkForward ForwardBatch(const Matrix& x,
                              NetworkCache* cache) const override;
  NetworkGrads Backward(const NetworkCache& cache, const Matrix& grad_prediction,
                        const std::vector<Matrix>* grad_trace) const override;

  std::vector<const Mlp*> inner_functions() const override;
  std::vector<Mlp*> mutable_inner_functions() override;
  std::unique_ptr<ShapNet> Clone() const override {
    return std::make_unique<DeepShapNet>(*this);
  }

  const std::vector<ShapleyTransformLayer>& layers() const { return layers_; }
  int num_layers() const { return static_cast<int>(layers_.size()); }
  int num_modules() const;
  // [c_0, c_1, ..., c_L]
  std::vector<int> channel_schedule() const;

  // Appends reference-valued padding columns: batch x (d_padded * c_0).
  Matrix PadBatch(const Matrix& x) const;

 private:
  int d_raw_;
  int d_padded_;
  Matrix reference_;  // d_raw x c_0
  std::vector<ShapleyTransformLayer> layers_;
};

}  // namespace shapnet

#endif  // SHAPNET_NETWORKS_H_
