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

#ifndef SHAPNET_CORE_MATH_H_
#define SHAPNET_CORE_MATH_H_

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace shapnet {

// Dense row-major storage; rows index instances (or coalitions), columns
// index features.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Rng = std::mt19937_64;

enum class ActivationKind { kReLU, kLeakyReLU };

struct Activation {
  ActivationKind kind = ActivationKind::kReLU;
  double slope = 0.01;  // only used by kLeakyReLU

  static Activation ReLU() { return {ActivationKind::kReLU, 0.0}; }
  static Activation LeakyReLU(double slope = 0.01) {
    return {ActivationKind::kLeakyReLU, slope};
  }
};

// Per-layer tensors retained by Mlp::Forward for the backward pass.
struct MlpCache {
  // inputs[l] is the batch fed into layer l (inputs[0] is the raw input).
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre_activations;
};

// Parameter-shaped gradient accumulators.
struct MlpGrads {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  void SetZero();
  bool empty() const { return weights.empty(); }
};

// Fully connected network with an affine output layer. Weight matrix l has
// shape layer_dims[l+1] x layer_dims[l].
class Mlp {
 public:
  Mlp() = default;
  // Zero-initialized parameters.
  Mlp(std::vector<int> layer_dims, Activation activation);

  // Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) for weights and biases.
  static Mlp Random(std::vector<int> layer_dims, Activation activation,
                    Rng& rng);

  int input_dim() const { return layer_dims_.front(); }
  int output_dim() const { return layer_dims_.back(); }
  int num_layers() const { return static_cast<int>(weights_.size()); }
  int num_parameters() const;

  const std::vector<int>& layer_dims() const { return layer_dims_; }
  const Activation& activation() const { return activation_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }
  std::vector<Matrix>& mutable_weights() { return weights_; }
  std::vector<Vector>& mutable_biases() { return biases_; }

  // Batched forward: one instance per row. `cache` may be null.
  Matrix Forward(const Matrix& input, MlpCache* cache = nullptr) const;
  Vector Forward(const Vector& input) const;

  // Returns d(grad_output . output)/d(input) and adds parameter gradients
  // into `grads` (which is shaped on first use). `grads` may be null.
  Matrix Backward(const MlpCache& cache, const Matrix& grad_output,
                  MlpGrads* grads) const;

  MlpGrads ZeroGrads() const;

  // Flat parameter layout: for each layer, weights row-major then biases.
  void CopyParametersTo(double* out) const;
  void SetParametersFrom(const double* in);

 private:
  void CheckShapes() const;

  std::vector<int> layer_dims_;
  Activation activation_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

// Flattens gradients with the same layout as Mlp::CopyParametersTo.
void CopyGradsTo(const MlpGrads& grads, double* out);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Vector first_moment;
  Vector second_moment;
  int64_t step_count = 0;

  AdamState() = default;
  AdamState(int num_parameters, AdamConfig config);
};

// One bias-corrected Adam update in place. Throws on non-finite gradients or
// shape disagreement. An all-zero gradient leaves `params` untouched.
void AdamStep(Vector& params, const Vector& grads, AdamState& state);

}  // namespace shapnet

#endif  // SHAPNET_CORE_MATH_H_
