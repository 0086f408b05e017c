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

#include "shapnet/core_math.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "shapnet/error.h"

namespace shapnet {
namespace {

void ApplyActivation(const Activation& act, const Matrix& pre, Matrix* out) {
  if (act.kind == ActivationKind::kReLU) {
    *out = pre.cwiseMax(0.0);
  } else {
    const double slope = act.slope;
    *out = pre.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
  }
}

// Multiplies `grad` in place by the activation derivative at `pre`.
void ApplyActivationGrad(const Activation& act, const Matrix& pre,
                         Matrix* grad) {
  const double negative = act.kind == ActivationKind::kReLU ? 0.0 : act.slope;
  *grad = (pre.array() > 0.0).select(grad->array(), negative * grad->array());
}

}  // namespace

void MlpGrads::SetZero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

Mlp::Mlp(std::vector<int> layer_dims, Activation activation)
    : layer_dims_(std::move(layer_dims)), activation_(activation) {
  Require(layer_dims_.size() >= 2, "Mlp needs at least input and output dims");
  for (int dim : layer_dims_) Require(dim >= 1, "Mlp layer dims must be >= 1");
  for (size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
    weights_.push_back(Matrix::Zero(layer_dims_[l + 1], layer_dims_[l]));
    biases_.push_back(Vector::Zero(layer_dims_[l + 1]));
  }
}

Mlp Mlp::Random(std::vector<int> layer_dims, Activation activation, Rng& rng) {
  Mlp mlp(std::move(layer_dims), activation);
  for (int l = 0; l < mlp.num_layers(); ++l) {
    const double bound = std::sqrt(1.0 / mlp.layer_dims_[l]);
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix& w = mlp.weights_[l];
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    for (Eigen::Index i = 0; i < mlp.biases_[l].size(); ++i) {
      mlp.biases_[l][i] = dist(rng);
    }
  }
  return mlp;
}

int Mlp::num_parameters() const {
  int n = 0;
  for (int l = 0; l < num_layers(); ++l) {
    n += static_cast<int>(weights_[l].size() + biases_[l].size());
  }
  return n;
}

void Mlp::CheckShapes() const {
  Require(weights_.size() + 1 == layer_dims_.size() &&
              biases_.size() == weights_.size(),
          "Mlp parameter count does not match layer_dims");
  for (int l = 0; l < num_layers(); ++l) {
    Require(weights_[l].rows() == layer_dims_[l + 1] &&
                weights_[l].cols() == layer_dims_[l] &&
                biases_[l].size() == layer_dims_[l + 1],
            "Mlp layer ", l, " has inconsistent parameter shapes");
  }
}

Matrix Mlp::Forward(const Matrix& input, MlpCache* cache) const {
  Require(input.cols() == input_dim(), "Mlp input dimension mismatch: expected ",
          input_dim(), ", got ", input.cols());
  if (cache != nullptr) {
    cache->inputs.resize(num_layers());
    cache->pre_activations.resize(num_layers());
  }
  Matrix current = input;
  for (int l = 0; l < num_layers(); ++l) {
    Matrix pre = current * weights_[l].transpose();
    pre.rowwise() += biases_[l].transpose();
    const bool last = l + 1 == num_layers();
    if (cache != nullptr) cache->inputs[l] = std::move(current);
    if (last) {
      current = pre;
    } else {
      ApplyActivation(activation_, pre, &current);
    }
    if (cache != nullptr) cache->pre_activations[l] = std::move(pre);
  }
  return current;
}

Vector Mlp::Forward(const Vector& input) const {
  Require(input.size() == input_dim(), "Mlp input dimension mismatch: expected ",
          input_dim(), ", got ", input.size());
  Matrix batch = input.transpose();
  return Forward(batch).row(0).transpose();
}

MlpGrads Mlp::ZeroGrads() const {
  MlpGrads grads;
  for (int l = 0; l < num_layers(); ++l) {
    grads.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    grads.biases.push_back(Vector::Zero(biases_[l].size()));
  }
  return grads;
}

Matrix Mlp::Backward(const MlpCache& cache, const Matrix& grad_output,
                     MlpGrads* grads) const {
  Require(static_cast<int>(cache.inputs.size()) == num_layers() &&
              static_cast<int>(cache.pre_activations.size()) == num_layers(),
          "stale Mlp cache: layer count mismatch");
  Require(grad_output.cols() == output_dim() &&
              grad_output.rows() == cache.inputs.front().rows(),
          "stale Mlp cache: grad_output shape ", grad_output.rows(), "x",
          grad_output.cols(), " does not match cached batch");
  if (grads != nullptr && grads->empty()) *grads = ZeroGrads();
  Matrix grad = grad_output;
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Matrix& pre = cache.pre_activations[l];
    Require(pre.cols() == weights_[l].rows() &&
                cache.inputs[l].cols() == weights_[l].cols(),
            "stale Mlp cache: layer ", l, " shape mismatch");
    if (l + 1 != num_layers()) ApplyActivationGrad(activation_, pre, &grad);
    if (grads != nullptr) {
      grads->weights[l].noalias() += grad.transpose() * cache.inputs[l];
      grads->biases[l] += grad.colwise().sum().transpose();
    }
    grad = grad * weights_[l];
  }
  return grad;
}

void Mlp::CopyParametersTo(double* out) const {
  for (int l = 0; l < num_layers(); ++l) {
    out = std::copy_n(weights_[l].data(), weights_[l].size(), out);
    out = std::copy_n(biases_[l].data(), biases_[l].size(), out);
  }
}

void Mlp::SetParametersFrom(const double* in) {
  for (int l = 0; l < num_layers(); ++l) {
    std::copy_n(in, weights_[l].size(), weights_[l].data());
    in += weights_[l].size();
    std::copy_n(in, biases_[l].size(), biases_[l].data());
    in += biases_[l].size();
  }
}

void CopyGradsTo(const MlpGrads& grads, double* out) {
  for (size_t l = 0; l < grads.weights.size(); ++l) {
    out = std::copy_n(grads.weights[l].data(), grads.weights[l].size(), out);
    out = std::copy_n(grads.biases[l].data(), grads.biases[l].size(), out);
  }
}

AdamState::AdamState(int num_parameters, AdamConfig config)
    : config(config),
      first_moment(Vector::Zero(num_parameters)),
      second_moment(Vector::Zero(num_parameters)) {}

void AdamStep(Vector& params, const Vector& grads, AdamState& state) {
  Require(params.size() == grads.size() &&
              params.size() == state.first_moment.size() &&
              params.size() == state.second_moment.size(),
          "AdamStep shape mismatch: params ", params.size(), ", grads ",
          grads.size(), ", state ", state.first_moment.size());
  Require(grads.allFinite(), "AdamStep received a non-finite gradient at step ",
          state.step_count + 1);
  const AdamConfig& c = state.config;
  ++state.step_count;
  state.first_moment = c.beta1 * state.first_moment + (1.0 - c.beta1) * grads;
  state.second_moment =
      c.beta2 * state.second_moment + (1.0 - c.beta2) * grads.cwiseAbs2();
  if (grads.isZero(0.0)) return;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  params.array() -=
      c.lr * (state.first_moment.array() / correction1) /
      ((state.second_moment.array() / correction2).sqrt() + c.epsilon);
}

}  // namespace shapnet
