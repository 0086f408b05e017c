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

#include "shapnet/networks.h"

#include <bit>
#include <utility>

#include "shapnet/error.h"

namespace shapnet {

FeatureTensor FeatureTensor::Make(Matrix values, Matrix reference) {
  Require(values.rows() == reference.rows() && values.cols() == reference.cols(),
          "feature values ", values.rows(), "x", values.cols(),
          " and reference ", reference.rows(), "x", reference.cols(),
          " differ in shape");
  Require(values.allFinite() && reference.allFinite(),
          "feature tensor contains non-finite entries");
  return FeatureTensor{std::move(values), std::move(reference)};
}

int NextPowerOfTwo(int d) {
  Require(d >= 1, "feature count must be positive");
  return static_cast<int>(std::bit_ceil(static_cast<unsigned>(d)));
}

FeatureTensor PadFeatures(const FeatureTensor& x, int d_padded) {
  Require(d_padded >= x.d(), "cannot pad ", x.d(), " features down to ",
          d_padded);
  Require(std::has_single_bit(static_cast<unsigned>(d_padded)),
          "padded feature count ", d_padded, " is not a power of two");
  FeatureTensor out;
  out.values = Matrix::Zero(d_padded, x.c());
  out.reference = Matrix::Zero(d_padded, x.c());
  out.values.topRows(x.d()) = x.values;
  out.reference.topRows(x.d()) = x.reference;
  return out;
}

std::vector<std::pair<int, int>> ButterflyPairs(int d_padded, int layer_index) {
  Require(d_padded >= 2 && std::has_single_bit(static_cast<unsigned>(d_padded)),
          "butterfly pairing needs a power of two >= 2, got ", d_padded);
  Require(layer_index >= 0, "negative layer index");
  const int log2d = std::countr_zero(static_cast<unsigned>(d_padded));
  const int stride = 1 << (layer_index % log2d);
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < d_padded; ++i) {
    const int j = i ^ stride;
    if (i < j) pairs.emplace_back(i, j);
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// ShapNet

int ShapNet::num_parameters() const {
  int n = 0;
  for (const Mlp* mlp : inner_functions()) n += mlp->num_parameters();
  return n;
}

Vector ShapNet::GetParameters() const {
  Vector params(num_parameters());
  double* out = params.data();
  for (const Mlp* mlp : inner_functions()) {
    mlp->CopyParametersTo(out);
    out += mlp->num_parameters();
  }
  return params;
}

void ShapNet::SetParameters(const Vector& params) {
  Require(params.size() == num_parameters(), "parameter vector has ",
          params.size(), " entries, network has ", num_parameters());
  const double* in = params.data();
  for (Mlp* mlp : mutable_inner_functions()) {
    mlp->SetParametersFrom(in);
    in += mlp->num_parameters();
  }
}

Vector ShapNet::FlattenGrads(const NetworkGrads& grads) const {
  const auto inner = inner_functions();
  Require(grads.size() == inner.size(), "gradient list has ", grads.size(),
          " entries, network has ", inner.size(), " inner functions");
  Vector flat(num_parameters());
  double* out = flat.data();
  for (size_t j = 0; j < inner.size(); ++j) {
    if (grads[j].empty()) {
      std::fill_n(out, inner[j]->num_parameters(), 0.0);
    } else {
      CopyGradsTo(grads[j], out);
    }
    out += inner[j]->num_parameters();
  }
  return flat;
}

Matrix ShapNet::FlattenInstance(const Matrix& x) {
  Matrix row(1, x.size());
  row.row(0) = x.reshaped<Eigen::RowMajor>().transpose();
  return row;
}

Explained ShapNet::Explain(const Matrix& x) const {
  Require(x.rows() == d_raw() && x.cols() == channels_in(), "input is ",
          x.rows(), "x", x.cols(), ", network expects ", d_raw(), "x",
          channels_in());
  const NetworkForward fwd = ForwardBatch(FlattenInstance(x), nullptr);
  Explained out;
  out.prediction = fwd.prediction.row(0).transpose();
  const auto channels = trace_channels();
  for (size_t l = 0; l < fwd.trace.size(); ++l) {
    out.trace.push_back(
        fwd.trace[l].row(0).reshaped<Eigen::RowMajor>(d_internal(), channels[l]));
  }
  out.explanation = out.trace.back().topRows(d_raw());
  return out;
}

Explained ShapNet::Explain(const FeatureTensor& x) const {
  Require(x.reference.rows() == reference().rows() &&
              x.reference.cols() == reference().cols() &&
              x.reference == reference(),
          "feature tensor reference does not match the network reference");
  return Explain(x.values);
}

// ---------------------------------------------------------------------------
// ShallowShapNet

ShallowShapNet::ShallowShapNet(int d, int c, Matrix reference,
                               std::vector<ShapleyModule> modules,
                               Matrix aggregation)
    : d_(d),
      c_(c),
      reference_(std::move(reference)),
      modules_(std::move(modules)),
      aggregation_(std::move(aggregation)) {
  Require(d_ >= 1 && c_ >= 1, "shallow net needs d, c >= 1");
  Require(reference_.rows() == d_ && reference_.cols() == c_,
          "shallow reference must be d x c");
  Require(!modules_.empty(), "shallow net needs at least one module");
  std::vector<bool> covered(d_, false);
  int offset = 0;
  for (const ShapleyModule& m : modules_) {
    Require(m.channels_in() == c_, "module channels_in ", m.channels_in(),
            " != ", c_);
    for (int p = 0; p < m.k(); ++p) {
      const int i = m.active_set().indices[p];
      Require(i >= 0 && i < d_, "module index ", i, " out of range");
      covered[i] = true;
      Require(m.reference_slice().segment(p * c_, c_).transpose() ==
                  reference_.row(i),
              "module reference slice disagrees with the network reference at "
              "feature ",
              i);
    }
    block_offsets_.push_back(offset);
    offset += m.channels_out();
  }
  for (int i = 0; i < d_; ++i) {
    Require(covered[i], "feature ", i, " is not covered by any module");
  }
  Require(aggregation_.cols() == offset, "aggregation has ",
          aggregation_.cols(), " columns, modules emit ", offset, " channels");
  Require(aggregation_.rows() >= 1, "aggregation needs at least one row");
}

Matrix ShallowShapNet::SummationAggregation(int num_modules, int c_out) {
  Matrix a = Matrix::Zero(c_out, num_modules * c_out);
  for (int j = 0; j < num_modules; ++j) {
    a.middleCols(j * c_out, c_out) = Matrix::Identity(c_out, c_out);
  }
  return a;
}

ShallowShapNet ShallowShapNet::Random(
    int d, int c, Matrix reference,
    const std::vector<std::vector<int>>& active_sets, const LayerSpec& spec,
    Activation activation, Rng& rng) {
  std::vector<ShapleyModule> modules;
  for (const auto& indices : active_sets) {
    ActiveSet set = ActiveSet::Make(indices, d);
    std::vector<int> dims = {set.size() * c};
    dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
    dims.push_back(spec.channels_out);
    Vector ref_slice(set.size() * c);
    for (int p = 0; p < set.size(); ++p) {
      ref_slice.segment(p * c, c) = reference.row(set.indices[p]).transpose();
    }
    modules.emplace_back(std::move(set), Mlp::Random(dims, activation, rng),
                         std::move(ref_slice), c, spec.channels_out);
  }
  Matrix agg = SummationAggregation(static_cast<int>(modules.size()),
                                    spec.channels_out);
  return ShallowShapNet(d, c, std::move(reference), std::move(modules),
                        std::move(agg));
}

Matrix ShallowShapNet::GatherSlices(const Matrix& x,
                                    const ShapleyModule& module) const {
  Matrix slices(x.rows(), module.k() * c_);
  for (int p = 0; p < module.k(); ++p) {
    slices.middleCols(p * c_, c_) =
        x.middleCols(module.active_set().indices[p] * c_, c_);
  }
  return slices;
}

NetworkForward ShallowShapNet::ForwardBatch(const Matrix& x,
                                            NetworkCache* cache) const {
  Require(x.cols() == d_ * c_, "shallow input has ", x.cols(),
          " columns, expected ", d_ * c_);
  const int out = num_outputs();
  Matrix explanation = Matrix::Zero(x.rows(), d_ * out);
  if (cache != nullptr) {
    cache->modules.assign(1, std::vector<ModuleCache>(modules_.size()));
    cache->batch = static_cast<int>(x.rows());
  }
  for (size_t j = 0; j < modules_.size(); ++j) {
    const ShapleyModule& m = modules_[j];
    const Matrix attribution = m.Forward(
        GatherSlices(x, m), cache != nullptr ? &cache->modules[0][j] : nullptr);
    const auto block = aggregation_.middleCols(block_offsets_[j], m.channels_out());
    for (int p = 0; p < m.k(); ++p) {
      const int i = m.active_set().indices[p];
      explanation.middleCols(i * out, out).noalias() +=
          attribution.middleCols(p * m.channels_out(), m.channels_out()) *
          block.transpose();
    }
  }
  NetworkForward fwd;
  fwd.prediction = Matrix::Zero(x.rows(), out);
  for (int i = 0; i < d_; ++i) {
    fwd.prediction += explanation.middleCols(i * out, out);
  }
  fwd.trace.push_back(std::move(explanation));
  return fwd;
}

NetworkGrads ShallowShapNet::Backward(const NetworkCache& cache,
                                      const Matrix& grad_prediction,
                                      const std::vector<Matrix>* grad_trace) const {
  Require(cache.modules.size() == 1 && cache.modules[0].size() == modules_.size(),
          "missing or stale shallow network cache");
  const int out = num_outputs();
  Require(grad_prediction.rows() == cache.batch && grad_prediction.cols() == out,
          "grad_prediction shape mismatch");
  Matrix grad_expl = grad_prediction.replicate(1, d_);
  if (grad_trace != nullptr && !grad_trace->empty() &&
      (*grad_trace)[0].size() > 0) {
    Require((*grad_trace)[0].rows() == cache.batch &&
                (*grad_trace)[0].cols() == d_ * out,
            "grad_trace shape mismatch");
    grad_expl += (*grad_trace)[0];
  }
  NetworkGrads grads(modules_.size());
  for (size_t j = 0; j < modules_.size(); ++j) {
    const ShapleyModule& m = modules_[j];
    const int c_out = m.channels_out();
    const auto block = aggregation_.middleCols(block_offsets_[j], c_out);
    Matrix grad_attr(cache.batch, m.k() * c_out);
    for (int p = 0; p < m.k(); ++p) {
      const int i = m.active_set().indices[p];
      grad_attr.middleCols(p * c_out, c_out).noalias() =
          grad_expl.middleCols(i * out, out) * block;
    }
    m.Backward(cache.modules[0][j], grad_attr, &grads[j]);
  }
  return grads;
}

std::vector<const Mlp*> ShallowShapNet::inner_functions() const {
  std::vector<const Mlp*> out;
  for (const auto& m : modules_) out.push_back(&m.inner());
  return out;
}

std::vector<Mlp*> ShallowShapNet::mutable_inner_functions() {
  std::vector<Mlp*> out;
  for (auto& m : modules_) out.push_back(&m.mutable_inner());
  return out;
}

// ---------------------------------------------------------------------------
// DeepShapNet

DeepShapNet::DeepShapNet(int d_raw, Matrix reference,
                         std::vector<ShapleyTransformLayer> layers)
    : d_raw_(d_raw),
      d_padded_(NextPowerOfTwo(std::max(d_raw, 2))),
      reference_(std::move(reference)),
      layers_(std::move(layers)) {
  Require(d_raw_ >= 2, "deep net needs at least two features");
  Require(reference_.rows() == d_raw_ && reference_.cols() >= 1,
          "deep reference must be d_raw x c_0");
  Require(!layers_.empty(), "deep net needs at least one layer");
  int c = static_cast<int>(reference_.cols());
  for (size_t l = 0; l < layers_.size(); ++l) {
    ShapleyTransformLayer& layer = layers_[l];
    Require(layer.layer_index == static_cast<int>(l), "layer ", l,
            " carries index ", layer.layer_index);
    Require(layer.pairs == ButterflyPairs(d_padded_, static_cast<int>(l)),
            "layer ", l, " does not follow the butterfly schedule");
    Require(layer.modules.size() == layer.pairs.size(), "layer ", l, " has ",
            layer.modules.size(), " modules for ", layer.pairs.size(), " pairs");
    Require(layer.channels_in == c, "layer ", l, " expects ", layer.channels_in,
            " channels, previous layer emits ", c);
    for (size_t j = 0; j < layer.modules.size(); ++j) {
      const ShapleyModule& m = layer.modules[j];
      const auto [a, b] = layer.pairs[j];
      Require(m.active_set().indices == std::vector<int>{a, b}, "layer ", l,
              " module ", j, " active set does not match its pair");
      Require(m.channels_in() == layer.channels_in &&
                  m.channels_out() == layer.channels_out,
              "layer ", l, " module ", j, " channel mismatch");
      Vector expected(2 * c);
      if (l == 0) {
        for (int p = 0; p < 2; ++p) {
          const int i = p == 0 ? a : b;
          expected.segment(p * c, c) = i < d_raw_
                                           ? Vector(reference_.row(i).transpose())
                                           : Vector::Zero(c);
        }
      } else {
        expected.setZero();
      }
      Require(m.reference_slice() == expected, "layer ", l, " module ", j,
              " reference slice is inconsistent (layers after the first use a "
              "zero reference)");
    }
    c = layer.channels_out;
  }
}

DeepShapNet DeepShapNet::Random(int d_raw, Matrix reference,
                                const std::vector<LayerSpec>& layer_specs,
                                Activation activation, Rng& rng) {
  Require(d_raw >= 2, "deep net needs at least two features");
  Require(reference.rows() == d_raw, "reference has ", reference.rows(),
          " rows, expected ", d_raw);
  Require(!layer_specs.empty(), "deep net needs at least one layer");
  const int d_padded = NextPowerOfTwo(d_raw);
  std::vector<ShapleyTransformLayer> layers;
  int c = static_cast<int>(reference.cols());
  for (size_t l = 0; l < layer_specs.size(); ++l) {
    ShapleyTransformLayer layer;
    layer.layer_index = static_cast<int>(l);
    layer.pairs = ButterflyPairs(d_padded, static_cast<int>(l));
    layer.channels_in = c;
    layer.channels_out = layer_specs[l].channels_out;
    std::vector<int> dims = {2 * c};
    dims.insert(dims.end(), layer_specs[l].hidden.begin(),
                layer_specs[l].hidden.end());
    dims.push_back(layer.channels_out);
    for (const auto& [a, b] : layer.pairs) {
      Vector ref_slice = Vector::Zero(2 * c);
      if (l == 0) {
        if (a < d_raw) ref_slice.head(c) = reference.row(a).transpose();
        if (b < d_raw) ref_slice.tail(c) = reference.row(b).transpose();
      }
      layer.modules.emplace_back(ActiveSet::Make({a, b}, d_padded),
                                 Mlp::Random(dims, activation, rng),
                                 std::move(ref_slice), c, layer.channels_out);
    }
    c = layer.channels_out;
    layers.push_back(std::move(layer));
  }
  return DeepShapNet(d_raw, std::move(reference), std::move(layers));
}

std::vector<int> DeepShapNet::trace_channels() const {
  std::vector<int> out;
  for (const auto& layer : layers_) out.push_back(layer.channels_out);
  return out;
}

std::vector<int> DeepShapNet::channel_schedule() const {
  std::vector<int> out = {channels_in()};
  for (const auto& layer : layers_) out.push_back(layer.channels_out);
  return out;
}

int DeepShapNet::num_modules() const {
  int n = 0;
  for (const auto& layer : layers_) n += static_cast<int>(layer.modules.size());
  return n;
}

Matrix DeepShapNet::PadBatch(const Matrix& x) const {
  const int c = channels_in();
  Require(x.cols() == d_raw_ * c, "deep input has ", x.cols(),
          " columns, expected ", d_raw_ * c);
  if (d_padded_ == d_raw_) return x;
  Matrix padded = Matrix::Zero(x.rows(), d_padded_ * c);
  padded.leftCols(d_raw_ * c) = x;
  return padded;
}

NetworkForward DeepShapNet::ForwardBatch(const Matrix& x,
                                         NetworkCache* cache) const {
  const Eigen::Index batch = x.rows();
  Matrix current = PadBatch(x);
  if (cache != nullptr) {
    cache->modules.assign(layers_.size(), {});
    cache->batch = static_cast<int>(batch);
  }
  NetworkForward fwd;
  for (size_t l = 0; l < layers_.size(); ++l) {
    const ShapleyTransformLayer& layer = layers_[l];
    const int c_in = layer.channels_in;
    const int c_out = layer.channels_out;
    if (cache != nullptr) cache->modules[l].resize(layer.modules.size());
    Matrix next(batch, d_padded_ * c_out);
    Matrix slice(batch, 2 * c_in);
    for (size_t j = 0; j < layer.modules.size(); ++j) {
      const auto [a, b] = layer.pairs[j];
      slice.leftCols(c_in) = current.middleCols(a * c_in, c_in);
      slice.rightCols(c_in) = current.middleCols(b * c_in, c_in);
      const Matrix attribution = layer.modules[j].Forward(
          slice, cache != nullptr ? &cache->modules[l][j] : nullptr);
      next.middleCols(a * c_out, c_out) = attribution.leftCols(c_out);
      next.middleCols(b * c_out, c_out) = attribution.rightCols(c_out);
    }
    fwd.trace.push_back(next);
    current = std::move(next);
  }
  const int out = num_outputs();
  fwd.prediction = Matrix::Zero(batch, out);
  for (int i = 0; i < d_padded_; ++i) {
    fwd.prediction += current.middleCols(i * out, out);
  }
  return fwd;
}

NetworkGrads DeepShapNet::Backward(const NetworkCache& cache,
                                   const Matrix& grad_prediction,
                                   const std::vector<Matrix>* grad_trace) const {
  Require(cache.modules.size() == layers_.size(),
          "missing or stale deep network cache");
  const int out = num_outputs();
  Require(grad_prediction.rows() == cache.batch && grad_prediction.cols() == out,
          "grad_prediction shape mismatch");
  if (grad_trace != nullptr && !grad_trace->empty()) {
    Require(grad_trace->size() == layers_.size(), "grad_trace has ",
            grad_trace->size(), " layers, network has ", layers_.size());
  }
  auto seed = [&](size_t l) -> const Matrix* {
    if (grad_trace == nullptr || grad_trace->empty()) return nullptr;
    const Matrix& g = (*grad_trace)[l];
    if (g.size() == 0) return nullptr;
    Require(g.rows() == cache.batch &&
                g.cols() == d_padded_ * layers_[l].channels_out,
            "grad_trace layer ", l, " shape mismatch");
    return &g;
  };

  std::vector<size_t> first_inner(layers_.size(), 0);
  size_t total = 0;
  for (size_t l = 0; l < layers_.size(); ++l) {
    first_inner[l] = total;
    total += layers_[l].modules.size();
  }
  NetworkGrads grads(total);

  Matrix grad_current = grad_prediction.replicate(1, d_padded_);
  if (const Matrix* g = seed(layers_.size() - 1)) grad_current += *g;
  for (size_t l = layers_.size(); l-- > 0;) {
    const ShapleyTransformLayer& layer = layers_[l];
    Require(cache.modules[l].size() == layer.modules.size(),
            "stale deep network cache at layer ", l);
    const int c_in = layer.channels_in;
    const int c_out = layer.channels_out;
    Matrix grad_prev;
    if (l > 0) grad_prev = Matrix::Zero(cache.batch, d_padded_ * c_in);
    Matrix grad_attr(cache.batch, 2 * c_out);
    for (size_t j = 0; j < layer.modules.size(); ++j) {
      const auto [a, b] = layer.pairs[j];
      grad_attr.leftCols(c_out) = grad_current.middleCols(a * c_out, c_out);
      grad_attr.rightCols(c_out) = grad_current.middleCols(b * c_out, c_out);
      const Matrix grad_x = layer.modules[j].Backward(
          cache.modules[l][j], grad_attr, &grads[first_inner[l] + j]);
      if (l > 0) {
        grad_prev.middleCols(a * c_in, c_in) += grad_x.leftCols(c_in);
        grad_prev.middleCols(b * c_in, c_in) += grad_x.rightCols(c_in);
      }
    }
    if (l > 0) {
      if (const Matrix* g = seed(l - 1)) grad_prev += *g;
      grad_current = std::move(grad_prev);
    }
  }
  return grads;
}

std::vector<const Mlp*> DeepShapNet::inner_functions() const {
  std::vector<const Mlp*> out;
  for (const auto& layer : layers_) {
    for (const auto& m : layer.modules) out.push_back(&m.inner());
  }
  return out;
}

std::vector<Mlp*> DeepShapNet::mutable_inner_functions() {
  std::vector<Mlp*> out;
  for (auto& layer : layers_) {
    for (auto& m : layer.modules) out.push_back(&m.mutable_inner());
  }
  return out;
}

}  // namespace shapnet
