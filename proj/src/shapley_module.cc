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

#include "shapnet/shapley_module.h"

#include <array>
#include <bit>
#include <utility>

#include "shapnet/error.h"

namespace shapnet {
namespace {

CoalitionWeightTable BuildTable(int k) {
  CoalitionWeightTable table;
  table.k = k;
  // C(k-1, s) built incrementally to stay exact in integers.
  long long binom = 1;
  for (int s = 0; s < k; ++s) {
    table.weight_by_size.push_back(1.0 / (static_cast<double>(k) * binom));
    binom = binom * (k - 1 - s) / (s + 1);
  }
  return table;
}

}  // namespace

ActiveSet ActiveSet::Make(std::vector<int> indices, int d, int k_max) {
  const int k = static_cast<int>(indices.size());
  Require(k >= 1 && k <= k_max, "active set size ", k, " outside [1, ", k_max,
          "]");
  for (int i = 0; i < k; ++i) {
    Require(indices[i] >= 0 && indices[i] < d, "active index ", indices[i],
            " outside [0, ", d, ")");
    Require(i == 0 || indices[i - 1] < indices[i],
            "active set indices must be strictly increasing");
  }
  return ActiveSet{std::move(indices)};
}

const CoalitionWeightTable& CoalitionWeights(int k) {
  Require(k >= 1 && k <= kMaxActiveSetSize, "coalition weights requested for k=",
          k, ", supported range is [1, ", kMaxActiveSetSize, "]");
  static const std::array<CoalitionWeightTable, kMaxActiveSetSize> tables = [] {
    std::array<CoalitionWeightTable, kMaxActiveSetSize> t;
    for (int k = 1; k <= kMaxActiveSetSize; ++k) t[k - 1] = BuildTable(k);
    return t;
  }();
  return tables[k - 1];
}

ShapleyModule::ShapleyModule(ActiveSet active_set, Mlp inner,
                             Vector reference_slice, int channels_in,
                             int channels_out)
    : active_set_(std::move(active_set)),
      inner_(std::move(inner)),
      reference_slice_(std::move(reference_slice)),
      channels_in_(channels_in),
      channels_out_(channels_out) {
  Require(k() >= 1 && k() <= kMaxActiveSetSize, "module active set size ", k(),
          " unsupported");
  Require(inner_.input_dim() == k() * channels_in_,
          "inner input dimension ", inner_.input_dim(), " != k * c = ",
          k() * channels_in_);
  Require(inner_.output_dim() == channels_out_, "inner output dimension ",
          inner_.output_dim(), " != c' = ", channels_out_);
  Require(reference_slice_.size() == k() * channels_in_,
          "reference slice has ", reference_slice_.size(), " values, expected ",
          k() * channels_in_);
}

Matrix ShapleyModule::Forward(const Matrix& x_slices, ModuleCache* cache) const {
  const int kk = k();
  const int c = channels_in_;
  const int c_out = channels_out_;
  const int n = num_coalitions();
  const Eigen::Index batch = x_slices.rows();
  Require(x_slices.cols() == kk * c, "module input has ", x_slices.cols(),
          " columns, expected ", kk * c);
  Require(x_slices.allFinite(), "module input is not finite");

  Matrix coalitions(batch * n, kk * c);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int mask = 0; mask < n; ++mask) {
      auto row = coalitions.row(b * n + mask);
      for (int p = 0; p < kk; ++p) {
        if ((mask >> p) & 1) {
          row.segment(p * c, c) = x_slices.row(b).segment(p * c, c);
        } else {
          row.segment(p * c, c) = reference_slice_.segment(p * c, c).transpose();
        }
      }
    }
  }

  Matrix outputs =
      inner_.Forward(coalitions, cache != nullptr ? &cache->inner : nullptr);
  const auto& weights = CoalitionWeights(kk).weight_by_size;
  Matrix attribution = Matrix::Zero(batch, kk * c_out);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::Index base = b * n;
    for (int p = 0; p < kk; ++p) {
      const int bit = 1 << p;
      auto phi = attribution.row(b).segment(p * c_out, c_out);
      for (int mask = 0; mask < n; ++mask) {
        if (mask & bit) continue;
        const double w = weights[std::popcount(static_cast<unsigned>(mask))];
        phi += w * (outputs.row(base + (mask | bit)) - outputs.row(base + mask));
      }
    }
  }
  if (cache != nullptr) {
    cache->coalition_outputs = std::move(outputs);
    cache->batch = static_cast<int>(batch);
  }
  return attribution;
}

Matrix ShapleyModule::Forward(const Vector& x_slice) const {
  Matrix batch = x_slice.transpose();
  Matrix flat = Forward(batch);
  return flat.reshaped<Eigen::RowMajor>(k(), channels_out_);
}

Matrix ShapleyModule::Backward(const ModuleCache& cache,
                               const Matrix& grad_attribution,
                               MlpGrads* grads) const {
  const int kk = k();
  const int c = channels_in_;
  const int c_out = channels_out_;
  const int n = num_coalitions();
  const Eigen::Index batch = grad_attribution.rows();
  Require(grad_attribution.cols() == kk * c_out,
          "module grad_attribution has ", grad_attribution.cols(),
          " columns, expected ", kk * c_out);
  Require(cache.batch == batch && cache.coalition_outputs.rows() == batch * n,
          "stale module cache: batch ", cache.batch, " vs gradient batch ",
          batch);

  const auto& weights = CoalitionWeights(kk).weight_by_size;
  Matrix grad_outputs = Matrix::Zero(batch * n, c_out);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const Eigen::Index base = b * n;
    for (int p = 0; p < kk; ++p) {
      const int bit = 1 << p;
      const auto g = grad_attribution.row(b).segment(p * c_out, c_out);
      for (int mask = 0; mask < n; ++mask) {
        if (mask & bit) continue;
        const double w = weights[std::popcount(static_cast<unsigned>(mask))];
        grad_outputs.row(base + (mask | bit)) += w * g;
        grad_outputs.row(base + mask) -= w * g;
      }
    }
  }

  const Matrix grad_coalitions = inner_.Backward(cache.inner, grad_outputs, grads);
  Matrix grad_x = Matrix::Zero(batch, kk * c);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int mask = 0; mask < n; ++mask) {
      for (int p = 0; p < kk; ++p) {
        // Absent positions saw the constant reference.
        if (!((mask >> p) & 1)) continue;
        grad_x.row(b).segment(p * c, c) +=
            grad_coalitions.row(b * n + mask).segment(p * c, c);
      }
    }
  }
  return grad_x;
}

}  // namespace shapnet
