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

#include <cmath>
#include <vector>

#include "gtest/gtest.h"
#include "shapnet/error.h"
#include "test_util.h"

namespace shapnet {
namespace {

using ::shapnet::testing::FiniteDifferenceGradient;
using ::shapnet::testing::MaxRelativeError;
using ::shapnet::testing::RandomVector;

// Inner function f(x) = w . x with a single affine layer.
ShapleyModule LinearModule(const std::vector<double>& w) {
  const int k = static_cast<int>(w.size());
  Mlp mlp({k, 1}, Activation::ReLU());
  for (int p = 0; p < k; ++p) mlp.mutable_weights()[0](0, p) = w[p];
  std::vector<int> idx(k);
  for (int p = 0; p < k; ++p) idx[p] = p;
  return ShapleyModule(ActiveSet::Make(idx, k), std::move(mlp),
                       Vector::Zero(k), 1, 1);
}

// Enumerates the four coalitions of f(x1, x2) = x1 * x2 with reference 0.
Matrix ProductAttribution(double x1, double x2) {
  const double v00 = 0.0, v10 = 0.0, v01 = 0.0, v11 = x1 * x2;
  Matrix phi(2, 1);
  phi << 0.5 * (v10 - v00) + 0.5 * (v11 - v01),
      0.5 * (v01 - v00) + 0.5 * (v11 - v10);
  return phi;
}

ShapleyModule RandomModule(int k, int c, int c_out, Rng& rng,
                           std::vector<int> hidden = {8}) {
  std::vector<int> dims = {k * c};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(c_out);
  std::vector<int> idx(k);
  for (int p = 0; p < k; ++p) idx[p] = p;
  return ShapleyModule(ActiveSet::Make(idx, k),
                       Mlp::Random(dims, Activation::LeakyReLU(0.1), rng),
                       RandomVector(k * c, rng), c, c_out);
}

// Brute-force Shapley values of the module's inner function by listing every
// subset S of the other positions explicitly with factorial weights.
Matrix BruteForce(const ShapleyModule& m, const Vector& x) {
  const int k = m.k();
  const int c = m.channels_in();
  auto masked = [&](int mask) {
    Vector z = m.reference_slice();
    for (int p = 0; p < k; ++p) {
      if ((mask >> p) & 1) z.segment(p * c, c) = x.segment(p * c, c);
    }
    return m.EvaluateInner(z);
  };
  auto factorial = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  Matrix phi = Matrix::Zero(k, m.channels_out());
  for (int i = 0; i < k; ++i) {
    for (int mask = 0; mask < (1 << k); ++mask) {
      if ((mask >> i) & 1) continue;
      int s = 0;
      for (int p = 0; p < k; ++p) s += (mask >> p) & 1;
      const double w = factorial(s) * factorial(k - s - 1) / factorial(k);
      phi.row(i) += w * (masked(mask | (1 << i)) - masked(mask)).transpose();
    }
  }
  return phi;
}

TEST(CoalitionWeightsTest, KnownTables) {
  EXPECT_EQ(CoalitionWeights(1).weight_by_size, std::vector<double>({1.0}));
  EXPECT_EQ(CoalitionWeights(2).weight_by_size, std::vector<double>({0.5, 0.5}));
  const auto& k3 = CoalitionWeights(3).weight_by_size;
  ASSERT_EQ(k3.size(), 3u);
  EXPECT_DOUBLE_EQ(k3[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(k3[1], 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(k3[2], 1.0 / 3.0);
}

TEST(CoalitionWeightsTest, WeightsSumToOne) {
  for (int k = 1; k <= kMaxActiveSetSize; ++k) {
    const auto& w = CoalitionWeights(k).weight_by_size;
    double total = 0.0;
    double binom = 1.0;
    for (int s = 0; s < k; ++s) {
      total += binom * w[s];
      binom = binom * (k - 1 - s) / (s + 1);
    }
    EXPECT_NEAR(total, 1.0, 1e-15) << "k=" << k;
  }
}

TEST(CoalitionWeightsTest, RejectsOutOfRange) {
  EXPECT_THROW(CoalitionWeights(0), Error);
  EXPECT_THROW(CoalitionWeights(kMaxActiveSetSize + 1), Error);
}

TEST(ActiveSetTest, Validation) {
  EXPECT_NO_THROW(ActiveSet::Make({0, 3}, 4));
  EXPECT_THROW(ActiveSet::Make({}, 4), Error);
  EXPECT_THROW(ActiveSet::Make({1, 1}, 4), Error);
  EXPECT_THROW(ActiveSet::Make({2, 1}, 4), Error);
  EXPECT_THROW(ActiveSet::Make({0, 4}, 4), Error);
  EXPECT_THROW(ActiveSet::Make({0, 1, 2, 3, 4}, 8), Error);
}

TEST(ShapleyModuleTest, AdditiveFunctionEarnsOwnTerms) {
  const ShapleyModule m = LinearModule({1.0, 2.0});
  const Matrix phi = m.Forward(Vector(Vector::Ones(2)));
  EXPECT_DOUBLE_EQ(phi(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(phi(1, 0), 2.0);
}

TEST(ShapleyModuleTest, ProductSplitsEvenly) {
  // A ReLU net cannot represent x1 * x2 everywhere, but g below agrees with
  // the product on all four coalitions of (2, 3) against reference 0.
  const Matrix expected = ProductAttribution(2.0, 3.0);
  EXPECT_DOUBLE_EQ(expected(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(expected(1, 0), 3.0);

  // g(x1, x2) = relu(3 x1 + 2 x2 - 6): g(0,0)=g(2,0)=g(0,3)=0, g(2,3)=6.
  Mlp mlp({2, 1, 1}, Activation::ReLU());
  mlp.mutable_weights()[0] << 3.0, 2.0;
  mlp.mutable_biases()[0] << -6.0;
  mlp.mutable_weights()[1] << 1.0;
  ShapleyModule m(ActiveSet::Make({0, 1}, 2), std::move(mlp), Vector::Zero(2),
                  1, 1);
  Vector x(2);
  x << 2.0, 3.0;
  const Matrix phi = m.Forward(x);
  EXPECT_DOUBLE_EQ(phi(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(phi(1, 0), 3.0);
}

TEST(ShapleyModuleTest, InputAtReferenceGivesZero) {
  Rng rng(21);
  for (int k = 1; k <= kMaxActiveSetSize; ++k) {
    const ShapleyModule m = RandomModule(k, 2, 3, rng);
    const Matrix phi = m.Forward(Vector(m.reference_slice()));
    EXPECT_TRUE(phi.isZero(0.0)) << "k=" << k;
  }
}

TEST(ShapleyModuleTest, MatchesFactorialBruteForce) {
  Rng rng(22);
  for (int k = 1; k <= kMaxActiveSetSize; ++k) {
    for (int trial = 0; trial < 5; ++trial) {
      const ShapleyModule m = RandomModule(k, 2, 3, rng, {6, 5});
      const Vector x = RandomVector(k * 2, rng);
      const Matrix phi = m.Forward(x);
      EXPECT_LT((phi - BruteForce(m, x)).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(ShapleyModuleTest, EfficiencyHolds) {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % kMaxActiveSetSize;
    const ShapleyModule m = RandomModule(k, 1 + trial % 3, 2, rng);
    const Vector x = RandomVector(m.k() * m.channels_in(), rng, 2.0);
    const Matrix phi = m.Forward(x);
    const Vector gap = phi.colwise().sum().transpose() -
                       (m.EvaluateInner(x) - m.EvaluateInner(m.reference_slice()));
    EXPECT_LE(gap.cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(ShapleyModuleTest, MissingnessIsExact) {
  Rng rng(24);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 1 + trial % kMaxActiveSetSize;
    const int c = 1 + trial % 3;
    const ShapleyModule m = RandomModule(k, c, 3, rng, {7});
    Vector x = RandomVector(k * c, rng);
    const int p = trial % k;
    x.segment(p * c, c) = m.reference_slice().segment(p * c, c);
    const Matrix phi = m.Forward(x);
    EXPECT_TRUE(phi.row(p).isZero(0.0)) << "trial " << trial;
  }
}

TEST(ShapleyModuleTest, SymmetryForSymmetricInner) {
  // Tied first-layer weights make f symmetric in positions 0 and 1.
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    Mlp mlp = Mlp::Random({3, 6, 2}, Activation::ReLU(), rng);
    mlp.mutable_weights()[0].col(1) = mlp.weights()[0].col(0);
    Vector ref = RandomVector(3, rng);
    ref[1] = ref[0];
    ShapleyModule m(ActiveSet::Make({0, 1, 2}, 3), std::move(mlp), ref, 1, 2);
    Vector x = RandomVector(3, rng);
    x[1] = x[0];
    const Matrix phi = m.Forward(x);
    EXPECT_LE((phi.row(0) - phi.row(1)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ShapleyModuleTest, DummyPositionGetsZero) {
  Rng rng(26);
  Mlp mlp = Mlp::Random({3, 6, 2}, Activation::ReLU(), rng);
  mlp.mutable_weights()[0].col(2).setZero();
  ShapleyModule m(ActiveSet::Make({0, 1, 2}, 3), std::move(mlp),
                  RandomVector(3, rng), 1, 2);
  const Matrix phi = m.Forward(RandomVector(3, rng));
  EXPECT_TRUE(phi.row(2).isZero(0.0));
}

TEST(ShapleyModuleTest, LinearInInnerFunction) {
  // a*f + b*g is realized by one Mlp stacking f and g's hidden units.
  Rng rng(27);
  const double a = 1.7, b = -0.6;
  Mlp f = Mlp::Random({2, 5, 1}, Activation::ReLU(), rng);
  Mlp g = Mlp::Random({2, 4, 1}, Activation::ReLU(), rng);
  Mlp combo({2, 9, 1}, Activation::ReLU());
  combo.mutable_weights()[0].topRows(5) = f.weights()[0];
  combo.mutable_weights()[0].bottomRows(4) = g.weights()[0];
  combo.mutable_biases()[0].head(5) = f.biases()[0];
  combo.mutable_biases()[0].tail(4) = g.biases()[0];
  combo.mutable_weights()[1].leftCols(5) = a * f.weights()[1];
  combo.mutable_weights()[1].rightCols(4) = b * g.weights()[1];
  combo.mutable_biases()[1] = a * f.biases()[1] + b * g.biases()[1];
  const Vector ref = RandomVector(2, rng);
  const Vector x = RandomVector(2, rng);
  auto module = [&](Mlp mlp) {
    return ShapleyModule(ActiveSet::Make({0, 1}, 2), std::move(mlp), ref, 1, 1);
  };
  const Matrix lhs = module(combo).Forward(x);
  const Matrix rhs = a * module(f).Forward(x) + b * module(g).Forward(x);
  EXPECT_LE((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ShapleyModuleTest, PerformsExactly2PowKInnerEvaluations) {
  Rng rng(28);
  const ShapleyModule m = RandomModule(3, 2, 2, rng);
  ModuleCache cache;
  m.Forward(testing::RandomMatrix(5, 6, rng), &cache);
  EXPECT_EQ(cache.coalition_outputs.rows(), 5 * 8);
  EXPECT_EQ(cache.inner.inputs.front().rows(), 5 * 8);
}

TEST(ShapleyModuleTest, LinearBackwardGivesWeights) {
  const ShapleyModule m = LinearModule({1.5, -2.5});
  ModuleCache cache;
  Matrix x(1, 2);
  x << 0.3, 0.8;
  m.Forward(x, &cache);
  // Upstream identity: d(phi_0)/dx and d(phi_1)/dx summed, i.e. grad of
  // phi_0 + phi_1; each phi_p = w_p x_p depends on x_p only.
  Matrix upstream = Matrix::Ones(1, 2);
  const Matrix gx = m.Backward(cache, upstream, nullptr);
  EXPECT_NEAR(gx(0, 0), 1.5, 1e-15);
  EXPECT_NEAR(gx(0, 1), -2.5, 1e-15);
}

TEST(ShapleyModuleTest, ZeroUpstreamGivesZeroGrads) {
  Rng rng(29);
  const ShapleyModule m = RandomModule(2, 1, 3, rng);
  ModuleCache cache;
  m.Forward(testing::RandomMatrix(3, 2, rng), &cache);
  MlpGrads grads;
  const Matrix gx = m.Backward(cache, Matrix::Zero(3, 6), &grads);
  EXPECT_TRUE(gx.isZero(0.0));
  for (const auto& w : grads.weights) EXPECT_TRUE(w.isZero(0.0));
}

TEST(ShapleyModuleTest, StaleCacheIsRejected) {
  Rng rng(30);
  const ShapleyModule m = RandomModule(2, 1, 3, rng);
  ModuleCache cache;
  m.Forward(testing::RandomMatrix(3, 2, rng), &cache);
  EXPECT_THROW(m.Backward(cache, Matrix::Zero(4, 6), nullptr), Error);
  EXPECT_THROW(m.Backward(ModuleCache{}, Matrix::Zero(3, 6), nullptr), Error);
}

TEST(ShapleyModuleTest, BackwardMatchesFiniteDifferences) {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + trial % 3;
    ShapleyModule m = RandomModule(k, trial % 2 ? 1 : 2, 3, rng, {6});
    const Vector x = RandomVector(m.k() * m.channels_in(), rng);
    const Vector upstream = RandomVector(m.k() * 3, rng);
    auto objective = [&](const ShapleyModule& mod, const Vector& v) {
      const Matrix phi = mod.Forward(v);
      return upstream.dot(phi.reshaped<Eigen::RowMajor>().transpose());
    };

    ModuleCache cache;
    Matrix batch = x.transpose();
    m.Forward(batch, &cache);
    MlpGrads grads;
    const Vector gx =
        m.Backward(cache, upstream.transpose(), &grads).row(0).transpose();
    const Vector fd_x = FiniteDifferenceGradient(
        [&](const Vector& v) { return objective(m, v); }, x);
    EXPECT_LT(MaxRelativeError(gx, fd_x), 1e-4) << "trial " << trial;

    Vector params(m.inner().num_parameters());
    m.inner().CopyParametersTo(params.data());
    Vector grad_params(params.size());
    CopyGradsTo(grads, grad_params.data());
    ShapleyModule probe = m;
    const Vector fd_p = FiniteDifferenceGradient(
        [&](const Vector& p) {
          probe.mutable_inner().SetParametersFrom(p.data());
          return objective(probe, x);
        },
        params);
    EXPECT_LT(MaxRelativeError(grad_params, fd_p), 1e-4) << "trial " << trial;
  }
}

}  // namespace
}  // namespace shapnet
