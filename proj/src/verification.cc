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

#include "shapnet/verification.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "nlohmann/json.hpp"
#include "shapnet/error.h"
#include "shapnet/oracle.h"
#include "shapnet/parallel.h"
#include "shapnet/pruning.h"

namespace shapnet {
namespace {

Matrix Gaussian(int rows, int cols, Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

// Trial t draws everything from its own stream so results do not depend on
// the thread count.
Rng TrialRng(uint64_t seed, int trial) {
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(trial)};
  return Rng(seq);
}

// Shuffled disjoint pairs covering every feature (a singleton when d is odd)
// plus d/2 extra random sets, so modules overlap.
std::vector<std::vector<int>> RandomActiveSets(int d, int k, Rng& rng) {
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> sets;
  for (int i = 0; i < d; i += k) {
    std::vector<int> s(order.begin() + i, order.begin() + std::min(d, i + k));
    std::sort(s.begin(), s.end());
    sets.push_back(s);
  }
  for (int extra = 0; extra < d / 2; ++extra) {
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> s(order.begin(), order.begin() + std::min(k, d));
    std::sort(s.begin(), s.end());
    sets.push_back(s);
  }
  return sets;
}

DeepShapNet RandomDeepNet(int d, Rng& rng) {
  const int layers = std::max(1, std::countr_zero(
                                     static_cast<unsigned>(NextPowerOfTwo(d))));
  std::vector<LayerSpec> specs;
  for (int l = 0; l < layers; ++l) specs.push_back({l + 1 == layers ? 2 : 3, {6}});
  return DeepShapNet::Random(d, Gaussian(d, 1, rng), specs, Activation::ReLU(),
                             rng);
}

CheckResult Finish(CheckResult r) {
  r.passed = r.measured <= r.tolerance;
  return r;
}

}  // namespace

CheckResult CheckShallowExactness(const CheckOptions& options) {
  Require(!options.dims.empty(), "no dimensions to check");
  std::vector<double> worst(options.trials, 0.0);
  ParallelFor(options.trials, options.threads, [&](int t) {
    Rng rng = TrialRng(options.seed, t);
    const int d = options.dims[t % options.dims.size()];
    const Matrix ref = Gaussian(d, 1, rng);
    const ShallowShapNet net = ShallowShapNet::Random(
        d, 1, ref, RandomActiveSets(d, options.k, rng), {1, {8}},
        Activation::ReLU(), rng);
    const Matrix x = Gaussian(d, 1, rng);
    const Matrix oracle = ExactShapley(AsBlackBox(net), x, ref);
    worst[t] = NormalizedL1(oracle.col(0), net.Explain(x).explanation.col(0));
  });
  CheckResult r;
  r.name = "shallow_exactness";
  r.tolerance = 1e-6;
  r.trials = options.trials;
  r.measured = *std::max_element(worst.begin(), worst.end());
  r.detail = "max normalized l1 distance to exact Shapley values";
  return Finish(r);
}

CheckResult CheckLinearAggregation(const CheckOptions& options) {
  std::vector<double> worst(options.trials, 0.0);
  ParallelFor(options.trials, options.threads, [&](int t) {
    Rng rng = TrialRng(options.seed, t);
    const int d = 6;
    const int k = 1 + t % 3;
    const int c_mid = 3;
    const int c_out = 2;
    std::vector<int> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<int> active(idx.begin(), idx.begin() + k);
    std::sort(active.begin(), active.end());
    // Remaining features get singleton modules with zero aggregation weight.
    std::vector<std::vector<int>> sets = {active};
    for (int i = k; i < d; ++i) sets.push_back({idx[i]});
    const Matrix ref = Gaussian(d, 1, rng);
    const ShallowShapNet base = ShallowShapNet::Random(
        d, 1, ref, sets, {c_mid, {6}}, Activation::ReLU(), rng);
    Matrix agg = Matrix::Zero(c_out, c_mid * static_cast<int>(sets.size()));
    const Matrix a = Gaussian(c_out, c_mid, rng);
    agg.leftCols(c_mid) = a;
    const ShallowShapNet net(d, 1, ref, base.modules(), agg);

    const Mlp& f = base.modules()[0].inner();
    BlackBoxFunction af{d, 1, c_out, [&](const Matrix& in) -> Matrix {
                          Matrix slice(in.rows(), k);
                          for (int p = 0; p < k; ++p) slice.col(p) = in.col(active[p]);
                          return f.Forward(slice) * a.transpose();
                        }};
    const Matrix x = Gaussian(d, 1, rng);
    const Matrix oracle = ExactShapley(af, x, ref);
    worst[t] = (net.Explain(x).explanation - oracle).cwiseAbs().maxCoeff();
  });
  CheckResult r;
  r.name = "linear_aggregation";
  r.tolerance = 1e-10;
  r.trials = options.trials;
  r.measured = *std::max_element(worst.begin(), worst.end());
  r.detail = "max |A * explanation - Shapley(A f)|";
  return Finish(r);
}

CheckResult CheckShallowLocalAccuracy(const CheckOptions& options) {
  std::vector<double> worst(options.trials, 0.0);
  ParallelFor(options.trials, options.threads, [&](int t) {
    Rng rng = TrialRng(options.seed, t);
    const int d = options.dims[t % options.dims.size()];
    const ShallowShapNet net = ShallowShapNet::Random(
        d, 1, Gaussian(d, 1, rng), RandomActiveSets(d, options.k, rng),
        {2, {6}}, Activation::ReLU(), rng);
    const Explained e = net.Explain(Gaussian(d, 1, rng));
    worst[t] = (e.explanation.colwise().sum().transpose() - e.prediction)
                   .cwiseAbs()
                   .maxCoeff();
  });
  CheckResult r;
  r.name = "shallow_local_accuracy";
  r.tolerance = 1e-12;
  r.trials = options.trials;
  r.measured = *std::max_element(worst.begin(), worst.end());
  r.detail = "max |sum_i phi_i - prediction|";
  return Finish(r);
}

CheckResult CheckDeepLocalAccuracy(const CheckOptions& options) {
  std::vector<double> worst(options.trials, 0.0);
  ParallelFor(options.trials, options.threads, [&](int t) {
    Rng rng = TrialRng(options.seed, t);
    const int d = options.dims[t % options.dims.size()];
    const DeepShapNet net = RandomDeepNet(d, rng);
    const Explained e = net.Explain(Gaussian(d, 1, rng));
    worst[t] = (e.explanation.colwise().sum().transpose() - e.prediction)
                   .cwiseAbs()
                   .maxCoeff();
  });
  CheckResult r;
  r.name = "deep_local_accuracy";
  r.tolerance = 1e-12;
  r.trials = options.trials;
  r.measured = *std::max_element(worst.begin(), worst.end());
  r.detail = "max |sum_i h_i - prediction|";
  return Finish(r);
}

CheckResult CheckDeepMissingness(const CheckOptions& options) {
  std::vector<int> violations(options.trials, 0);
  std::vector<int> checked(options.trials, 0);
  ParallelFor(options.trials, options.threads, [&](int t) {
    Rng rng = TrialRng(options.seed, t);
    const int d = options.dims[t % options.dims.size()];
    const DeepShapNet net = RandomDeepNet(d, rng);
    Matrix x = Gaussian(d, 1, rng);
    std::bernoulli_distribution coin(0.3);
    std::vector<int> at_ref;
    for (int i = 0; i < d; ++i) {
      if (coin(rng)) {
        x.row(i) = net.reference().row(i);
        at_ref.push_back(i);
      }
    }
    const Matrix phi = net.Explain(x).explanation;
    for (int i : at_ref) {
      ++checked[t];
      if (!phi.row(i).isZero(0.0)) ++violations[t];
    }
  });
  CheckResult r;
  r.name = "deep_missingness";
  r.tolerance = 0.0;
  r.trials = options.trials;
  r.measured = std::accumulate(violations.begin(), violations.end(), 0);
  r.detail = "nonzero rows among " +
             std::to_string(std::accumulate(checked.begin(), checked.end(), 0)) +
             " features set to their reference";
  return Finish(r);
}

CheckResult CheckPruningIdentity(const CheckOptions& options) {
  std::vector<int> violations(options.trials, 0);
  ParallelFor(options.trials, options.threads, [&](int t) {
    Rng rng = TrialRng(options.seed, t);
    const int d = options.dims[t % options.dims.size()];
    const DeepShapNet net = RandomDeepNet(d, rng);
    const Matrix x = Gaussian(d, 1, rng);
    const Explained full = net.Explain(x);
    const PrunedOutput zero = PrunedForward(net, x, 0.0);
    if (zero.prediction != full.prediction ||
        zero.explanation != full.explanation) {
      ++violations[t];
    }
    // Threshold at the median first-layer row norm clamps about half.
    Vector norms = full.trace[0].rowwise().lpNorm<1>();
    std::sort(norms.begin(), norms.end());
    const double eps = norms[norms.size() / 2];
    const PrunedOutput pruned = PrunedForward(net, x, eps);
    for (size_t l = 0; l + 1 < pruned.trace.size(); ++l) {
      for (Eigen::Index i = 0; i < pruned.trace[l].rows(); ++i) {
        if (pruned.trace[l].row(i).lpNorm<1>() >= eps) continue;
        for (size_t m = l + 1; m < pruned.trace.size(); ++m) {
          if (!pruned.trace[m].row(i).isZero(0.0)) ++violations[t];
        }
      }
    }
  });
  CheckResult r;
  r.name = "pruning_identity";
  r.tolerance = 0.0;
  r.trials = options.trials;
  r.measured = std::accumulate(violations.begin(), violations.end(), 0);
  r.detail = "epsilon=0 mismatches plus nonzero rows after clamping";
  return Finish(r);
}

CheckResult CheckSampledOracle(const CheckOptions& options, int permutations) {
  std::vector<double> worst(options.trials, 0.0);
  std::vector<int> beyond(options.trials, 0);
  std::vector<int> coords(options.trials, 0);
  ParallelFor(options.trials, options.threads, [&](int t) {
    Rng rng = TrialRng(options.seed, t);
    const int d = options.dims[t % options.dims.size()];
    Require(d <= 12, "sampled oracle check needs d <= 12");
    const DeepShapNet net = RandomDeepNet(d, rng);
    const Matrix x = Gaussian(d, 1, rng);
    const BlackBoxFunction box = AsBlackBox(net);
    const Matrix exact = ExactShapley(box, x, net.reference());
    const SampledShapleyResult sampled =
        SampledShapley(box, x, net.reference(), permutations, rng());
    for (Eigen::Index i = 0; i < exact.size(); ++i) {
      const double diff = std::abs(sampled.values.data()[i] - exact.data()[i]);
      const double se = sampled.standard_error.data()[i];
      double z = 0.0;
      if (se > 0.0) {
        z = diff / se;
      } else if (diff > 1e-12) {
        z = std::numeric_limits<double>::infinity();
      }
      worst[t] = std::max(worst[t], z);
      if (z > 3.0) ++beyond[t];
      ++coords[t];
    }
  });
  CheckResult r;
  r.name = "sampled_oracle";
  r.tolerance = 3.0;
  r.trials = options.trials;
  r.measured = *std::max_element(worst.begin(), worst.end());
  r.detail = std::to_string(std::accumulate(beyond.begin(), beyond.end(), 0)) +
             " of " +
             std::to_string(std::accumulate(coords.begin(), coords.end(), 0)) +
             " coordinates beyond 3 standard errors, " +
             std::to_string(permutations) + " permutations";
  return Finish(r);
}

CheckResult CheckGradients(const CheckOptions& options, NetworkKind kind) {
  std::vector<double> worst(options.trials, 0.0);
  std::vector<int> params(options.trials, 0);
  std::vector<int> retried(options.trials, 0);
  ParallelFor(options.trials, options.threads, [&](int t) {
    Rng rng = TrialRng(options.seed, t);
    std::unique_ptr<ShapNet> net;
    if (kind == NetworkKind::kDeep) {
      net = std::make_unique<DeepShapNet>(DeepShapNet::Random(
          6, Gaussian(6, 1, rng), {{3, {6}}, {3, {6}}, {2, {6}}},
          Activation::ReLU(), rng));
    } else {
      net = std::make_unique<ShallowShapNet>(ShallowShapNet::Random(
          6, 1, Gaussian(6, 1, rng), RandomActiveSets(6, 2, rng), {2, {6}},
          Activation::ReLU(), rng));
    }
    params[t] = net->num_parameters();
    const int batch = 3;
    const Matrix x = Gaussian(batch, net->d_raw(), rng);
    const Matrix gp = Gaussian(batch, net->num_outputs(), rng);
    std::vector<Matrix> gt;
    for (int c : net->trace_channels()) {
      gt.push_back(Gaussian(batch, net->d_internal() * c, rng));
    }
    auto objective = [&](const ShapNet& n) {
      const NetworkForward fwd = n.ForwardBatch(x, nullptr);
      double total = (fwd.prediction.array() * gp.array()).sum();
      for (size_t l = 0; l < gt.size(); ++l) {
        total += (fwd.trace[l].array() * gt[l].array()).sum();
      }
      return total;
    };
    NetworkCache cache;
    net->ForwardBatch(x, &cache);
    const Vector analytic = net->FlattenGrads(net->Backward(cache, gp, &gt));
    Vector p = net->GetParameters();
    auto probe = net->Clone();
    auto relative_error = [&](Eigen::Index i, double h) {
      const double saved = p[i];
      p[i] = saved + h;
      probe->SetParameters(p);
      const double plus = objective(*probe);
      p[i] = saved - h;
      probe->SetParameters(p);
      const double minus = objective(*probe);
      p[i] = saved;
      const double numeric = (plus - minus) / (2 * h);
      // Relative to max(|a|, |b|, 1e-4); below that floor the
      // central-difference roundoff (~1e-10) would dominate.
      const double scale =
          std::max({std::abs(numeric), std::abs(analytic[i]), 1e-4});
      return std::abs(numeric - analytic[i]) / scale;
    };
    double w = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      double e = relative_error(i, 1e-5);
      // A ReLU kink inside the stencil breaks the difference quotient, not
      // the gradient; shrinking the step moves past it, a real error stays.
      for (double h : {1e-6, 1e-7}) {
        if (e <= 1e-4) break;
        ++retried[t];
        e = std::min(e, relative_error(i, h));
      }
      w = std::max(w, e);
    }
    worst[t] = w;
  });
  CheckResult r;
  r.name = kind == NetworkKind::kDeep ? "deep_gradients" : "shallow_gradients";
  r.tolerance = 1e-4;
  r.trials = options.trials;
  r.measured = *std::max_element(worst.begin(), worst.end());
  r.detail = "max relative error vs central differences, " +
             std::to_string(*std::max_element(params.begin(), params.end())) +
             " parameters, " +
             std::to_string(std::accumulate(retried.begin(), retried.end(), 0)) +
             " smaller-step retries";
  return Finish(r);
}

std::string ChecksToJson(const std::vector<CheckResult>& checks) {
  nlohmann::json j;
  j["format_version"] = 1;
  bool all = true;
  nlohmann::json list = nlohmann::json::array();
  for (const CheckResult& c : checks) {
    all = all && c.passed;
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"measured", c.measured},
                    {"tolerance", c.tolerance},
                    {"trials", c.trials},
                    {"detail", c.detail}});
  }
  j["all_passed"] = all;
  j["checks"] = list;
  return j.dump(2);
}

}  // namespace shapnet
