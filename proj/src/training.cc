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

#include "shapnet/training.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "shapnet/error.h"

namespace shapnet {
namespace {

constexpr Eigen::Index kPredictChunk = 256;

double Sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

// splitmix64 finalizer, used to derive independent child seeds.
uint64_t MixSeed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Matrix BatchFeatures(const Dataset& data, const std::vector<int>& rows,
                     size_t begin, size_t end) {
  Matrix x(static_cast<Eigen::Index>(end - begin), data.d());
  for (size_t i = begin; i < end; ++i) {
    x.row(static_cast<Eigen::Index>(i - begin)) = data.features.row(rows[i]);
  }
  return x;
}

}  // namespace

void TrainConfig::Validate() const {
  Require(epochs >= 0, "epochs must be >= 0");
  Require(batch_size >= 1, "batch_size must be >= 1");
  Require(lr > 0.0, "learning rate must be positive");
  Require(lambda >= 0.0, "lambda must be >= 0");
  Require(reg != RegKind::kNone || lambda == 0.0,
          "lambda must be 0 when no regularizer is selected");
  Require(folds == 0 || folds >= 2, "folds must be 0 or >= 2");
}

std::string ToString(LossKind kind) {
  return kind == LossKind::kMse ? "mse" : "cross_entropy";
}

std::string ToString(RegKind kind) {
  switch (kind) {
    case RegKind::kNone:
      return "none";
    case RegKind::kL1Output:
      return "l1_output";
    case RegKind::kL1AllLayers:
      return "l1_all_layers";
    case RegKind::kLInfOutput:
      return "linf_output";
  }
  return "none";
}

LossKind ParseLossKind(const std::string& text) {
  if (text == "mse") return LossKind::kMse;
  if (text == "cross_entropy") return LossKind::kSoftmaxCrossEntropy;
  Fail("unknown loss '", text, "' (expected mse or cross_entropy)");
}

RegKind ParseRegKind(const std::string& text) {
  for (RegKind kind : {RegKind::kNone, RegKind::kL1Output,
                       RegKind::kL1AllLayers, RegKind::kLInfOutput}) {
    if (ToString(kind) == text) return kind;
  }
  Fail("unknown regularizer '", text,
       "' (expected none, l1_output, l1_all_layers or linf_output)");
}

LossResult ComputeLoss(const Vector& prediction, double target, LossKind kind) {
  LossResult result;
  const Eigen::Index m = prediction.size();
  Require(m >= 1, "empty prediction");
  if (kind == LossKind::kMse) {
    const Vector diff = prediction.array() - target;
    result.loss = diff.squaredNorm() / static_cast<double>(m);
    result.grad = 2.0 * diff / static_cast<double>(m);
    return result;
  }
  const int cls = static_cast<int>(target);
  Require(target == cls && cls >= 0 && cls < m, "class index ", target,
          " out of range for ", m, " logits");
  const double max_logit = prediction.maxCoeff();
  const Vector exps = (prediction.array() - max_logit).exp().matrix();
  const double sum = exps.sum();
  result.loss = max_logit + std::log(sum) - prediction[cls];
  result.grad = exps / sum;
  result.grad[cls] -= 1.0;
  return result;
}

PenaltyResult BatchRegularizationPenalty(const std::vector<Matrix>& trace,
                                         RegKind kind, double lambda) {
  Require(lambda >= 0.0, "lambda must be >= 0");
  PenaltyResult result;
  result.grad_trace.resize(trace.size());
  if (kind == RegKind::kNone || lambda == 0.0 || trace.empty()) return result;
  const double batch = static_cast<double>(trace.back().rows());
  const double scale = lambda / batch;

  auto l1 = [&](size_t l) {
    result.penalty += scale * trace[l].cwiseAbs().sum();
    result.grad_trace[l] = scale * trace[l].unaryExpr(&Sign);
  };
  switch (kind) {
    case RegKind::kL1Output:
      l1(trace.size() - 1);
      break;
    case RegKind::kL1AllLayers:
      for (size_t l = 0; l < trace.size(); ++l) l1(l);
      break;
    case RegKind::kLInfOutput: {
      const Matrix& z = trace.back();
      Matrix& g = result.grad_trace.back();
      g = Matrix::Zero(z.rows(), z.cols());
      for (Eigen::Index b = 0; b < z.rows(); ++b) {
        Eigen::Index arg = 0;
        // maxCoeff returns the first maximal index.
        const double max_abs = z.row(b).cwiseAbs().maxCoeff(&arg);
        result.penalty += scale * max_abs;
        g(b, arg) = scale * Sign(z(b, arg));
      }
      break;
    }
    case RegKind::kNone:
      break;
  }
  return result;
}

PenaltyResult RegularizationPenalty(const std::vector<Matrix>& trace,
                                    RegKind kind, double lambda) {
  std::vector<Matrix> flat;
  for (const Matrix& z : trace) flat.push_back(ShapNet::FlattenInstance(z));
  PenaltyResult batch = BatchRegularizationPenalty(flat, kind, lambda);
  for (size_t l = 0; l < trace.size(); ++l) {
    if (batch.grad_trace[l].size() == 0) {
      batch.grad_trace[l] = Matrix::Zero(trace[l].rows(), trace[l].cols());
    } else {
      batch.grad_trace[l] = batch.grad_trace[l].reshaped<Eigen::RowMajor>(
          trace[l].rows(), trace[l].cols());
    }
  }
  return batch;
}

std::string TrainHistory::ToCsv() const {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,test_metric,penalty\n";
  for (const EpochRecord& r : epochs) {
    out << r.epoch << ',' << r.train_loss << ',';
    if (std::isfinite(r.test_metric)) out << r.test_metric;
    out << ',' << r.penalty << '\n';
  }
  return out.str();
}

Matrix PredictBatch(const ShapNet& net, const Matrix& features) {
  Matrix out(features.rows(), net.num_outputs());
  for (Eigen::Index start = 0; start < features.rows(); start += kPredictChunk) {
    const Eigen::Index count = std::min(kPredictChunk, features.rows() - start);
    out.middleRows(start, count) =
        net.ForwardBatch(features.middleRows(start, count), nullptr).prediction;
  }
  return out;
}

double EvaluateMetric(const ShapNet& net, const Dataset& data) {
  Require(data.n() >= 1, "cannot evaluate on an empty dataset");
  const Matrix pred = PredictBatch(net, data.features);
  if (data.task == TaskKind::kClassification) {
    int correct = 0;
    for (int i = 0; i < data.n(); ++i) {
      Eigen::Index arg = 0;
      pred.row(i).maxCoeff(&arg);
      correct += static_cast<int>(arg) == data.class_of(i);
    }
    return static_cast<double>(correct) / data.n();
  }
  double sse = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    sse += (pred.row(i).array() - data.targets[i]).square().mean();
  }
  return sse / data.n();
}

namespace {

double MeanLoss(const ShapNet& net, const Dataset& data, LossKind kind) {
  const Matrix pred = PredictBatch(net, data.features);
  double total = 0.0;
  for (int i = 0; i < data.n(); ++i) {
    total += ComputeLoss(pred.row(i).transpose(), data.targets[i], kind).loss;
  }
  return total / data.n();
}

}  // namespace

TrainHistory Train(ShapNet& net, const Dataset& train, const Dataset* test,
                   const TrainConfig& config) {
  config.Validate();
  Require(train.n() >= 1, "training set is empty");
  Require(train.d() == net.d_raw() * net.channels_in(), "dataset has ",
          train.d(), " feature columns, network expects ",
          net.d_raw() * net.channels_in());
  if (config.loss == LossKind::kSoftmaxCrossEntropy) {
    Require(train.task == TaskKind::kClassification &&
                train.num_classes == net.num_outputs(),
            "cross-entropy needs a classification dataset with ",
            net.num_outputs(), " classes");
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  TrainHistory history;
  history.epochs.push_back({0, MeanLoss(net, train, config.loss),
                            test != nullptr ? EvaluateMetric(net, *test) : nan,
                            0.0});

  AdamConfig adam;
  adam.lr = config.lr;
  AdamState state(net.num_parameters(), adam);
  Vector params = net.GetParameters();
  Rng rng(config.seed);
  std::vector<int> order(train.n());
  std::iota(order.begin(), order.end(), 0);
  const bool regularize = config.reg != RegKind::kNone && config.lambda > 0.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    double penalty_sum = 0.0;
    int batch_index = 0;
    for (size_t begin = 0; begin < order.size();
         begin += config.batch_size, ++batch_index) {
      const size_t end = std::min(order.size(), begin + config.batch_size);
      const Matrix x = BatchFeatures(train, order, begin, end);
      const Eigen::Index b = x.rows();
      NetworkCache cache;
      const NetworkForward fwd = net.ForwardBatch(x, &cache);

      Matrix grad_pred(b, net.num_outputs());
      double batch_loss = 0.0;
      for (Eigen::Index i = 0; i < b; ++i) {
        const LossResult lr = ComputeLoss(fwd.prediction.row(i).transpose(),
                                          train.targets[order[begin + i]],
                                          config.loss);
        batch_loss += lr.loss;
        grad_pred.row(i) = lr.grad.transpose() / static_cast<double>(b);
      }
      batch_loss /= static_cast<double>(b);

      NetworkGrads grads;
      if (regularize) {
        PenaltyResult pen =
            BatchRegularizationPenalty(fwd.trace, config.reg, config.lambda);
        penalty_sum += pen.penalty * b;
        grads = net.Backward(cache, grad_pred, &pen.grad_trace);
        batch_loss += pen.penalty;
      } else {
        grads = net.Backward(cache, grad_pred, nullptr);
      }
      Require(std::isfinite(batch_loss), "non-finite loss at epoch ", epoch,
              ", batch ", batch_index);
      loss_sum += batch_loss * b;

      AdamStep(params, net.FlattenGrads(grads), state);
      net.SetParameters(params);
    }
    history.epochs.push_back(
        {epoch, loss_sum / train.n(),
         test != nullptr ? EvaluateMetric(net, *test) : nan,
         penalty_sum / train.n()});
  }
  return history;
}

std::vector<std::vector<int>> FoldAssignment(int n, int folds, uint64_t seed) {
  Require(folds >= 2, "cross-validation needs folds >= 2");
  Require(folds <= n, "cannot split ", n, " rows into ", folds, " folds");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<int>> out(folds);
  int start = 0;
  for (int f = 0; f < folds; ++f) {
    const int size = n / folds + (f < n % folds ? 1 : 0);
    out[f].assign(order.begin() + start, order.begin() + start + size);
    start += size;
  }
  return out;
}

uint64_t FoldSeed(uint64_t seed, int fold) {
  return MixSeed(seed ^ MixSeed(static_cast<uint64_t>(fold) + 1));
}

CrossValidationResult CrossValidate(const Dataset& dataset,
                                    const NetworkBuilder& builder,
                                    const TrainConfig& config,
                                    const FoldCallback& on_fold) {
  Require(config.folds >= 2, "cross-validation needs folds >= 2");
  const auto folds = FoldAssignment(dataset.n(), config.folds, config.seed);
  CrossValidationResult result;
  for (int f = 0; f < config.folds; ++f) {
    std::vector<int> train_rows;
    for (int g = 0; g < config.folds; ++g) {
      if (g != f) train_rows.insert(train_rows.end(), folds[g].begin(), folds[g].end());
    }
    Dataset train = dataset.Subset(train_rows);
    Dataset test = dataset.Subset(folds[f]);
    const NormalizationStats stats = FitNormalization(train.features);
    train.features = stats.Apply(train.features);
    test.features = stats.Apply(test.features);

    const uint64_t seed = FoldSeed(config.seed, f);
    std::unique_ptr<ShapNet> net = builder(train, seed);
    TrainConfig fold_config = config;
    fold_config.seed = seed;
    FoldResult fold;
    fold.fold = f;
    fold.train_size = train.n();
    fold.test_size = test.n();
    fold.history = Train(*net, train, nullptr, fold_config);
    fold.metric = EvaluateMetric(*net, test);
    if (on_fold) on_fold(f, *net, test);
    result.mean_metric += fold.metric / config.folds;
    result.folds.push_back(std::move(fold));
  }
  return result;
}

}  // namespace shapnet
