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

// End-to-end acceptance run: one PASS/FAIL line per criterion, tolerances
// pinned below. Trains every model it needs from the bundled data, so it
// takes minutes. Exit status is nonzero if any criterion fails, except those
// listed with --known-shortfall, which still print FAIL.
//
//   acceptance_test [--bc-instances N] [--only 1,2,...] [--known-shortfall 10]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "shapnet/data.h"
#include "shapnet/evaluation.h"
#include "shapnet/oracle.h"
#include "shapnet/presets.h"
#include "shapnet/pruning.h"
#include "shapnet/training.h"
#include "shapnet/verification.h"

namespace shapnet {
namespace {

constexpr uint64_t kSeed = 0;

// Criterion thresholds.
constexpr double kSyntheticMse = 5e-3;
constexpr double kYeastAccuracy = 0.55;
constexpr double kBreastCancerAccuracy = 0.94;
constexpr double kYeastFidelity = 0.10;
constexpr double kBreastCancerFidelity = 0.05;
constexpr int kFidelityInstances = 100;
constexpr int kBreastCancerPermutations = 100000;
constexpr double kPruneSkipped = 0.30;
constexpr double kPruneAccuracyDrop = 0.01;
constexpr int kOraclePermutations = 10000;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string Num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

Outcome FromCheck(const CheckResult& c) {
  return {c.passed, c.name + " " + Num(c.measured) + " <= " + Num(c.tolerance) +
                        " (" + c.detail + ")"};
}

Outcome Combine(const std::vector<Outcome>& parts) {
  Outcome o{true, ""};
  for (const Outcome& p : parts) {
    o.passed = o.passed && p.passed;
    o.detail += (o.detail.empty() ? "" : "; ") + p.detail;
  }
  return o;
}

std::vector<Matrix> ExplainRows(const ShapNet& net, const Dataset& data) {
  std::vector<Matrix> out;
  for (int i = 0; i < data.n(); ++i) {
    out.push_back(net.Explain(data.features.row(i).transpose()).explanation);
  }
  return out;
}

// Prune sweep pooled over the held-out folds of a 5-fold run: every row is
// scored once, by the model that did not see it.
struct PooledPruning {
  double accuracy = 0.0;  // unpruned, pooled over folds
  std::vector<double> epsilons;
  std::vector<double> skipped;
  std::vector<double> pruned_accuracy;

  // Largest skipped fraction whose accuracy is within `drop` of unpruned.
  double BestSkipped(double drop, double* epsilon = nullptr) const {
    double best = 0.0;
    for (size_t k = 0; k < epsilons.size(); ++k) {
      if (pruned_accuracy[k] >= accuracy - drop - 1e-12 && skipped[k] > best) {
        best = skipped[k];
        if (epsilon) *epsilon = epsilons[k];
      }
    }
    return best;
  }
};

std::vector<double> PruneGrid() {
  std::vector<double> eps = {0.0};
  for (double e = 1e-2; e < 20.0; e *= 1.25) eps.push_back(e);
  return eps;
}

struct CvRun {
  CrossValidationResult cv;
  PooledPruning pruning;
};

CvRun CrossValidatePreset(const std::string& name) {
  const Preset preset = GetPreset(name);
  const Dataset data = LoadPresetData(preset, "", kSeed);
  TrainConfig cfg = preset.train;
  cfg.folds = 5;
  cfg.seed = kSeed;
  CvRun run;
  run.pruning.epsilons = PruneGrid();
  const size_t m = run.pruning.epsilons.size();
  run.pruning.skipped.assign(m, 0.0);
  run.pruning.pruned_accuracy.assign(m, 0.0);
  const bool deep = preset.kind == NetworkKind::kDeep;
  run.cv = CrossValidate(
      data,
      [&](const Dataset&, uint64_t s) {
        return BuildNetwork(preset, Matrix::Zero(preset.d, 1), s);
      },
      cfg,
      [&](int, const ShapNet& net, const Dataset& test) {
        if (!deep) return;
        const PruneCurve curve = PruneSweep(
            dynamic_cast<const DeepShapNet&>(net), test, run.pruning.epsilons);
        const double w = static_cast<double>(test.n()) / data.n();
        run.pruning.accuracy += w * curve.unpruned_metric;
        for (size_t k = 0; k < m; ++k) {
          run.pruning.skipped[k] += w * curve.points[k].mean_fraction_skipped;
          run.pruning.pruned_accuracy[k] += w * curve.points[k].metric;
        }
      });
  return run;
}

// Models and CV runs shared between criteria, built on first use.
class Cache {
 public:
  const PresetRun& Trained(const std::string& name) {
    auto it = trained_.find(name);
    if (it == trained_.end()) {
      const Preset preset = GetPreset(name);
      const Dataset data = LoadPresetData(preset, "", kSeed);
      it = trained_
               .emplace(name, TrainPreset(preset, data, preset.train_fraction,
                                          preset.train, kSeed))
               .first;
    }
    return it->second;
  }

  const CvRun& CrossValidated(const std::string& name) {
    auto it = cv_.find(name);
    if (it == cv_.end()) it = cv_.emplace(name, CrossValidatePreset(name)).first;
    return it->second;
  }

 private:
  std::map<std::string, PresetRun> trained_;
  std::map<std::string, CvRun> cv_;
};

Outcome Criterion1() {
  CheckOptions o;
  o.trials = 100;
  o.dims = {4, 8, 12};
  o.k = 2;
  o.seed = kSeed;
  return FromCheck(CheckShallowExactness(o));
}

Outcome Criterion2() {
  CheckOptions o;
  o.trials = 100;
  o.seed = kSeed;
  return FromCheck(CheckLinearAggregation(o));
}

CheckOptions DeepForwards() {
  CheckOptions o;
  o.trials = 1000;
  o.dims = {3, 4, 6, 8, 12, 16};
  o.seed = kSeed;
  return o;
}

Outcome Criterion3() {
  return Combine({FromCheck(CheckDeepLocalAccuracy(DeepForwards())),
                  FromCheck(CheckDeepMissingness(DeepForwards()))});
}

Outcome Criterion4() { return FromCheck(CheckPruningIdentity(DeepForwards())); }

Outcome Criterion5() {
  CheckOptions o;
  o.trials = 20;
  o.seed = kSeed;
  return FromCheck(CheckGradients(o, NetworkKind::kDeep));
}

Outcome Criterion6(Cache& cache) {
  std::vector<Outcome> parts;
  for (const char* name : {"synthetic", "synthetic-shallow"}) {
    const PresetRun& run = cache.Trained(name);
    const double mse = EvaluateMetric(*run.net, run.split.test);
    parts.push_back({mse <= kSyntheticMse, std::string(name) + " test mse " +
                                               Num(mse) + " <= " +
                                               Num(kSyntheticMse)});
  }
  return Combine(parts);
}

Outcome Criterion7(Cache& cache) {
  const double yeast = cache.CrossValidated("yeast").cv.mean_metric;
  const double bc = cache.CrossValidated("breast-cancer").cv.mean_metric;
  return Combine({{yeast >= kYeastAccuracy, "yeast 5-fold accuracy " +
                                                Num(yeast) + " >= " +
                                                Num(kYeastAccuracy)},
                  {bc >= kBreastCancerAccuracy,
                   "breast-cancer 5-fold accuracy " + Num(bc) +
                       " >= " + Num(kBreastCancerAccuracy)}});
}

Outcome Fidelity(const PresetRun& run, const std::string& name,
                 OracleMethod method, int instances, double threshold) {
  FidelityOptions fo;
  fo.method = method;
  fo.permutations = kBreastCancerPermutations;
  fo.seed = kSeed;
  const int n = std::min(instances, run.split.test.n());
  const VerificationReport report = ExplanationFidelity(
      *run.net, run.split.test.features.topRows(n), fo, name);
  return {report.mean_error() <= threshold,
          name + " " + report.method + " mean normalized l1 " +
              Num(report.mean_error()) + " <= " + Num(threshold) + " over " +
              std::to_string(n) + " test instances (max " +
              Num(report.max_error()) + ")"};
}

Outcome Criterion8(Cache& cache, int bc_instances) {
  return Combine({Fidelity(cache.Trained("yeast"), "yeast", OracleMethod::kExact,
                           kFidelityInstances, kYeastFidelity),
                  Fidelity(cache.Trained("breast-cancer"), "breast-cancer",
                           OracleMethod::kSampled, bc_instances,
                           kBreastCancerFidelity)});
}

Outcome Criterion9(Cache& cache) {
  auto stats = [&](const char* name) {
    const PresetRun& run = cache.Trained(name);
    return ComputeAttributionStats(ExplainRows(*run.net, run.split.test));
  };
  const AttributionStats none = stats("yeast");
  const AttributionStats l1 = stats("yeast-l1");
  const AttributionStats linf = stats("yeast-linf");
  return Combine({{l1.sparsity > none.sparsity,
                   "sparsity l1 " + Num(l1.sparsity) + " > none " +
                       Num(none.sparsity)},
                  {linf.cv < none.cv,
                   "cv linf " + Num(linf.cv) + " < none " + Num(none.cv)}});
}

Outcome Criterion10(Cache& cache) {
  const PooledPruning& l1 = cache.CrossValidated("yeast-l1-all").pruning;
  const PooledPruning& none = cache.CrossValidated("yeast").pruning;
  double eps = 0.0;
  const double best = l1.BestSkipped(kPruneAccuracyDrop, &eps);
  const double best_none = none.BestSkipped(kPruneAccuracyDrop);
  // Dominance at equal accuracy budgets: the regularized model skips at least
  // as much at every budget and strictly more at the criterion's budget.
  bool dominates = best > best_none;
  std::string budgets;
  for (double drop : {0.0, 0.005, 0.01, 0.02, 0.05}) {
    const double a = l1.BestSkipped(drop);
    const double b = none.BestSkipped(drop);
    dominates = dominates && a >= b;
    budgets += " " + Num(drop) + ":" + Num(a) + "/" + Num(b);
  }
  return Combine(
      {{best >= kPruneSkipped,
        "yeast-l1-all skips " + Num(best) + " >= " + Num(kPruneSkipped) +
            " at epsilon " + Num(eps) + " (accuracy " + Num(l1.accuracy) +
            " unpruned, drop <= " + Num(kPruneAccuracyDrop) +
            ", pooled 5-fold)"},
       {dominates, "skipped l1-all/none per accuracy budget" + budgets}});
}

Outcome Criterion11() {
  CheckOptions o;
  o.trials = 20;
  o.dims = {4, 8, 12};
  o.seed = kSeed;
  return FromCheck(CheckSampledOracle(o, kOraclePermutations));
}

std::set<int> ParseList(const std::string& text) {
  std::set<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.insert(std::stoi(item));
  return out;
}

int Main(int argc, char** argv) {
  int bc_instances = 3;
  std::set<int> only;
  std::set<int> known;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--bc-instances" && i + 1 < argc) {
      bc_instances = std::atoi(argv[++i]);
    } else if (arg == "--only" && i + 1 < argc) {
      only = ParseList(argv[++i]);
    } else if (arg == "--known-shortfall" && i + 1 < argc) {
      known = ParseList(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--bc-instances N] [--only 1,2,...] "
                   "[--known-shortfall 10]\n",
                   argv[0]);
      return 2;
    }
  }
  Cache cache;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria =
      {
          {"shallow exactness", Criterion1},
          {"linear aggregation", Criterion2},
          {"deep local accuracy and missingness", Criterion3},
          {"pruning identity", Criterion4},
          {"gradient correctness", Criterion5},
          {"synthetic regression", [&] { return Criterion6(cache); }},
          {"tabular accuracy", [&] { return Criterion7(cache); }},
          {"deep explanation fidelity",
           [&] { return Criterion8(cache, bc_instances); }},
          {"regularization directions", [&] { return Criterion9(cache); }},
          {"pruning retention", [&] { return Criterion10(cache); }},
          {"oracle self-consistency", Criterion11},
      };
  int passed = 0;
  int failed = 0;
  std::vector<int> shortfalls;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - start)
                            .count();
    if (o.passed) {
      ++passed;
    } else if (known.count(id)) {
      shortfalls.push_back(id);
    } else {
      ++failed;
    }
    std::printf("%s %2d %s: %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", id,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::string listed;
  for (int id : shortfalls) listed += " " + std::to_string(id);
  std::printf("%d passed, %d failed, %zu known shortfall(s)%s\n", passed,
              failed, shortfalls.size(), listed.c_str());
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace shapnet

int main(int argc, char** argv) { return shapnet::Main(argc, argv); }
