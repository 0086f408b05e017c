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

#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "pybind11/eigen.h"
#include "pybind11/functional.h"
#include "pybind11/pybind11.h"
#include "pybind11/stl.h"
#include "shapnet/data.h"
#include "shapnet/error.h"
#include "shapnet/evaluation.h"
#include "shapnet/networks.h"
#include "shapnet/oracle.h"
#include "shapnet/presets.h"
#include "shapnet/pruning.h"
#include "shapnet/serialization.h"
#include "shapnet/training.h"
#include "shapnet/verification.h"

namespace py = pybind11;

namespace shapnet {
namespace {

Activation ParseActivation(const std::string& name, double slope) {
  if (name == "relu") return Activation::ReLU();
  if (name == "leaky_relu") return Activation::LeakyReLU(slope);
  throw Error("unknown activation '" + name + "' (relu, leaky_relu)");
}

std::vector<LayerSpec> ToSpecs(
    const std::vector<std::pair<int, std::vector<int>>>& layers) {
  std::vector<LayerSpec> specs;
  for (const auto& [channels, hidden] : layers) specs.push_back({channels, hidden});
  return specs;
}

TaskKind ParseTask(const std::string& task) {
  if (task == "classification") return TaskKind::kClassification;
  if (task == "regression") return TaskKind::kRegression;
  throw Error("task must be 'classification' or 'regression'");
}

Dataset MakeDataset(const Matrix& x, const Vector& y, const std::string& task,
                    int num_classes) {
  Dataset ds;
  ds.features = x;
  ds.targets = y;
  ds.task = ParseTask(task);
  ds.num_classes = ds.task == TaskKind::kClassification ? num_classes : 0;
  for (int j = 0; j < x.cols(); ++j) ds.feature_names.push_back("x" + std::to_string(j));
  for (int k = 0; k < ds.num_classes; ++k) ds.class_labels.push_back(std::to_string(k));
  ds.Validate();
  return ds;
}

py::dict ExplainedDict(const Explained& e) {
  py::dict d;
  d["prediction"] = e.prediction;
  d["explanation"] = e.explanation;
  d["trace"] = e.trace;
  return d;
}

py::dict CheckDict(const CheckResult& c) {
  py::dict d;
  d["name"] = c.name;
  d["passed"] = c.passed;
  d["measured"] = c.measured;
  d["tolerance"] = c.tolerance;
  d["trials"] = c.trials;
  d["detail"] = c.detail;
  return d;
}

}  // namespace
}  // namespace shapnet

PYBIND11_MODULE(_shapnet, m) {
  using namespace shapnet;
  m.doc() = "Shapley explanation networks (C++ core)";
  py::register_exception<Error>(m, "ShapNetError", PyExc_RuntimeError);

  py::class_<ShapNet>(m, "ShapNet")
      .def_property_readonly("kind",
                             [](const ShapNet& n) {
                               return n.kind() == NetworkKind::kDeep ? "deep"
                                                                     : "shallow";
                             })
      .def_property_readonly("d", &ShapNet::d_raw)
      .def_property_readonly("channels", &ShapNet::channels_in)
      .def_property_readonly("num_outputs", &ShapNet::num_outputs)
      .def_property_readonly("num_parameters", &ShapNet::num_parameters)
      .def_property_readonly("reference", &ShapNet::reference)
      .def("predict", &PredictBatch, py::arg("x"),
           "Predictions for rows of flattened d x c inputs.")
      .def(
          "explain",
          [](const ShapNet& n, const Matrix& x) {
            return ExplainedDict(n.Explain(x));
          },
          py::arg("x"),
          "Prediction, d x outputs explanation and per-layer trace for one "
          "d x c instance.")
      .def("get_parameters", &ShapNet::GetParameters)
      .def("set_parameters", &ShapNet::SetParameters, py::arg("params"))
      .def("clone", &ShapNet::Clone);

  py::class_<ShallowShapNet, ShapNet>(m, "ShallowShapNet")
      .def_static(
          "random",
          [](int d, const Matrix& reference,
             const std::vector<std::vector<int>>& active_sets, int channels,
             const std::vector<int>& hidden, const std::string& activation,
             uint64_t seed) {
            Rng rng(seed);
            return std::make_unique<ShallowShapNet>(ShallowShapNet::Random(
                d, static_cast<int>(reference.cols()), reference, active_sets,
                {channels, hidden}, ParseActivation(activation, 0.01), rng));
          },
          py::arg("d"), py::arg("reference"), py::arg("active_sets"),
          py::arg("channels") = 1, py::arg("hidden") = std::vector<int>{16},
          py::arg("activation") = "relu", py::arg("seed") = 0);

  py::class_<DeepShapNet, ShapNet>(m, "DeepShapNet")
      .def_static(
          "random",
          [](int d, const Matrix& reference,
             const std::vector<std::pair<int, std::vector<int>>>& layers,
             const std::string& activation, uint64_t seed) {
            Rng rng(seed);
            return std::make_unique<DeepShapNet>(DeepShapNet::Random(
                d, reference, ToSpecs(layers), ParseActivation(activation, 0.01),
                rng));
          },
          py::arg("d"), py::arg("reference"), py::arg("layers"),
          py::arg("activation") = "relu", py::arg("seed") = 0,
          "layers: [(channels_out, [hidden widths]), ...], one per butterfly "
          "layer.")
      .def_property_readonly("num_layers", &DeepShapNet::num_layers)
      .def(
          "pruned_forward",
          [](const DeepShapNet& n, const Matrix& x, double epsilon) {
            const PrunedOutput out = PrunedForward(n, x, epsilon);
            py::dict d;
            d["prediction"] = out.prediction;
            d["explanation"] = out.explanation;
            d["trace"] = out.trace;
            d["fraction_skipped"] = out.stats.fraction_skipped();
            d["per_layer_skipped"] = out.stats.per_layer_skipped;
            return d;
          },
          py::arg("x"), py::arg("epsilon"));

  m.def("presets", &PresetNames);
  m.def(
      "build_preset",
      [](const std::string& name, uint64_t seed) {
        const Preset p = GetPreset(name);
        return BuildNetwork(p, Matrix::Zero(p.d, 1), seed);
      },
      py::arg("name"), py::arg("seed") = 0,
      "Untrained network for a preset, reference at zero (z-scored inputs).");

  m.def(
      "generate_synthetic",
      [](int n, uint64_t seed, double noise) {
        const Dataset ds = GenerateSynthetic(n, seed, noise);
        return py::make_tuple(ds.features, ds.targets);
      },
      py::arg("n"), py::arg("seed") = 0, py::arg("noise") = 0.05);

  m.def(
      "train",
      [](ShapNet& net, const Matrix& x, const Vector& y, const std::string& task,
         int num_classes, int epochs, int batch_size, double lr,
         const std::string& reg, double lam, uint64_t seed) {
        const Dataset ds = MakeDataset(x, y, task, num_classes);
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.lr = lr;
        cfg.loss = ds.task == TaskKind::kClassification
                       ? LossKind::kSoftmaxCrossEntropy
                       : LossKind::kMse;
        cfg.reg = ParseRegKind(reg);
        cfg.lambda = lam;
        cfg.seed = seed;
        cfg.Validate();
        py::gil_scoped_release release;
        const TrainHistory h = Train(net, ds, nullptr, cfg);
        std::vector<double> losses;
        for (const EpochRecord& r : h.epochs) losses.push_back(r.train_loss);
        return losses;
      },
      py::arg("net"), py::arg("x"), py::arg("y"), py::arg("task"),
      py::arg("num_classes") = 0, py::arg("epochs") = 9,
      py::arg("batch_size") = 32, py::arg("lr") = 1e-3, py::arg("reg") = "none",
      py::arg("lam") = 0.0, py::arg("seed") = 0,
      "Trains in place; returns the per-epoch training loss (entry 0 is the "
      "untrained model).");

  m.def(
      "evaluate_metric",
      [](const ShapNet& net, const Matrix& x, const Vector& y,
         const std::string& task, int num_classes) {
        return EvaluateMetric(net, MakeDataset(x, y, task, num_classes));
      },
      py::arg("net"), py::arg("x"), py::arg("y"), py::arg("task"),
      py::arg("num_classes") = 0);

  m.def(
      "exact_shapley",
      [](const ShapNet& net, const Matrix& x) {
        return ExactShapley(AsBlackBox(net), x, net.reference());
      },
      py::arg("net"), py::arg("x"));
  m.def(
      "exact_shapley_fn",
      [](const std::function<Matrix(const Matrix&)>& fn, const Matrix& x,
         const Matrix& reference, int outputs) {
        BlackBoxFunction box{static_cast<int>(x.rows()),
                             static_cast<int>(x.cols()), outputs, fn};
        return ExactShapley(box, x, reference);
      },
      py::arg("fn"), py::arg("x"), py::arg("reference"), py::arg("outputs") = 1,
      "fn maps a batch of flattened inputs (m x d*c) to m x outputs.");
  m.def(
      "sampled_shapley",
      [](const ShapNet& net, const Matrix& x, int permutations, uint64_t seed) {
        const SampledShapleyResult r =
            SampledShapley(AsBlackBox(net), x, net.reference(), permutations, seed);
        return py::make_tuple(r.values, r.standard_error);
      },
      py::arg("net"), py::arg("x"), py::arg("permutations"), py::arg("seed") = 0);
  m.def("normalized_l1", &NormalizedL1, py::arg("phi"), py::arg("gamma"),
        py::arg("floor") = 1e-8);

  m.def(
      "attribution_stats",
      [](const std::vector<Matrix>& explanations, double tau) {
        const AttributionStats s = ComputeAttributionStats(explanations, tau);
        py::dict d;
        d["cv"] = s.cv;
        d["sparsity"] = s.sparsity;
        d["tau"] = s.tau;
        d["n_instances"] = s.n_instances;
        d["degenerate_instances"] = s.degenerate_instances;
        return d;
      },
      py::arg("explanations"), py::arg("tau") = kDefaultSparsityTau);

  m.def(
      "run_checks",
      [](int trials, uint64_t seed) {
        CheckOptions o;
        o.trials = trials;
        o.seed = seed;
        CheckOptions g = o;
        g.trials = std::max(1, trials / 5);
        py::list out;
        for (const CheckResult& c :
             {CheckShallowExactness(o), CheckLinearAggregation(o),
              CheckShallowLocalAccuracy(o), CheckDeepLocalAccuracy(o),
              CheckDeepMissingness(o), CheckPruningIdentity(o),
              CheckGradients(g, NetworkKind::kDeep),
              CheckGradients(g, NetworkKind::kShallow)}) {
          out.append(CheckDict(c));
        }
        return out;
      },
      py::arg("trials") = 20, py::arg("seed") = 0);

  m.def(
      "save_model",
      [](const ShapNet& net, const std::string& path) {
        SaveModel(net, ModelInfo{}, path);
      },
      py::arg("net"), py::arg("path"));
  m.def(
      "load_model",
      [](const std::string& path) { return std::move(LoadModel(path).net); },
      py::arg("path"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int status;
        {
          py::gil_scoped_release release;
          status = RunCli(args, out, err);
        }
        return py::make_tuple(status, out.str(), err.str());
      },
      py::arg("args"),
      "Runs a shapnet command line; returns (status, stdout, stderr).");
}
