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

#include "shapnet/serialization.h"

#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"
#include "shapnet/error.h"

namespace shapnet {
namespace {

using Json = nlohmann::json;

Json MatrixToJson(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    rows.push_back(std::vector<double>(m.row(i).begin(), m.row(i).end()));
  }
  return rows;
}

Matrix MatrixFromJson(const Json& j, Eigen::Index rows, Eigen::Index cols,
                      const std::string& what) {
  Require(j.is_array() && static_cast<Eigen::Index>(j.size()) == rows, what,
          ": expected ", rows, " rows");
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto row = j[i].get<std::vector<double>>();
    Require(static_cast<Eigen::Index>(row.size()) == cols, what, ": row ", i,
            " has ", row.size(), " entries, expected ", cols);
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = row[c];
  }
  return m;
}

Vector VectorFromJson(const Json& j, Eigen::Index size, const std::string& what) {
  const auto v = j.get<std::vector<double>>();
  Require(static_cast<Eigen::Index>(v.size()) == size, what, ": expected ",
          size, " entries, got ", v.size());
  return Eigen::Map<const Vector>(v.data(), size);
}

Json MlpToJson(const Mlp& mlp) {
  Json j;
  j["layer_dims"] = mlp.layer_dims();
  j["activation"] =
      mlp.activation().kind == ActivationKind::kReLU ? "relu" : "leaky_relu";
  j["slope"] = mlp.activation().slope;
  Json weights = Json::array();
  Json biases = Json::array();
  for (int l = 0; l < mlp.num_layers(); ++l) {
    weights.push_back(MatrixToJson(mlp.weights()[l]));
    biases.push_back(std::vector<double>(mlp.biases()[l].begin(),
                                         mlp.biases()[l].end()));
  }
  j["weights"] = weights;
  j["biases"] = biases;
  return j;
}

Mlp MlpFromJson(const Json& j) {
  const auto dims = j.at("layer_dims").get<std::vector<int>>();
  const std::string act = j.at("activation").get<std::string>();
  Activation activation;
  if (act == "relu") {
    activation = Activation::ReLU();
  } else if (act == "leaky_relu") {
    activation = Activation::LeakyReLU(j.at("slope").get<double>());
  } else {
    Fail("unknown activation '", act, "'");
  }
  Mlp mlp(dims, activation);
  const Json& weights = j.at("weights");
  const Json& biases = j.at("biases");
  Require(weights.size() == dims.size() - 1 && biases.size() == dims.size() - 1,
          "inner function has ", weights.size(), " weight layers for ",
          dims.size(), " layer dims");
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    mlp.mutable_weights()[l] =
        MatrixFromJson(weights[l], dims[l + 1], dims[l], "weights");
    mlp.mutable_biases()[l] = VectorFromJson(biases[l], dims[l + 1], "biases");
  }
  return mlp;
}

Json ModuleToJson(const ShapleyModule& m) {
  Json j;
  j["active_set"] = m.active_set().indices;
  j["channels_in"] = m.channels_in();
  j["channels_out"] = m.channels_out();
  j["reference_slice"] = std::vector<double>(m.reference_slice().begin(),
                                             m.reference_slice().end());
  j["inner"] = MlpToJson(m.inner());
  return j;
}

ShapleyModule ModuleFromJson(const Json& j, int d) {
  const auto indices = j.at("active_set").get<std::vector<int>>();
  const int c_in = j.at("channels_in").get<int>();
  const int c_out = j.at("channels_out").get<int>();
  const Vector ref = VectorFromJson(j.at("reference_slice"),
                                    static_cast<Eigen::Index>(indices.size()) * c_in,
                                    "reference_slice");
  return ShapleyModule(ActiveSet::Make(indices, d), MlpFromJson(j.at("inner")),
                       ref, c_in, c_out);
}

Json InfoToJson(const ModelInfo& info) {
  Json j;
  j["preset"] = info.preset;
  j["task"] = info.task == TaskKind::kClassification ? "classification"
                                                     : "regression";
  j["label_column"] = info.label_column;
  j["feature_names"] = info.feature_names;
  j["class_labels"] = info.class_labels;
  j["drop_columns"] = info.drop_columns;
  return j;
}

ModelInfo InfoFromJson(const Json& j) {
  ModelInfo info;
  if (j.is_null()) return info;
  info.preset = j.value("preset", "");
  const std::string task = j.value("task", "regression");
  Require(task == "regression" || task == "classification", "unknown task '",
          task, "'");
  info.task = task == "classification" ? TaskKind::kClassification
                                       : TaskKind::kRegression;
  info.label_column = j.value("label_column", "label");
  info.feature_names = j.value("feature_names", std::vector<std::string>{});
  info.class_labels = j.value("class_labels", std::vector<std::string>{});
  info.drop_columns = j.value("drop_columns", std::vector<std::string>{});
  return info;
}

}  // namespace

std::string ModelToJson(const ShapNet& net, const ModelInfo& info) {
  Json j;
  j["format_version"] = kModelFormatVersion;
  j["info"] = InfoToJson(info);
  j["d_raw"] = net.d_raw();
  j["channels_in"] = net.channels_in();
  j["reference"] = MatrixToJson(net.reference());
  if (net.kind() == NetworkKind::kShallow) {
    const auto& shallow = static_cast<const ShallowShapNet&>(net);
    j["kind"] = "shallow";
    Json modules = Json::array();
    for (const ShapleyModule& m : shallow.modules()) {
      modules.push_back(ModuleToJson(m));
    }
    j["modules"] = modules;
    j["aggregation_shape"] = {shallow.aggregation().rows(),
                              shallow.aggregation().cols()};
    j["aggregation"] = MatrixToJson(shallow.aggregation());
  } else {
    const auto& deep = static_cast<const DeepShapNet&>(net);
    j["kind"] = "deep";
    j["channel_schedule"] = deep.channel_schedule();
    Json layers = Json::array();
    for (const ShapleyTransformLayer& layer : deep.layers()) {
      Json lj;
      lj["layer_index"] = layer.layer_index;
      lj["channels_in"] = layer.channels_in;
      lj["channels_out"] = layer.channels_out;
      Json modules = Json::array();
      for (const ShapleyModule& m : layer.modules) {
        modules.push_back(ModuleToJson(m));
      }
      lj["modules"] = modules;
      layers.push_back(lj);
    }
    j["layers"] = layers;
  }
  return j.dump();
}

LoadedModel ModelFromJson(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    Fail("model file is not valid JSON: ", e.what());
  }
  try {
    const int version = j.value("format_version", 0);
    Require(version == kModelFormatVersion, "unsupported model format_version ",
            version, " (expected ", kModelFormatVersion, ")");
    LoadedModel out;
    out.info = InfoFromJson(j.value("info", Json()));
    const int d = j.at("d_raw").get<int>();
    const int c = j.at("channels_in").get<int>();
    Require(d >= 1 && c >= 1, "model has invalid d_raw/channels_in");
    Matrix reference = MatrixFromJson(j.at("reference"), d, c, "reference");
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "shallow") {
      std::vector<ShapleyModule> modules;
      for (const Json& m : j.at("modules")) modules.push_back(ModuleFromJson(m, d));
      const auto shape = j.at("aggregation_shape").get<std::vector<Eigen::Index>>();
      Require(shape.size() == 2, "aggregation_shape must have two entries");
      Matrix agg = MatrixFromJson(j.at("aggregation"), shape[0], shape[1],
                                  "aggregation");
      out.net = std::make_unique<ShallowShapNet>(d, c, std::move(reference),
                                                 std::move(modules), std::move(agg));
    } else if (kind == "deep") {
      const int d_padded = NextPowerOfTwo(d);
      std::vector<ShapleyTransformLayer> layers;
      for (const Json& lj : j.at("layers")) {
        ShapleyTransformLayer layer;
        layer.layer_index = lj.at("layer_index").get<int>();
        layer.channels_in = lj.at("channels_in").get<int>();
        layer.channels_out = lj.at("channels_out").get<int>();
        for (const Json& m : lj.at("modules")) {
          layer.modules.push_back(ModuleFromJson(m, d_padded));
          const auto& idx = layer.modules.back().active_set().indices;
          Require(idx.size() == 2, "deep modules must have two inputs");
          layer.pairs.emplace_back(idx[0], idx[1]);
        }
        layers.push_back(std::move(layer));
      }
      out.net = std::make_unique<DeepShapNet>(d, std::move(reference),
                                              std::move(layers));
    } else {
      Fail("unknown model kind '", kind, "'");
    }
    return out;
  } catch (const Json::exception& e) {
    Fail("malformed model file: ", e.what());
  }
}

void SaveModel(const ShapNet& net, const ModelInfo& info,
               const std::string& path) {
  WriteFile(path, ModelToJson(net, info));
}

LoadedModel LoadModel(const std::string& path) {
  return ModelFromJson(ReadFile(path));
}

std::string ExplanationsToCsv(const std::vector<Matrix>& explanations,
                              const std::vector<std::string>& feature_names,
                              const std::vector<std::string>& output_names) {
  std::ostringstream out;
  out.precision(17);
  out << "instance,feature";
  const Eigen::Index outputs = explanations.empty() ? 0 : explanations[0].cols();
  for (Eigen::Index c = 0; c < outputs; ++c) {
    out << ',';
    if (c < static_cast<Eigen::Index>(output_names.size())) {
      out << output_names[c];
    } else {
      out << "output_" << c;
    }
  }
  out << '\n';
  for (size_t i = 0; i < explanations.size(); ++i) {
    const Matrix& e = explanations[i];
    Require(e.cols() == outputs, "explanations disagree on output count");
    for (Eigen::Index f = 0; f < e.rows(); ++f) {
      out << i << ',';
      if (f < static_cast<Eigen::Index>(feature_names.size())) {
        out << feature_names[f];
      } else {
        out << "x" << f;
      }
      for (Eigen::Index c = 0; c < outputs; ++c) out << ',' << e(f, c);
      out << '\n';
    }
  }
  return out.str();
}

std::string TracesToCsv(const std::vector<std::vector<Matrix>>& traces) {
  std::ostringstream out;
  out.precision(17);
  out << "instance,layer,feature,channel,value\n";
  for (size_t i = 0; i < traces.size(); ++i) {
    for (size_t l = 0; l < traces[i].size(); ++l) {
      const Matrix& z = traces[i][l];
      for (Eigen::Index f = 0; f < z.rows(); ++f) {
        for (Eigen::Index c = 0; c < z.cols(); ++c) {
          out << i << ',' << l << ',' << f << ',' << c << ',' << z(f, c) << '\n';
        }
      }
    }
  }
  return out.str();
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(in.good(), "cannot open '", path, "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void WriteFile(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  Require(out.good(), "cannot write '", path, "'");
  out << contents;
  Require(out.good(), "error while writing '", path, "'");
}

}  // namespace shapnet
