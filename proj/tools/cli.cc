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

#include "cli.h"

#include <charconv>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <type_traits>
#include <utility>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "shapnet/data.h"
#include "shapnet/error.h"
#include "shapnet/evaluation.h"
#include "shapnet/oracle.h"
#include "shapnet/parallel.h"
#include "shapnet/presets.h"
#include "shapnet/pruning.h"
#include "shapnet/serialization.h"
#include "shapnet/training.h"
#include "shapnet/verification.h"

namespace shapnet {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

constexpr int kRunFormatVersion = 1;
constexpr char kVersion[] = "0.1.0";

template <class T>
struct IsVector : std::false_type {};
template <class T>
struct IsVector<std::vector<T>> : std::true_type {};

template <class T>
json ToJsonValue(const T& value) {
  return json(value);
}
template <class T>
json ToJsonValue(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

// Options of one subcommand plus a way to print their resolved values.
class OptionTable {
 public:
  explicit OptionTable(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* Add(const std::string& name, T& value, const std::string& help) {
    CLI::Option* opt = app_->add_option("--" + name, value, help);
    if constexpr (IsVector<T>::value) opt->delimiter(',');
    values_.emplace_back(name, [&value] { return ToJsonValue(value); });
    return opt;
  }

  CLI::Option* Flag(const std::string& name, bool& value,
                    const std::string& help) {
    CLI::Option* opt = app_->add_flag("--" + name, value, help);
    values_.emplace_back(name, [&value] { return json(value); });
    return opt;
  }

  bool Has(const std::string& name) const {
    for (const auto& [n, unused] : values_) {
      if (n == name) return true;
    }
    return false;
  }

  json ToJson() const {
    json j = json::object();
    for (const auto& [name, get] : values_) j[name] = get();
    return j;
  }

  // key=value lines readable by --config; unset options are left out.
  std::string ToIni() const {
    std::ostringstream out;
    for (const auto& [name, get] : values_) {
      const json v = get();
      if (v.is_null() || name == "config") continue;
      out << name << '=';
      if (v.is_array()) {
        for (size_t i = 0; i < v.size(); ++i) {
          out << (i ? "," : "") << (v[i].is_string() ? v[i].get<std::string>()
                                                     : v[i].dump());
        }
      } else {
        out << (v.is_string() ? v.get<std::string>() : v.dump());
      }
      out << '\n';
    }
    return out.str();
  }

  CLI::App* app() const { return app_; }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<json()>>> values_;
};

struct Common {
  std::string config;
  uint64_t seed = 0;
  std::string out = ".";
  int threads = 1;
};

void AddCommon(OptionTable& table, Common& common) {
  table.Add("config", common.config,
            "key=value file of option defaults; command-line flags win")
      ->check(CLI::ExistingFile);
  table.Add("seed", common.seed, "base random seed");
  table.Add("out", common.out, "output directory (created if missing)");
  table.Add("threads", common.threads, "worker threads")
      ->check(CLI::PositiveNumber);
}

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

// Flat key=value lines; '#' and ';' start comment lines.
std::vector<std::pair<std::string, std::string>> ReadConfigFile(
    const std::string& path) {
  std::ifstream in(path);
  Require(in.good(), "cannot open config file '", path, "'");
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = Trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    const auto eq = line.find('=');
    Require(eq != std::string::npos, "config file '", path, "' line ", line_no,
            ": expected key=value");
    std::string key = Trim(line.substr(0, eq));
    std::string value = Trim(line.substr(eq + 1));
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    Require(!key.empty(), "config file '", path, "' line ", line_no,
            ": empty key");
    entries.emplace_back(key, value);
  }
  return entries;
}

bool GivenOnCommandLine(const std::vector<std::string>& args,
                        const std::string& key) {
  const std::string flag = "--" + key;
  for (const std::string& a : args) {
    if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
  }
  return false;
}

std::string ConfigPathFromArgs(const std::vector<std::string>& args) {
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return "";
}

// Inserts `--key=value` for config entries not given explicitly, right after
// the subcommand name.
std::vector<std::string> InjectConfig(const std::vector<std::string>& args,
                                      size_t sub_pos,
                                      const OptionTable& table) {
  const std::string path = ConfigPathFromArgs(args);
  if (path.empty()) return args;
  std::vector<std::string> injected;
  for (const auto& [key, value] : ReadConfigFile(path)) {
    Require(key != "config", "config file '", path, "' cannot set 'config'");
    Require(table.Has(key), "config file '", path, "': unknown key '", key,
            "' for ", table.app()->get_name());
    if (!GivenOnCommandLine(args, key)) injected.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> result(args.begin(), args.begin() + sub_pos + 1);
  result.insert(result.end(), injected.begin(), injected.end());
  result.insert(result.end(), args.begin() + sub_pos + 1, args.end());
  return result;
}

// Output directory bookkeeping shared by all subcommands.
class Run {
 public:
  Run(std::string command, const Common& common, std::ostream& out)
      : command_(std::move(command)),
        dir_(common.out),
        out_(out),
        start_(std::chrono::steady_clock::now()) {
    fs::create_directories(dir_);
  }

  std::string Path(const std::string& file) {
    outputs_.push_back(file);
    return (dir_ / file).string();
  }

  void Write(const std::string& file, const std::string& contents) {
    WriteFile(Path(file), contents);
  }

  void WriteJson(const std::string& file, json j) {
    j["format_version"] = kRunFormatVersion;
    Write(file, j.dump(2) + "\n");
  }

  // Records the resolved configuration and the list of outputs.
  void Finish(const OptionTable& table, json summary) {
    WriteFile((dir_ / "config.ini").string(),
              "# shapnet " + command_ + "\n" + table.ToIni());
    outputs_.push_back("config.ini");
    json run;
    run["format_version"] = kRunFormatVersion;
    run["version"] = kVersion;
    run["command"] = command_;
    run["config"] = table.ToJson();
    run["summary"] = std::move(summary);
    run["elapsed_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    outputs_.push_back("run.json");
    run["outputs"] = outputs_;
    WriteFile((dir_ / "run.json").string(), run.dump(2) + "\n");
    out_ << "wrote " << outputs_.size() << " files to " << dir_.string() << "\n";
  }

 private:
  std::string command_;
  fs::path dir_;
  std::ostream& out_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
};

std::string Fmt(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

std::string CsvDouble(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------
// Model inputs.

struct ModelInput {
  std::string model;
  std::string input;
  std::string stats;
};

void AddModelInput(OptionTable& table, ModelInput& mi, bool input_required) {
  table.Add("model", mi.model, "model.json written by train")
      ->required()
      ->check(CLI::ExistingFile);
  CLI::Option* input =
      table.Add("input", mi.input, "CSV with the model's feature columns");
  input->check(CLI::ExistingFile);
  if (input_required) input->required();
  table.Add("stats", mi.stats,
            "normalization.json (default: next to the model file)");
}

bool HeaderHasColumn(const std::string& path, const std::string& column) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line) && Trim(line).empty()) {
  }
  std::stringstream cells(line);
  std::string cell;
  while (std::getline(cells, cell, ',')) {
    cell = Trim(cell);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"') {
      cell = cell.substr(1, cell.size() - 2);
    }
    if (cell == column) return true;
  }
  return false;
}

struct Loaded {
  LoadedModel model;
  Dataset data;  // normalized features
  bool has_labels = false;
};

Loaded LoadModelAndInput(const ModelInput& mi) {
  Loaded l;
  l.model = LoadModel(mi.model);
  const ModelInfo& info = l.model.info;
  const std::string stats_path =
      mi.stats.empty()
          ? (fs::path(mi.model).parent_path() / "normalization.json").string()
          : mi.stats;
  Require(fs::exists(stats_path), "normalization stats '", stats_path,
          "' not found; pass --stats");
  const NormalizationStats stats =
      NormalizationStats::FromJson(ReadFile(stats_path));
  Require(!info.feature_names.empty(), "model file has no feature names");
  CsvOptions csv;
  csv.label_column = info.label_column;
  csv.task = info.task;
  csv.feature_columns = info.feature_names;
  csv.class_labels = info.class_labels;
  csv.label_optional = true;
  l.data = LoadCsv(mi.input, csv);
  l.has_labels = HeaderHasColumn(mi.input, info.label_column);
  Require(stats.mean.size() == l.data.d(), "normalization stats have ",
          stats.mean.size(), " features, model input has ", l.data.d());
  Require(l.model.net->d_raw() * l.model.net->channels_in() == l.data.d(),
          "model expects ", l.model.net->d_raw() * l.model.net->channels_in(),
          " input values per row, input has ", l.data.d());
  l.data.features = stats.Apply(l.data.features);
  return l;
}

Matrix Instance(const ShapNet& net, const Dataset& data, int row) {
  return data.features.row(row).reshaped<Eigen::RowMajor>(net.d_raw(),
                                                          net.channels_in());
}

std::vector<std::string> OutputNames(const ModelInfo& info, int outputs) {
  if (info.task == TaskKind::kClassification &&
      static_cast<int>(info.class_labels.size()) == outputs) {
    return info.class_labels;
  }
  if (outputs == 1) return {"prediction"};
  std::vector<std::string> names;
  for (int j = 0; j < outputs; ++j) names.push_back("output_" + std::to_string(j));
  return names;
}

std::vector<Explained> ExplainAll(const ShapNet& net, const Dataset& data,
                                  int count, int threads) {
  std::vector<Explained> result(count);
  ParallelFor(count, threads, [&](int i) {
    result[i] = net.Explain(Instance(net, data, i));
  });
  return result;
}

int Limit(int requested, int n) {
  return requested > 0 ? std::min(requested, n) : n;
}

// ---------------------------------------------------------------------------
// synth-data

struct SynthArgs {
  Common common;
  int n = 10000;
  double noise = 0.05;
};

void AddSynth(OptionTable& t, SynthArgs& a) {
  AddCommon(t, a.common);
  t.Add("n", a.n, "number of rows")->check(CLI::PositiveNumber);
  t.Add("noise", a.noise, "standard deviation of the additive target noise")
      ->check(CLI::NonNegativeNumber);
}

int RunSynth(const SynthArgs& a, const OptionTable& t, std::ostream& out) {
  Run run("synth-data", a.common, out);
  const Dataset ds = GenerateSynthetic(a.n, a.common.seed, a.noise);
  run.Write("data.csv", FormatCsv(ds, "y"));
  out << "generated " << ds.n() << " rows with " << ds.d() << " features\n";
  run.Finish(t, {{"n", ds.n()}, {"d", ds.d()}});
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  Common common;
  std::string preset;
  std::string data;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<std::string> reg;
  std::optional<double> lambda;
  std::optional<int> folds;
  std::optional<double> train_fraction;
};

void AddTrain(OptionTable& t, TrainArgs& a) {
  AddCommon(t, a.common);
  std::string names;
  for (const std::string& n : PresetNames()) names += (names.empty() ? "" : ", ") + n;
  t.Add("preset", a.preset, "one of: " + names)->required();
  t.Add("data", a.data,
        "dataset CSV (default: the preset's file; synthetic presets generate)");
  t.Add("epochs", a.epochs, "override the preset's epoch count");
  t.Add("batch-size", a.batch_size, "override the batch size");
  t.Add("lr", a.lr, "override the Adam learning rate");
  t.Add("reg", a.reg, "none, l1_output, l1_all_layers or linf_output");
  t.Add("lambda", a.lambda, "regularization strength");
  t.Add("folds", a.folds, "k-fold cross-validation report (0 disables)");
  t.Add("train-fraction", a.train_fraction,
        "fraction of rows in the training split");
}

json HistoryJson(const TrainHistory& h) {
  const EpochRecord& last = h.epochs.back();
  return {{"final_train_loss", last.train_loss}};
}

int RunTrain(const TrainArgs& a, const OptionTable& t, std::ostream& out) {
  Preset preset = GetPreset(a.preset);
  TrainConfig cfg = preset.train;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.batch_size) cfg.batch_size = *a.batch_size;
  if (a.lr) cfg.lr = *a.lr;
  if (a.reg) cfg.reg = ParseRegKind(*a.reg);
  if (a.lambda) cfg.lambda = *a.lambda;
  if (a.reg && cfg.reg == RegKind::kNone && !a.lambda) cfg.lambda = 0.0;
  if (a.folds) cfg.folds = *a.folds;
  const double fraction = a.train_fraction.value_or(preset.train_fraction);
  Require(fraction > 0.0 && fraction < 1.0, "train-fraction must be in (0, 1)");
  cfg.Validate();

  Run run("train", a.common, out);
  const uint64_t seed = a.common.seed;
  const Dataset ds = LoadPresetData(preset, a.data, seed);
  const bool classify = ds.task == TaskKind::kClassification;
  const std::string metric_name = classify ? "accuracy" : "mse";
  const Matrix reference = Matrix::Zero(preset.d, 1);
  PresetRun trained = TrainPreset(preset, ds, fraction, cfg, seed);
  const SplitResult& split = trained.split;
  const ShapNet& net = *trained.net;
  const TrainHistory& history = trained.history;

  json metrics;
  metrics["preset"] = preset.name;
  metrics["metric"] = metric_name;
  metrics["n_train"] = split.train.n();
  metrics["n_test"] = split.test.n();
  metrics["cv"] = nullptr;
  if (cfg.folds >= 2) {
    TrainConfig cv_cfg = cfg;
    cv_cfg.seed = seed + 4;
    const CrossValidationResult cv = CrossValidate(
        ds,
        [&](const Dataset&, uint64_t s) { return BuildNetwork(preset, reference, s); },
        cv_cfg);
    std::ostringstream csv;
    csv << "fold,train_size,test_size," << metric_name << "\n";
    json per_fold = json::array();
    for (const FoldResult& f : cv.folds) {
      csv << f.fold << ',' << f.train_size << ',' << f.test_size << ','
          << CsvDouble(f.metric) << "\n";
      per_fold.push_back(f.metric);
    }
    run.Write("cv.csv", csv.str());
    metrics["cv"] = {{"folds", cfg.folds}, {"per_fold", per_fold},
                     {"mean", cv.mean_metric}};
    out << cfg.folds << "-fold CV " << metric_name << " " << Fmt(cv.mean_metric)
        << "\n";
  }

  const double test_metric = EvaluateMetric(net, split.test);
  metrics["test_metric"] = test_metric;
  metrics["train_metric"] = EvaluateMetric(net, split.train);
  metrics["num_parameters"] = net.num_parameters();
  metrics["train"] = {{"epochs", cfg.epochs},   {"batch_size", cfg.batch_size},
                      {"lr", cfg.lr},           {"loss", ToString(cfg.loss)},
                      {"reg", ToString(cfg.reg)}, {"lambda", cfg.lambda}};
  metrics["history"] = HistoryJson(history);

  ModelInfo info;
  info.preset = preset.name;
  info.task = ds.task;
  info.label_column = preset.csv.label_column;
  info.feature_names = ds.feature_names;
  info.class_labels = ds.class_labels;
  info.drop_columns = preset.csv.drop_columns;
  SaveModel(net, info, run.Path("model.json"));
  run.Write("normalization.json", split.stats.ToJson());
  run.Write("history.csv", history.ToCsv());
  run.Write("test.csv", FormatCsv(ds.Subset(split.test_rows),
                                  preset.csv.label_column));
  run.WriteJson("metrics.json", metrics);
  out << "preset " << preset.name << ": test " << metric_name << " "
      << Fmt(test_metric) << " (n=" << split.test.n() << ")\n";
  run.Finish(t, metrics);
  return 0;
}

// ---------------------------------------------------------------------------
// explain

struct ExplainArgs {
  Common common;
  ModelInput mi;
  bool trace = false;
};

void AddExplain(OptionTable& t, ExplainArgs& a) {
  AddCommon(t, a.common);
  AddModelInput(t, a.mi, true);
  t.Flag("trace", a.trace, "also write every layer's representation");
}

int RunExplain(const ExplainArgs& a, const OptionTable& t, std::ostream& out) {
  const Loaded l = LoadModelAndInput(a.mi);
  const ShapNet& net = *l.model.net;
  Run run("explain", a.common, out);
  const std::vector<Explained> expl =
      ExplainAll(net, l.data, l.data.n(), a.common.threads);
  const std::vector<std::string> outputs =
      OutputNames(l.model.info, net.num_outputs());

  std::vector<Matrix> phis;
  for (const Explained& e : expl) phis.push_back(e.explanation);
  run.Write("explanations.csv",
            ExplanationsToCsv(phis, l.model.info.feature_names, outputs));

  const bool classify = l.model.info.task == TaskKind::kClassification;
  std::ostringstream pred;
  pred << "instance";
  for (const std::string& o : outputs) pred << ',' << o;
  if (classify) pred << ",predicted";
  pred << "\n";
  for (size_t i = 0; i < expl.size(); ++i) {
    pred << i;
    for (Eigen::Index j = 0; j < expl[i].prediction.size(); ++j) {
      pred << ',' << CsvDouble(expl[i].prediction[j]);
    }
    if (classify) {
      Eigen::Index arg = 0;
      expl[i].prediction.maxCoeff(&arg);
      pred << ',' << outputs[arg];
    }
    pred << "\n";
  }
  run.Write("predictions.csv", pred.str());

  if (a.trace) {
    std::vector<std::vector<Matrix>> traces;
    for (const Explained& e : expl) traces.push_back(e.trace);
    run.Write("trace.csv", TracesToCsv(traces));
  }
  out << "explained " << expl.size() << " instances\n";
  run.Finish(t, {{"n_instances", expl.size()}});
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  Common common;
  ModelInput mi;
  double tau = kDefaultSparsityTau;
  int random_repeats = 5;
  int max_instances = 0;
  std::vector<int> ks;
};

void AddEvaluate(OptionTable& t, EvaluateArgs& a) {
  AddCommon(t, a.common);
  AddModelInput(t, a.mi, true);
  t.Add("tau", a.tau, "sparsity threshold on |attribution|")
      ->check(CLI::NonNegativeNumber);
  t.Add("random-repeats", a.random_repeats,
        "random removal orders per instance")
      ->check(CLI::PositiveNumber);
  t.Add("max-instances", a.max_instances, "use only the first N rows (0: all)");
  t.Add("ks", a.ks, "removal counts (default: 0..d)");
}

int RunEvaluate(const EvaluateArgs& a, const OptionTable& t,
                std::ostream& out) {
  const Loaded l = LoadModelAndInput(a.mi);
  const ShapNet& net = *l.model.net;
  Run run("evaluate", a.common, out);
  const int n = Limit(a.max_instances, l.data.n());
  const std::vector<Explained> expl =
      ExplainAll(net, l.data, n, a.common.threads);

  json metrics;
  metrics["n_instances"] = n;
  if (l.has_labels) {
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    const std::string name =
        l.model.info.task == TaskKind::kClassification ? "accuracy" : "mse";
    metrics["metric"] = name;
    metrics["value"] = EvaluateMetric(net, l.data.Subset(rows));
    out << name << " " << Fmt(metrics["value"].get<double>()) << "\n";
  }
  std::vector<Matrix> phis;
  for (const Explained& e : expl) phis.push_back(e.explanation);
  const AttributionStats stats = ComputeAttributionStats(phis, a.tau);
  metrics["attribution"] = json::parse(stats.ToJson());
  out << "attribution cv " << Fmt(stats.cv) << ", sparsity "
      << Fmt(stats.sparsity) << "\n";

  if (net.num_outputs() >= 2) {
    std::vector<int> ks = a.ks;
    if (ks.empty()) {
      for (int k = 0; k <= net.d_raw(); ++k) ks.push_back(k);
    }
    const int repeats = a.random_repeats;
    struct PerInstance {
      RemovalCurve top, least;
      std::vector<RemovalCurve> random_logit, random_change;
    };
    std::vector<PerInstance> per(n);
    ParallelFor(n, a.common.threads, [&](int i) {
      const Matrix x = Instance(net, l.data, i);
      const Matrix& phi = expl[i].explanation;
      per[i].top = TopKRemovalCurve(net, x, phi, ks);
      per[i].least = LeastKRemovalCurve(net, x, phi, ks);
      for (int r = 0; r < repeats; ++r) {
        const uint64_t s = FoldSeed(a.common.seed, i) + r;
        per[i].random_logit.push_back(
            TopKRemovalCurve(net, x, phi, ks, RemovalOrder::kRandom, s));
        per[i].random_change.push_back(
            LeastKRemovalCurve(net, x, phi, ks, RemovalOrder::kRandom, s));
      }
    });
    std::vector<RemovalCurve> top, least, rl, rc;
    for (const PerInstance& p : per) {
      top.push_back(p.top);
      least.push_back(p.least);
      rl.insert(rl.end(), p.random_logit.begin(), p.random_logit.end());
      rc.insert(rc.end(), p.random_change.begin(), p.random_change.end());
    }
    std::ostringstream csv;
    csv << "ordering,metric,k,value\n";
    auto emit = [&](const RemovalCurve& c, const std::string& metric) {
      for (size_t j = 0; j < c.ks.size(); ++j) {
        csv << ToString(c.ordering) << ',' << metric << ',' << c.ks[j] << ','
            << CsvDouble(c.metric_values[j]) << "\n";
      }
    };
    emit(AverageCurves(top), "class_logit");
    emit(AverageCurves(rl), "class_logit");
    emit(AverageCurves(least), "relative_change");
    emit(AverageCurves(rc), "relative_change");
    run.Write("removal_curves.csv", csv.str());
  }
  run.WriteJson("metrics.json", metrics);
  run.Finish(t, metrics);
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  Common common;
  ModelInput mi;
  // Property suite.
  int trials = 100;
  int forwards = 1000;
  int grad_seeds = 20;
  int oracle_trials = 20;
  int oracle_permutations = 10000;
  std::vector<int> dims = {4, 8, 12};
  std::vector<int> deep_dims = {3, 4, 6, 8, 12, 16};
  // Model fidelity.
  std::string oracle = "auto";
  int permutations = 100000;
  int max_instances = 100;
  double threshold = 0.1;
};

void AddVerify(OptionTable& t, VerifyArgs& a) {
  AddCommon(t, a.common);
  t.Add("model", a.mi.model,
        "check this trained model against the oracle instead of running the "
        "property suite")
      ->check(CLI::ExistingFile);
  t.Add("input", a.mi.input, "instances for the fidelity check")
      ->check(CLI::ExistingFile);
  t.Add("stats", a.mi.stats, "normalization.json (default: next to the model)");
  t.Add("trials", a.trials, "random shallow networks per check")
      ->check(CLI::PositiveNumber);
  t.Add("forwards", a.forwards, "random deep forwards per check")
      ->check(CLI::PositiveNumber);
  t.Add("grad-seeds", a.grad_seeds, "networks in the gradient check")
      ->check(CLI::PositiveNumber);
  t.Add("oracle-trials", a.oracle_trials, "networks in the sampled-oracle check")
      ->check(CLI::PositiveNumber);
  t.Add("oracle-permutations", a.oracle_permutations,
        "permutations in the sampled-oracle check")
      ->check(CLI::PositiveNumber);
  t.Add("dims", a.dims, "feature counts for shallow and oracle checks");
  t.Add("deep-dims", a.deep_dims, "feature counts for deep checks");
  t.Add("oracle", a.oracle, "auto, exact or sampled")
      ->check(CLI::IsMember({"auto", "exact", "sampled"}));
  t.Add("permutations", a.permutations, "sampled oracle permutations")
      ->check(CLI::PositiveNumber);
  t.Add("max-instances", a.max_instances, "fidelity instances (0: all)");
  t.Add("threshold", a.threshold, "largest acceptable mean normalized l1");
}

int RunVerify(const VerifyArgs& a, const OptionTable& t, std::ostream& out,
              std::ostream& err) {
  if (!a.mi.model.empty()) {
    Require(!a.mi.input.empty(), "--model needs --input");
    const Loaded l = LoadModelAndInput(a.mi);
    const ShapNet& net = *l.model.net;
    Run run("verify", a.common, out);
    const int n = Limit(a.max_instances, l.data.n());
    FidelityOptions fo;
    fo.method = a.oracle == "sampled" ||
                        (a.oracle == "auto" && net.d_raw() > kMaxExactFeatures)
                    ? OracleMethod::kSampled
                    : OracleMethod::kExact;
    fo.permutations = a.permutations;
    fo.seed = a.common.seed;
    fo.threads = a.common.threads;
    const VerificationReport report =
        ExplanationFidelity(net, l.data.features.topRows(n), fo, a.mi.model);
    json j = json::parse(report.ToJson());
    j["threshold"] = a.threshold;
    j["passed"] = report.mean_error() <= a.threshold;
    run.Write("fidelity.json", j.dump(2) + "\n");
    out << report.method << " oracle, " << n << " instances: mean normalized l1 "
        << Fmt(report.mean_error()) << ", max " << Fmt(report.max_error())
        << "\n";
    run.Finish(t, j);
    if (!j["passed"].get<bool>()) {
      err << "shapnet verify: mean error " << Fmt(report.mean_error())
          << " exceeds threshold " << Fmt(a.threshold) << "\n";
      return 1;
    }
    return 0;
  }

  Run run("verify", a.common, out);
  CheckOptions base;
  base.seed = a.common.seed;
  base.threads = a.common.threads;
  base.dims = a.dims;
  CheckOptions shallow = base;
  shallow.trials = a.trials;
  CheckOptions deep = base;
  deep.trials = a.forwards;
  deep.dims = a.deep_dims;
  CheckOptions grads = base;
  grads.trials = a.grad_seeds;
  CheckOptions oracle = base;
  oracle.trials = a.oracle_trials;

  const std::vector<CheckResult> checks = {
      CheckShallowExactness(shallow),
      CheckLinearAggregation(shallow),
      CheckShallowLocalAccuracy(shallow),
      CheckDeepLocalAccuracy(deep),
      CheckDeepMissingness(deep),
      CheckPruningIdentity(deep),
      CheckGradients(grads, NetworkKind::kDeep),
      CheckGradients(grads, NetworkKind::kShallow),
      CheckSampledOracle(oracle, a.oracle_permutations),
  };
  std::vector<std::string> failed;
  for (const CheckResult& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << " measured "
        << Fmt(c.measured) << " tolerance " << Fmt(c.tolerance) << " ("
        << c.detail << ")\n";
    if (!c.passed) failed.push_back(c.name);
  }
  const std::string report = ChecksToJson(checks);
  run.Write("verify.json", report + "\n");
  run.Finish(t, json::parse(report));
  if (!failed.empty()) {
    std::string names;
    for (const std::string& f : failed) names += (names.empty() ? "" : ", ") + f;
    err << "shapnet verify: failed checks: " << names << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// prune

struct PruneArgs {
  Common common;
  ModelInput mi;
  std::vector<double> epsilons = {0.0, 1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0};
};

void AddPrune(OptionTable& t, PruneArgs& a) {
  AddCommon(t, a.common);
  AddModelInput(t, a.mi, true);
  t.Add("epsilons", a.epsilons, "clamp thresholds on per-feature l1 norms");
}

int RunPrune(const PruneArgs& a, const OptionTable& t, std::ostream& out) {
  const Loaded l = LoadModelAndInput(a.mi);
  const auto* deep = dynamic_cast<const DeepShapNet*>(l.model.net.get());
  Require(deep != nullptr, "prune needs a deep model");
  Require(l.has_labels, "prune needs a labelled input (column '",
          l.model.info.label_column, "')");
  Run run("prune", a.common, out);
  const PruneCurve curve = PruneSweep(*deep, l.data, a.epsilons, a.common.threads);
  run.Write("prune_curve.csv", curve.ToCsv());
  json points = json::array();
  for (const PrunePoint& p : curve.points) {
    points.push_back({{"epsilon", p.epsilon},
                      {"mean_fraction_skipped", p.mean_fraction_skipped},
                      {"metric", p.metric}});
    out << "epsilon " << Fmt(p.epsilon) << ": skipped "
        << Fmt(p.mean_fraction_skipped) << ", " << curve.metric_name << " "
        << Fmt(p.metric) << "\n";
  }
  json j = {{"metric", curve.metric_name},
            {"unpruned_metric", curve.unpruned_metric},
            {"points", points}};
  run.WriteJson("prune.json", j);
  run.Finish(t, j);
  return 0;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Shapley explanation networks: train, explain, verify, prune",
               "shapnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  SynthArgs synth;
  TrainArgs train;
  ExplainArgs explain;
  EvaluateArgs evaluate;
  VerifyArgs verify;
  PruneArgs prune;
  OptionTable synth_t(app.add_subcommand(
      "synth-data", "generate the synthetic regression dataset"));
  OptionTable train_t(app.add_subcommand("train", "train a preset network"));
  OptionTable explain_t(app.add_subcommand(
      "explain", "write intrinsic explanations for each input row"));
  OptionTable evaluate_t(app.add_subcommand(
      "evaluate", "accuracy, attribution statistics and removal curves"));
  OptionTable verify_t(app.add_subcommand(
      "verify", "property checks, or oracle fidelity of a trained model"));
  OptionTable prune_t(app.add_subcommand(
      "prune", "sweep dynamic pruning thresholds on a deep model"));
  AddSynth(synth_t, synth);
  AddTrain(train_t, train);
  AddExplain(explain_t, explain);
  AddEvaluate(evaluate_t, evaluate);
  AddVerify(verify_t, verify);
  AddPrune(prune_t, prune);
  const std::vector<const OptionTable*> tables = {
      &synth_t, &train_t, &explain_t, &evaluate_t, &verify_t, &prune_t};

  std::string command = "shapnet";
  try {
    std::vector<std::string> full = args;
    for (size_t i = 0; i < args.size(); ++i) {
      if (args[i].rfind("-", 0) == 0) continue;
      for (const OptionTable* t : tables) {
        if (t->app()->get_name() == args[i]) {
          command += " " + args[i];
          full = InjectConfig(args, i, *t);
        }
      }
      break;
    }
    std::vector<const char*> argv = {"shapnet"};
    for (const std::string& a : full) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out, err);
    }
    if (synth_t.app()->parsed()) return RunSynth(synth, synth_t, out);
    if (train_t.app()->parsed()) return RunTrain(train, train_t, out);
    if (explain_t.app()->parsed()) return RunExplain(explain, explain_t, out);
    if (evaluate_t.app()->parsed()) return RunEvaluate(evaluate, evaluate_t, out);
    if (verify_t.app()->parsed()) return RunVerify(verify, verify_t, out, err);
    if (prune_t.app()->parsed()) return RunPrune(prune, prune_t, out);
  } catch (const std::exception& e) {
    err << command << ": error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace shapnet
