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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "nlohmann/json.hpp"
#include "shapnet/data.h"
#include "shapnet/serialization.h"

namespace shapnet {
namespace {

namespace fs = std::filesystem;
using ::testing::HasSubstr;

struct Result {
  int status = 0;
  std::string out;
  std::string err;
};

Result Cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  Result r;
  r.status = RunCli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

nlohmann::json ReadJson(const fs::path& path) {
  return nlohmann::json::parse(ReadFile(path.string()));
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("shapnet_cli_" + std::string(::testing::UnitTest::GetInstance()
                                             ->current_test_info()
                                             ->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Dir(const std::string& sub) const { return (dir_ / sub).string(); }

  // Small synthetic model trained through the CLI.
  void TrainSynthetic() {
    ASSERT_EQ(Cli({"synth-data", "--n", "300", "--out", Dir("data")}).status, 0);
    const Result r = Cli({"train", "--preset", "synthetic", "--data",
                          Dir("data") + "/data.csv", "--epochs", "2",
                          "--out", Dir("model")});
    ASSERT_EQ(r.status, 0) << r.err;
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpAndVersion) {
  Result r = Cli({"--help"});
  EXPECT_EQ(r.status, 0);
  for (const char* sub : {"synth-data", "train", "explain", "evaluate", "verify",
                          "prune"}) {
    EXPECT_THAT(r.out, HasSubstr(sub));
  }
  r = Cli({"train", "--help"});
  EXPECT_EQ(r.status, 0);
  EXPECT_THAT(r.out, HasSubstr("--threads"));
  EXPECT_THAT(r.out, HasSubstr("breast-cancer"));
  EXPECT_EQ(Cli({"--version"}).status, 0);
}

TEST_F(CliTest, UsageErrorsAreNonzero) {
  EXPECT_NE(Cli({}).status, 0);
  EXPECT_NE(Cli({"frobnicate"}).status, 0);
  EXPECT_NE(Cli({"train"}).status, 0);
  const Result r = Cli({"train", "--preset", "nope", "--out", Dir("x")});
  EXPECT_EQ(r.status, 1);
  EXPECT_THAT(r.err, HasSubstr("shapnet train: error: unknown preset 'nope'"));
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(CliTest, SynthDataWritesCsvAndRunRecord) {
  const Result r =
      Cli({"synth-data", "--n", "25", "--seed", "4", "--out", Dir("s")});
  ASSERT_EQ(r.status, 0) << r.err;
  const Dataset ds =
      LoadCsv(Dir("s") + "/data.csv",
              {.label_column = "y", .task = TaskKind::kRegression});
  EXPECT_EQ(ds.n(), 25);
  EXPECT_EQ(ds.d(), 16);
  EXPECT_EQ(ds.features, GenerateSynthetic(25, 4).features);

  const auto run = ReadJson(dir_ / "s" / "run.json");
  EXPECT_EQ(run["format_version"], 1);
  EXPECT_EQ(run["command"], "synth-data");
  EXPECT_EQ(run["config"]["n"], 25);
  EXPECT_EQ(run["config"]["seed"], 4);
  EXPECT_THAT(run["outputs"].dump(), HasSubstr("data.csv"));
}

TEST_F(CliTest, ConfigFileDefaultsAndFlagPrecedence) {
  fs::create_directories(dir_);
  std::ofstream(dir_ / "c.ini") << "# comment\nn = 12\nnoise=0\nseed='9'\n";
  Result r = Cli({"synth-data", "--config", Dir("c.ini"), "--n", "5", "--out",
                  Dir("a")});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto run = ReadJson(dir_ / "a" / "run.json");
  EXPECT_EQ(run["config"]["n"], 5);
  EXPECT_EQ(run["config"]["seed"], 9);
  EXPECT_EQ(run["config"]["noise"], 0.0);

  // The written config reproduces the run.
  r = Cli({"synth-data", "--config", Dir("a") + "/config.ini", "--out",
           Dir("b")});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_EQ(ReadFile(Dir("a") + "/data.csv"), ReadFile(Dir("b") + "/data.csv"));

  std::ofstream(dir_ / "bad.ini") << "bogus=1\n";
  r = Cli({"synth-data", "--config", Dir("bad.ini"), "--out", Dir("c")});
  EXPECT_EQ(r.status, 1);
  EXPECT_THAT(r.err, HasSubstr("unknown key 'bogus'"));
}

TEST_F(CliTest, TrainExplainEvaluateRoundTrip) {
  TrainSynthetic();
  for (const char* f : {"model.json", "normalization.json", "history.csv",
                        "metrics.json", "test.csv", "config.ini", "run.json"}) {
    EXPECT_TRUE(fs::exists(dir_ / "model" / f)) << f;
  }
  const auto metrics = ReadJson(dir_ / "model" / "metrics.json");
  EXPECT_EQ(metrics["metric"], "mse");
  EXPECT_EQ(metrics["n_train"], 225);
  EXPECT_EQ(metrics["n_test"], 75);
  EXPECT_TRUE(metrics["test_metric"].is_number());

  Result r = Cli({"explain", "--model", Dir("model") + "/model.json", "--input",
                  Dir("model") + "/test.csv", "--trace", "--out", Dir("ex")});
  ASSERT_EQ(r.status, 0) << r.err;
  const std::string expl = ReadFile(Dir("ex") + "/explanations.csv");
  EXPECT_EQ(expl.substr(0, expl.find('\n')), "instance,feature,prediction");
  // 75 instances x 16 features plus the header.
  EXPECT_EQ(std::count(expl.begin(), expl.end(), '\n'), 75 * 16 + 1);
  EXPECT_TRUE(fs::exists(dir_ / "ex" / "trace.csv"));

  // Local accuracy survives the CSV round trip.
  std::istringstream pred(ReadFile(Dir("ex") + "/predictions.csv"));
  std::string line;
  std::getline(pred, line);
  std::getline(pred, line);
  const double p0 = std::stod(line.substr(line.find(',') + 1));
  std::istringstream ex(expl);
  std::getline(ex, line);
  double sum = 0.0;
  for (int j = 0; j < 16; ++j) {
    std::getline(ex, line);
    sum += std::stod(line.substr(line.rfind(',') + 1));
  }
  EXPECT_NEAR(sum, p0, 1e-12);

  r = Cli({"evaluate", "--model", Dir("model") + "/model.json", "--input",
           Dir("model") + "/test.csv", "--out", Dir("ev")});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto ev = ReadJson(dir_ / "ev" / "metrics.json");
  EXPECT_EQ(ev["metric"], "mse");
  EXPECT_NEAR(ev["value"].get<double>(), metrics["test_metric"].get<double>(),
              1e-12);
  EXPECT_EQ(ev["attribution"]["n_instances"], 75);
}

TEST_F(CliTest, ClassificationPipeline) {
  // Two separable classes with string labels in a custom file.
  fs::create_directories(dir_);
  {
    std::ofstream f(dir_ / "toy.csv");
    for (int j = 0; j < 30; ++j) f << 'f' << j << ',';
    f << "diagnosis\n";
    for (int i = 0; i < 80; ++i) {
      const double s = i % 2 ? 1.0 : -1.0;
      for (int j = 0; j < 30; ++j) f << s * (0.5 + 0.01 * ((i * 7 + j) % 13)) << ',';
      f << (i % 2 ? "in" : "out") << '\n';
    }
  }
  // The breast-cancer preset has d = 30, two classes, label "diagnosis".
  Result r = Cli({"train", "--preset", "breast-cancer", "--data", Dir("toy.csv"),
                  "--epochs", "3", "--folds", "2", "--out", Dir("m")});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto metrics = ReadJson(dir_ / "m" / "metrics.json");
  EXPECT_EQ(metrics["metric"], "accuracy");
  EXPECT_EQ(metrics["cv"]["folds"], 2);
  EXPECT_EQ(metrics["cv"]["per_fold"].size(), 2u);
  EXPECT_TRUE(fs::exists(dir_ / "m" / "cv.csv"));

  const std::string model = Dir("m") + "/model.json";
  const std::string test = Dir("m") + "/test.csv";
  r = Cli({"explain", "--model", model, "--input", test, "--out", Dir("ex")});
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_THAT(ReadFile(Dir("ex") + "/predictions.csv"),
              HasSubstr("instance,out,in,predicted"));

  r = Cli({"evaluate", "--model", model, "--input", test, "--ks", "0,1,30",
           "--out", Dir("ev")});
  ASSERT_EQ(r.status, 0) << r.err;
  const std::string curves = ReadFile(Dir("ev") + "/removal_curves.csv");
  EXPECT_THAT(curves, HasSubstr("top_salient,class_logit,30,"));
  EXPECT_THAT(curves, HasSubstr("least_salient,relative_change,0,0\n"));
  EXPECT_THAT(curves, HasSubstr("random,relative_change,1,"));

  r = Cli({"verify", "--model", model, "--input", test, "--max-instances", "2",
           "--permutations", "200", "--out", Dir("vf")});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto fid = ReadJson(dir_ / "vf" / "fidelity.json");
  // d = 30 is beyond exact enumeration, so auto picks sampling.
  EXPECT_EQ(fid["method"], "sampled_200");
  EXPECT_EQ(fid["n_instances"], 2);

  r = Cli({"prune", "--model", model, "--input", test, "--epsilons", "0,1e9",
           "--out", Dir("pr")});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto prune = ReadJson(dir_ / "pr" / "prune.json");
  ASSERT_EQ(prune["points"].size(), 2u);
  EXPECT_EQ(prune["points"][0]["metric"], prune["unpruned_metric"]);
  // Padding 30 -> 32 features makes some modules skippable even at 0.
  EXPECT_LT(prune["points"][0]["mean_fraction_skipped"].get<double>(),
            prune["points"][1]["mean_fraction_skipped"].get<double>());
}

TEST_F(CliTest, ModelInputErrors) {
  TrainSynthetic();
  const std::string model = Dir("model") + "/model.json";
  fs::create_directories(dir_ / "other");
  std::ofstream(dir_ / "other" / "x.csv") << "p,q\n1,2\n";
  Result r = Cli({"explain", "--model", model, "--input",
                  Dir("other") + "/x.csv", "--out", Dir("e")});
  EXPECT_EQ(r.status, 1);
  EXPECT_THAT(r.err, HasSubstr("feature column 'v0' not found"));

  fs::copy_file(model, dir_ / "other" / "model.json");
  r = Cli({"explain", "--model", Dir("other") + "/model.json", "--input",
           Dir("model") + "/test.csv", "--out", Dir("e")});
  EXPECT_EQ(r.status, 1);
  EXPECT_THAT(r.err, HasSubstr("pass --stats"));

  // The shallow/deep check: synthetic models are deep, so prune works, but an
  // unlabeled input is rejected.
  std::ofstream unl(dir_ / "other" / "unlabeled.csv");
  unl << "v0,v1,v2,v3,v4,v5,v6,v7,v8,v9,v10,v11,v12,v13,v14,v15\n";
  for (int j = 0; j < 16; ++j) unl << (j ? "," : "") << 0.1;
  unl << "\n";
  unl.close();
  r = Cli({"prune", "--model", model, "--input", Dir("other") + "/unlabeled.csv",
           "--out", Dir("p")});
  EXPECT_EQ(r.status, 1);
  EXPECT_THAT(r.err, HasSubstr("labelled input"));
  r = Cli({"explain", "--model", model, "--input",
           Dir("other") + "/unlabeled.csv", "--out", Dir("e2")});
  EXPECT_EQ(r.status, 0) << r.err;
}

TEST_F(CliTest, PropertyVerifySmall) {
  const Result r = Cli({"verify", "--trials", "6", "--forwards", "30",
                        "--grad-seeds", "1", "--oracle-trials", "2",
                        "--oracle-permutations", "500", "--threads", "2",
                        "--out", Dir("v")});
  EXPECT_EQ(r.status, 0) << r.out << r.err;
  EXPECT_THAT(r.out, HasSubstr("PASS shallow_exactness"));
  const auto report = ReadJson(dir_ / "v" / "verify.json");
  EXPECT_TRUE(report["all_passed"].get<bool>());
  EXPECT_EQ(report["checks"].size(), 9u);
}

}  // namespace
}  // namespace shapnet
