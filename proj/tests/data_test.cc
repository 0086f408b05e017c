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

#include "shapnet/data.h"

#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "shapnet/error.h"

namespace shapnet {
namespace {

using ::testing::HasSubstr;

std::string ErrorOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(SyntheticTest, TargetAtConstantHalf) {
  // 0.5^16 + 16 * 0.25, exactly representable.
  EXPECT_EQ(SyntheticTarget(Vector::Constant(16, 0.5)), 4.0000152587890625);
  EXPECT_EQ(SyntheticTarget(Vector::Zero(16)), 0.0);
}

TEST(SyntheticTest, TargetRejectsWrongWidth) {
  EXPECT_THROW(SyntheticTarget(Vector::Zero(15)), Error);
}

TEST(SyntheticTest, FeaturesInRangeAndNoiseSmall) {
  const Dataset ds = GenerateSynthetic(2000, 3);
  ASSERT_EQ(ds.n(), 2000);
  ASSERT_EQ(ds.d(), 16);
  EXPECT_GE(ds.features.minCoeff(), -0.5);
  EXPECT_LT(ds.features.maxCoeff(), 0.5);
  double sq = 0.0;
  for (int i = 0; i < ds.n(); ++i) {
    const double r = ds.targets[i] - SyntheticTarget(ds.features.row(i).transpose());
    sq += r * r;
  }
  // Residual variance should sit near 0.05^2.
  EXPECT_NEAR(sq / ds.n(), 0.0025, 0.0004);
}

TEST(SyntheticTest, SameSeedSameData) {
  const Dataset a = GenerateSynthetic(50, 11);
  const Dataset b = GenerateSynthetic(50, 11);
  const Dataset c = GenerateSynthetic(50, 12);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_NE(a.features, c.features);
}

TEST(SyntheticTest, ZeroNoiseIsExact) {
  const Dataset ds = GenerateSynthetic(20, 1, 0.0);
  for (int i = 0; i < ds.n(); ++i) {
    EXPECT_EQ(ds.targets[i], SyntheticTarget(ds.features.row(i).transpose()));
  }
}

TEST(CsvTest, LabelsMappedByFirstAppearance) {
  const Dataset ds = ParseCsv("x,y,label\n1,2,a\n3,4,b\n5,6,a\n", {});
  EXPECT_EQ(ds.n(), 3);
  EXPECT_EQ(ds.d(), 2);
  EXPECT_EQ(ds.num_classes, 2);
  EXPECT_EQ(ds.class_of(0), 0);
  EXPECT_EQ(ds.class_of(1), 1);
  EXPECT_EQ(ds.class_of(2), 0);
  EXPECT_EQ(ds.class_labels, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"x", "y"}));
}

TEST(CsvTest, DropColumnsAndLabelPosition) {
  CsvOptions opts;
  opts.label_column = "cls";
  opts.drop_columns = {"id"};
  const Dataset ds = ParseCsv("id,cls,f\nrow1,A,0.5\nrow2,B,1.5\n", opts);
  EXPECT_EQ(ds.d(), 1);
  EXPECT_EQ(ds.features(1, 0), 1.5);
  EXPECT_EQ(ds.class_labels[1], "B");
}

TEST(CsvTest, RegressionTargets) {
  CsvOptions opts;
  opts.task = TaskKind::kRegression;
  const Dataset ds = ParseCsv("a,label\n1,0.25\n2,-3\n", opts);
  EXPECT_EQ(ds.targets[0], 0.25);
  EXPECT_EQ(ds.targets[1], -3.0);
  EXPECT_EQ(ds.num_classes, 0);
}

TEST(CsvTest, RoundTrip) {
  Dataset ds = GenerateSynthetic(40, 5);
  const Dataset back = ParseCsv(FormatCsv(ds), {.task = TaskKind::kRegression});
  ASSERT_EQ(back.n(), 40);
  EXPECT_LE((back.features - ds.features).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((back.targets - ds.targets).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.feature_names, ds.feature_names);

  const Dataset cls = ParseCsv("p,label\n1,no\n2,yes\n", {});
  const Dataset cls_back = ParseCsv(FormatCsv(cls), {});
  EXPECT_EQ(cls_back.class_labels, cls.class_labels);
  EXPECT_EQ(cls_back.targets, cls.targets);
}

TEST(CsvTest, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "shapnet_csv_test.csv";
  const Dataset ds = ParseCsv("a,b,label\n1,2,x\n3,4,y\n", {});
  WriteCsv(ds, path.string());
  const Dataset back = LoadCsv(path.string(), {});
  EXPECT_EQ(back.features, ds.features);
  std::filesystem::remove(path);
}

TEST(CsvTest, ErrorsNameTheProblem) {
  EXPECT_THAT(ErrorOf([] { ParseCsv("a,b\n1,2\n", {}); }),
              HasSubstr("label column 'label' not found"));
  EXPECT_THAT(ErrorOf([] { ParseCsv("a,label\n1,x\nfoo,y\n", {}); }),
              HasSubstr("row 3 column 'a'"));
  EXPECT_THAT(ErrorOf([] { ParseCsv("a,label\n1,x,9\n", {}); }),
              HasSubstr("row 2 has 3 cells"));
  EXPECT_THAT(ErrorOf([] { ParseCsv("a,label\n", {}); }),
              HasSubstr("no data rows"));
  EXPECT_THAT(ErrorOf([] { LoadCsv("/nonexistent/file.csv", {}); }),
              HasSubstr("cannot open"));
}

TEST(CsvTest, FixedVocabularies) {
  CsvOptions opts;
  opts.feature_columns = {"y", "x"};
  opts.class_labels = {"b", "a"};
  const Dataset ds = ParseCsv("x,id,y,label\n1,q,2,a\n3,r,4,b\n", opts);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"y", "x"}));
  EXPECT_EQ(ds.features(0, 0), 2.0);
  EXPECT_EQ(ds.features(0, 1), 1.0);
  EXPECT_EQ(ds.class_of(0), 1);
  EXPECT_EQ(ds.class_of(1), 0);
  EXPECT_EQ(ds.num_classes, 2);

  EXPECT_THAT(ErrorOf([&] { ParseCsv("x,y,label\n1,2,c\n", opts); }),
              HasSubstr("unknown class label 'c'"));
  EXPECT_THAT(ErrorOf([&] { ParseCsv("x,label\n1,a\n", opts); }),
              HasSubstr("feature column 'y' not found"));
}

TEST(CsvTest, OptionalLabel) {
  CsvOptions opts;
  opts.label_optional = true;
  opts.task = TaskKind::kRegression;
  const Dataset ds = ParseCsv("x,y\n1,2\n3,4\n", opts);
  EXPECT_EQ(ds.n(), 2);
  EXPECT_EQ(ds.d(), 2);
  EXPECT_EQ(ds.targets, Vector::Zero(2));
}

TEST(SplitTest, SizesAndPartition) {
  const Dataset ds = GenerateSynthetic(1000, 2);
  const SplitResult split = SplitNormalize(ds, 0.75, 9);
  EXPECT_EQ(split.train.n(), 750);
  EXPECT_EQ(split.test.n(), 250);
  std::set<int> all(split.train_rows.begin(), split.train_rows.end());
  all.insert(split.test_rows.begin(), split.test_rows.end());
  EXPECT_EQ(all.size(), 1000u);
}

TEST(SplitTest, TrainingPartIsStandardized) {
  const Dataset ds = GenerateSynthetic(1000, 2);
  const SplitResult split = SplitNormalize(ds, 0.75, 9);
  const Matrix& x = split.train.features;
  for (int j = 0; j < x.cols(); ++j) {
    const double mean = x.col(j).mean();
    const double var = (x.col(j).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 1e-10);
    EXPECT_NEAR(std::sqrt(var), 1.0, 1e-10);
  }
  // Test rows use the training statistics, not their own.
  const int row = split.test_rows[0];
  const double expect =
      (ds.features(row, 0) - split.stats.mean[0]) / split.stats.std[0];
  EXPECT_DOUBLE_EQ(split.test.features(0, 0), expect);
}

TEST(SplitTest, SameSeedSameSplit) {
  const Dataset ds = GenerateSynthetic(100, 2);
  EXPECT_EQ(SplitNormalize(ds, 0.5, 4).train_rows,
            SplitNormalize(ds, 0.5, 4).train_rows);
}

TEST(SplitTest, RejectsBadFraction) {
  const Dataset ds = GenerateSynthetic(10, 2);
  EXPECT_THROW(SplitNormalize(ds, 1.0, 0), Error);
  EXPECT_THROW(SplitNormalize(ds, 0.0, 0), Error);
  EXPECT_THROW(SplitNormalize(ds, 0.01, 0), Error);
}

TEST(NormalizationTest, ZeroVarianceFeatureFlagged) {
  Matrix x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  const NormalizationStats stats = FitNormalization(x);
  EXPECT_EQ(stats.std[1], 1.0);
  EXPECT_EQ(stats.degenerate_features, std::vector<int>{1});
  const Matrix z = stats.Apply(x);
  EXPECT_TRUE(z.col(1).isZero(0.0));
  EXPECT_TRUE(z.allFinite());
}

TEST(NormalizationTest, JsonRoundTrip) {
  Matrix x(3, 2);
  x << 1, 5, 2, 5, 3.5, 5;
  const NormalizationStats stats = FitNormalization(x);
  const NormalizationStats back = NormalizationStats::FromJson(stats.ToJson());
  EXPECT_EQ(back.mean, stats.mean);
  EXPECT_EQ(back.std, stats.std);
  EXPECT_EQ(back.degenerate_features, stats.degenerate_features);
}

TEST(DatasetTest, ValidateRejectsBadRows) {
  Dataset ds = ParseCsv("a,label\n1,x\n2,y\n", {});
  ds.features(0, 0) = std::nan("");
  EXPECT_THROW(ds.Validate(), Error);
  ds = ParseCsv("a,label\n1,x\n2,y\n", {});
  ds.targets[1] = 5;
  EXPECT_THROW(ds.Validate(), Error);
}

TEST(DatasetTest, SubsetKeepsMetadata) {
  const Dataset ds = ParseCsv("a,label\n1,x\n2,y\n3,z\n", {});
  const Dataset sub = ds.Subset({2, 0});
  EXPECT_EQ(sub.n(), 2);
  EXPECT_EQ(sub.features(0, 0), 3.0);
  EXPECT_EQ(sub.class_labels, ds.class_labels);
  EXPECT_EQ(sub.num_classes, 3);
}

}  // namespace
}  // namespace shapnet
