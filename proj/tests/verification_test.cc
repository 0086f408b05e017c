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

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "nlohmann/json.hpp"

namespace shapnet {
namespace {

using ::testing::HasSubstr;

CheckOptions Small(int trials) {
  CheckOptions o;
  o.trials = trials;
  o.seed = 11;
  return o;
}

TEST(VerificationTest, AllChecksPassOnSmallRuns) {
  const std::vector<CheckResult> checks = {
      CheckShallowExactness(Small(12)),
      CheckLinearAggregation(Small(12)),
      CheckShallowLocalAccuracy(Small(12)),
      CheckDeepLocalAccuracy(Small(30)),
      CheckDeepMissingness(Small(30)),
      CheckPruningIdentity(Small(30)),
      CheckGradients(Small(2), NetworkKind::kDeep),
      CheckGradients(Small(2), NetworkKind::kShallow),
  };
  for (const CheckResult& c : checks) {
    EXPECT_TRUE(c.passed) << c.name << " measured " << c.measured;
    EXPECT_LE(c.measured, c.tolerance) << c.name;
    EXPECT_GT(c.trials, 0);
  }
}

TEST(VerificationTest, ResultsDoNotDependOnThreads) {
  CheckOptions one = Small(9);
  CheckOptions three = one;
  three.threads = 3;
  EXPECT_EQ(CheckShallowExactness(one).measured,
            CheckShallowExactness(three).measured);
  EXPECT_EQ(CheckDeepLocalAccuracy(one).measured,
            CheckDeepLocalAccuracy(three).measured);
}

TEST(VerificationTest, MissingnessActuallyChecksFeatures) {
  const CheckResult r = CheckDeepMissingness(Small(40));
  EXPECT_THAT(r.detail, HasSubstr("nonzero rows among"));
  EXPECT_THAT(r.detail, ::testing::Not(HasSubstr("among 0 ")));
}

TEST(VerificationTest, GradientNetsAreSmall) {
  const CheckResult r = CheckGradients(Small(1), NetworkKind::kDeep);
  const auto pos = r.detail.find("differences, ");
  const int params = std::stoi(r.detail.substr(pos + 13));
  EXPECT_GT(params, 0);
  EXPECT_LE(params, 2000);
}

TEST(VerificationTest, JsonReport) {
  CheckResult ok{"a", true, 0.0, 1.0, 3, ""};
  CheckResult bad{"b", false, 2.0, 1.0, 3, "x"};
  auto j = nlohmann::json::parse(ChecksToJson({ok}));
  EXPECT_EQ(j["format_version"], 1);
  EXPECT_TRUE(j["all_passed"].get<bool>());
  j = nlohmann::json::parse(ChecksToJson({ok, bad}));
  EXPECT_FALSE(j["all_passed"].get<bool>());
  ASSERT_EQ(j["checks"].size(), 2u);
  EXPECT_EQ(j["checks"][1]["name"], "b");
  EXPECT_EQ(j["checks"][1]["measured"], 2.0);
}

}  // namespace
}  // namespace shapnet
