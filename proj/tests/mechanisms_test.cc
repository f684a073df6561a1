//
// Copyright 2026 The dprelease Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#include "dprelease/mechanisms.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "dprelease/random_source.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace dprelease {
namespace {

using ::testing::HasSubstr;

TEST(PrivacyParamsTest, RejectsInvalidEpsilon) {
  for (double eps : {0.0, -1.0, std::nan(""), HUGE_VAL}) {
    EXPECT_EQ(PrivacyParams::Create(eps, 0.0).status().code(),
              absl::StatusCode::kInvalidArgument)
        << eps;
  }
}

TEST(PrivacyParamsTest, RejectsInvalidDelta) {
  for (double delta : {-0.1, 1.0, 2.0, std::nan("")}) {
    EXPECT_EQ(PrivacyParams::Create(0.5, delta).status().code(),
              absl::StatusCode::kInvalidArgument)
        << delta;
  }
}

TEST(PrivacyParamsTest, PureHasZeroDelta) {
  auto p = PrivacyParams::Pure(0.2);
  ASSERT_TRUE(p.ok());
  EXPECT_TRUE(p->is_pure());
  EXPECT_EQ(p->delta(), 0.0);
}

TEST(LaplaceScaleTest, MeanScaleForQrsBounds) {
  auto scale = LaplaceScale(238.0, 0.2 / 11);
  ASSERT_TRUE(scale.ok());
  EXPECT_DOUBLE_EQ(scale->b(), 13090.0);
}

TEST(LaplaceScaleTest, CountAtUnitEpsilon) {
  EXPECT_EQ(LaplaceScale(1.0, 1.0)->b(), 1.0);
}

TEST(LaplaceScaleTest, RejectsZeroSensitivityAndEpsilon) {
  EXPECT_EQ(LaplaceScale(0.0, 1.0).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(LaplaceScale(1.0, 0.0).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(LaplaceScale(1.0, -0.5).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(LaplaceTailTest, FrozenValues) {
  auto wide = LaplaceScale(238.0, 0.2 / 11);
  EXPECT_NEAR(*LaplaceTail(*wide, 238.0), 0.9819824738582275, 1e-13);
  auto narrow = LaplaceScale(2.0, 1.0);
  EXPECT_NEAR(*LaplaceTail(*narrow, 2.0 * std::log(20.0)), 0.05, 1e-15);
  EXPECT_EQ(*LaplaceTail(*narrow, 0.0), 1.0);
}

TEST(LaplaceTailTest, RejectsNegativeThreshold) {
  auto scale = LaplaceScale(1.0, 1.0);
  EXPECT_EQ(LaplaceTail(*scale, -1.0).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(LaplaceTail(*scale, std::nan("")).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(SampleLaplaceTest, NoiseOffIsZero) {
  RandomSource rng = RandomSource::NoiseOff();
  auto scale = LaplaceScale(1.0, 0.01);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(SampleLaplace(*scale, rng), 0.0);
}

TEST(SampleLaplaceTest, SeededStreamsRepeat) {
  auto scale = LaplaceScale(1.0, 1.0);
  RandomSource a = RandomSource::Seeded(42);
  RandomSource b = RandomSource::Seeded(42);
  RandomSource c = RandomSource::Seeded(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const double x = SampleLaplace(*scale, a);
    EXPECT_EQ(x, SampleLaplace(*scale, b));
    differs |= x != SampleLaplace(*scale, c);
  }
  EXPECT_TRUE(differs);
}

TEST(SampleLaplaceTest, MomentsMatchScale) {
  auto scale = LaplaceScale(3.0, 1.5);  // b = 2
  RandomSource rng = RandomSource::Seeded(5);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0, beyond = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = SampleLaplace(*scale, rng);
    sum += x;
    sum_sq += x * x;
    if (std::fabs(x) > 2.0 * std::log(20.0)) beyond += 1.0;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.03);
  EXPECT_NEAR(sum_sq / n / 8.0, 1.0, 0.03);  // variance 2b^2 = 8
  // P(|X| > b ln 20) = 0.05, binomial sd ~ 4.9e-4.
  EXPECT_NEAR(beyond / n, 0.05, 0.0025);
}

TEST(GaussianSigmaTest, FrozenCalibration) {
  auto params = PrivacyParams::Create(0.5, 1e-5);
  ASSERT_TRUE(params.ok());
  auto sigma = GaussianSigma(1.0, *params);
  ASSERT_TRUE(sigma.ok());
  EXPECT_NEAR(*sigma, 9.689610525210778, 1e-12);
}

TEST(GaussianSigmaTest, RejectsPureParameters) {
  auto sigma = GaussianSigma(1.0, *PrivacyParams::Pure(0.5));
  EXPECT_EQ(sigma.status().code(), absl::StatusCode::kInvalidArgument);
  EXPECT_THAT(sigma.status().message(), HasSubstr("unsupported for pure DP"));
}

TEST(GaussianSigmaTest, RejectsLargeEpsilon) {
  auto params = PrivacyParams::Create(1.0, 1e-5);
  EXPECT_EQ(GaussianSigma(1.0, *params).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(SampleGaussianTest, EmpiricalSpread) {
  auto params = PrivacyParams::Create(0.5, 1e-5);
  RandomSource rng = RandomSource::Seeded(9);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = *SampleGaussian(1.0, *params, rng);
    sum += x;
    sum_sq += x * x;
  }
  const double sd = std::sqrt(sum_sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(sd, 9.689610525210778, 0.1);
  RandomSource off = RandomSource::NoiseOff();
  EXPECT_EQ(*SampleGaussian(1.0, *params, off), 0.0);
}

TEST(ExponentialChoiceTest, NoiseOffPicksFirstArgmax) {
  RandomSource rng = RandomSource::NoiseOff();
  const std::vector<double> u = {1.0, 5.0, 5.0, 2.0};
  EXPECT_EQ(*ExponentialChoiceIndex(u, 1.0, 1.0, rng), 1u);
}

TEST(ExponentialChoiceTest, LargeGapAtHighEpsilonAlmostAlwaysBest) {
  // Weight ratio e^5 ~ 148.4 between the two candidates.
  RandomSource rng = RandomSource::Seeded(3);
  const std::vector<double> u = {0.0, 10.0};
  int best = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    best += *ExponentialChoiceIndex(u, 1.0, 1.0, rng) == 1;
  }
  const double p = 148.4131591025766 / (1.0 + 148.4131591025766);
  const double sd = std::sqrt(p * (1 - p) / n);
  EXPECT_NEAR(static_cast<double>(best) / n, p, 4 * sd);
}

TEST(ExponentialChoiceTest, FrequenciesFollowWeights) {
  RandomSource rng = RandomSource::Seeded(4);
  const std::vector<double> u = {0.0, 1.0, 2.0};
  std::vector<int> hits(3, 0);
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++hits[*ExponentialChoiceIndex(u, 2.0, 1.0, rng)];
  const double z = 1.0 + std::exp(1.0) + std::exp(2.0);
  for (int i = 0; i < 3; ++i) {
    const double p = std::exp(static_cast<double>(i)) / z;
    EXPECT_NEAR(static_cast<double>(hits[i]) / n, p,
                4 * std::sqrt(p * (1 - p) / n));
  }
}

TEST(ExponentialChoiceTest, RejectsBadInput) {
  RandomSource rng = RandomSource::Seeded(1);
  EXPECT_EQ(ExponentialChoiceIndex({}, 1.0, 1.0, rng).status().code(),
            absl::StatusCode::kInvalidArgument);
  const std::vector<double> u = {1.0};
  EXPECT_EQ(ExponentialChoiceIndex(u, 0.0, 1.0, rng).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(ExponentialChoiceIndex(u, 1.0, 0.0, rng).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(ExponentialChoiceTest, ReturnsCandidateValue) {
  RandomSource rng = RandomSource::NoiseOff();
  const std::vector<Candidate<std::string>> c = {{"low", 0.0}, {"high", 3.0}};
  auto choice = ExponentialChoice<std::string>(c, 1.0, 1.0, rng);
  ASSERT_TRUE(choice.ok());
  EXPECT_EQ(*choice, "high");
}

}  // namespace
}  // namespace dprelease
