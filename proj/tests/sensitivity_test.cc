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

#include "dprelease/sensitivity.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "dprelease/random_source.h"
#include "gtest/gtest.h"

namespace dprelease {
namespace {

ClippingBounds QrsBounds() { return ClippingBounds::Create(18, 256).value(); }

TEST(ClippingBoundsTest, RejectsInvertedOrEmptyRange) {
  EXPECT_EQ(ClippingBounds::Create(256, 18).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(ClippingBounds::Create(5, 5).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(ClippingBounds::Create(std::nan(""), 5).status().code(),
            absl::StatusCode::kInvalidArgument);
  EXPECT_EQ(ClippingBounds::Create(0, HUGE_VAL).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(ClampTest, ClampsIntoBounds) {
  EXPECT_EQ(*Clamp(300, QrsBounds()), 256);
  EXPECT_EQ(*Clamp(5, QrsBounds()), 18);
  EXPECT_EQ(*Clamp(100, QrsBounds()), 100);
  EXPECT_EQ(*Clamp(-HUGE_VAL, QrsBounds()), 18);
}

TEST(ClampTest, RejectsNaN) {
  EXPECT_EQ(Clamp(std::nan(""), QrsBounds()).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(SensitivityTest, CountIsOne) { EXPECT_EQ(CountSensitivity().delta_f, 1); }

TEST(SensitivityTest, ClippedSumIsWidth) {
  EXPECT_EQ(ClippedSumSensitivity(QrsBounds()).delta_f, 238);
}

TEST(SensitivityTest, MeanForFullDataset) {
  auto s = MeanSensitivity(QrsBounds(), 10646);
  ASSERT_TRUE(s.ok());
  EXPECT_NEAR(s->delta_f, 0.022355814390381364, 1e-17);
  EXPECT_EQ(s->neighboring, NeighborModel::kAddRemove);
}

TEST(SensitivityTest, MeanNeedsPositiveN) {
  EXPECT_EQ(MeanSensitivity(QrsBounds(), 0).status().code(),
            absl::StatusCode::kInvalidArgument);
}

// Replacing one record moves the clipped sum by at most the width; removing
// one moves it by at most the larger endpoint magnitude.
TEST(SensitivityTest, ClippedSumChangeBoundedOnRandomData) {
  std::mt19937_64 gen(17);
  std::uniform_real_distribution<double> value(-500.0, 800.0);
  std::uniform_int_distribution<int> size(1, 40);
  const ClippingBounds b = QrsBounds();
  const double width = ClippedSumSensitivity(b).delta_f;
  const double reach = std::max(std::fabs(b.lower()), std::fabs(b.upper()));
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> data(static_cast<size_t>(size(gen)));
    for (double& x : data) x = value(gen);
    const double replacement = value(gen);
    for (double x : data) {
      const double out = b.ClampUnchecked(x);
      EXPECT_LE(std::fabs(out - b.ClampUnchecked(replacement)), width);
      EXPECT_LE(std::fabs(out), reach);
    }
  }
}

// With a positive lower bound, dropping an upper-bound record moves the
// clipped sum by the upper bound itself, more than the width.
TEST(SensitivityTest, RemovalCanExceedWidth) {
  const ClippingBounds b = QrsBounds();
  const std::vector<double> data = {18, 137, 256};
  double full = 0.0;
  for (double x : data) full += b.ClampUnchecked(x);
  const double without_top = full - b.ClampUnchecked(256);
  EXPECT_EQ(full - without_top, 256.0);
  EXPECT_GT(full - without_top, ClippedSumSensitivity(b).delta_f);
}

TEST(BoundSearchTest, ConstantFiftyFindsSixtyFour) {
  std::vector<double> data(10, 50.0);
  BoundSearchOptions options;
  options.epsilon_per_step = 1.0;
  RandomSource rng = RandomSource::NoiseOff();
  auto result = DpUpperBoundSearch(data, options, rng);
  ASSERT_TRUE(result.ok()) << result.status();
  EXPECT_EQ(result->bounds.lower(), 0.0);
  EXPECT_EQ(result->bounds.upper(), 64.0);
  EXPECT_EQ(result->steps, 8);
  EXPECT_EQ(result->epsilon_spent, 8.0);
}

TEST(BoundSearchTest, AllZeroStopsAtStart) {
  std::vector<double> data(10, 0.0);
  BoundSearchOptions options;
  options.epsilon_per_step = 0.5;
  RandomSource rng = RandomSource::NoiseOff();
  auto result = DpUpperBoundSearch(data, options, rng);
  ASSERT_TRUE(result.ok());
  EXPECT_EQ(result->bounds.upper(), 1.0);
  EXPECT_EQ(result->steps, 2);
}

TEST(BoundSearchTest, ReportsLastCandidateWhenUnstable) {
  std::vector<double> data(3, 1e6);
  BoundSearchOptions options;
  options.epsilon_per_step = 1.0;
  options.max_steps = 3;
  RandomSource rng = RandomSource::NoiseOff();
  auto result = DpUpperBoundSearch(data, options, rng);
  ASSERT_EQ(result.status().code(), absl::StatusCode::kOutOfRange);
  auto payload = result.status().GetPayload(kLastCandidatePayload);
  ASSERT_TRUE(payload.has_value());
  EXPECT_EQ(std::string(*payload), "4");
}

TEST(BoundSearchTest, RejectsBadOptions) {
  std::vector<double> data(3, 1.0);
  RandomSource rng = RandomSource::NoiseOff();
  BoundSearchOptions options;
  options.epsilon_per_step = 1.0;
  EXPECT_EQ(DpUpperBoundSearch({}, options, rng).status().code(),
            absl::StatusCode::kInvalidArgument);
  options.growth = 1.0;
  EXPECT_EQ(DpUpperBoundSearch(data, options, rng).status().code(),
            absl::StatusCode::kInvalidArgument);
  options.growth = 2.0;
  options.epsilon_per_step = 0.0;
  EXPECT_EQ(DpUpperBoundSearch(data, options, rng).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(BoundSearchTest, NoisySearchCoversBulkOfData) {
  std::vector<double> data;
  for (int i = 0; i < 5000; ++i) data.push_back(50.0 + (i % 100));
  BoundSearchOptions options;
  options.epsilon_per_step = 1.0;
  RandomSource rng = RandomSource::Seeded(21);
  auto result = DpUpperBoundSearch(data, options, rng);
  ASSERT_TRUE(result.ok());
  EXPECT_GE(result->bounds.upper(), 128.0);
  EXPECT_LE(result->bounds.upper(), 256.0);
}

}  // namespace
}  // namespace dprelease
