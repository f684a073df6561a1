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

#include "dprelease/tester.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "absl/status/status.h"
#include "dprelease/random_source.h"
#include "dprelease/sensitivity.h"
#include "gtest/gtest.h"

namespace dprelease {
namespace {

ClippingBounds Unit() { return ClippingBounds::Create(0, 1).value(); }

bool IsSubsequence(const std::vector<double>& shorter,
                   const std::vector<double>& longer) {
  size_t i = 0;
  for (double x : longer) {
    if (i < shorter.size() && shorter[i] == x) ++i;
  }
  return i == shorter.size();
}

TEST(NeighborPairsTest, FrozenCounts) {
  EXPECT_EQ(GenerateNeighborPairs(Unit(), 1)->size(), 15u);
  EXPECT_EQ(GenerateNeighborPairs(Unit(), 2)->size(), 42u);
  EXPECT_EQ(GenerateNeighborPairs(Unit(), 4)->size(), 165u);
}

TEST(NeighborPairsTest, ZeroSizeRejected) {
  EXPECT_EQ(GenerateNeighborPairs(Unit(), 0).status().code(),
            absl::StatusCode::kInvalidArgument);
}

TEST(NeighborPairsTest, EveryPairDiffersInOneRecord) {
  auto bounds = ClippingBounds::Create(18, 256).value();
  auto pairs = GenerateNeighborPairs(bounds, 4);
  ASSERT_TRUE(pairs.ok());
  std::set<std::pair<std::vector<double>, std::vector<double>>> seen;
  for (const auto& p : *pairs) {
    EXPECT_TRUE(seen.insert({p.base, p.neighbor}).second);
    const bool removed = p.relation == NeighborPair::Relation::kRemoved;
    ASSERT_EQ(p.neighbor.size() + (removed ? 1 : 0),
              p.base.size() + (removed ? 0 : 1));
    if (removed) {
      EXPECT_TRUE(IsSubsequence(p.neighbor, p.base));
    } else {
      EXPECT_TRUE(IsSubsequence(p.base, p.neighbor));
      EXPECT_EQ(p.neighbor.back(), p.added_value);
    }
    for (double x : p.neighbor) {
      EXPECT_TRUE(x == 18 || x == 137 || x == 256);
    }
  }
  // Both ({}, {lower}) and ({lower}, {}) are present.
  EXPECT_TRUE(seen.contains({{}, {18.0}}));
  EXPECT_TRUE(seen.contains({{18.0}, {}}));
}

TEST(TesterSlackTest, FrozenValue) {
  EXPECT_NEAR(TesterSlack(100000, 1e-9), 0.0206960928764375, 1e-15);
}

TEST(EvaluateSamplesTest, ConstantOutputsPass) {
  const std::vector<PairSamples> s = {{std::vector<double>(20000, 42.0),
                                       std::vector<double>(20000, 42.0)}};
  DpTestConfig config;
  config.trials = 20000;
  auto v = EvaluateSamples(s, config);
  ASSERT_TRUE(v.ok());
  EXPECT_EQ(v->outcome, DpTestOutcome::kPass);
}

TEST(EvaluateSamplesTest, DisjointOutputsViolate) {
  const std::vector<PairSamples> s = {{std::vector<double>(20000, 0.0),
                                       std::vector<double>(20000, 1.0)}};
  DpTestConfig config;
  config.trials = 20000;
  auto v = EvaluateSamples(s, config);
  ASSERT_TRUE(v.ok());
  EXPECT_EQ(v->outcome, DpTestOutcome::kViolation);
  EXPECT_EQ(v->worst_excess, 1.0);
  EXPECT_TRUE(std::isinf(v->observed_ratio));
}

TEST(EvaluateSamplesTest, NonFiniteOutputIsInconclusive) {
  const std::vector<PairSamples> s = {{{1.0, HUGE_VAL}, {1.0, 2.0}}};
  DpTestConfig config;
  config.trials = 2;
  EXPECT_EQ(EvaluateSamples(s, config)->outcome, DpTestOutcome::kInconclusive);
}

TEST(EvaluateSamplesTest, RejectsBadConfig) {
  const std::vector<PairSamples> s = {{{1.0}, {1.0}}};
  DpTestConfig config;
  config.bins = 1;
  EXPECT_EQ(EvaluateSamples(s, config).status().code(),
            absl::StatusCode::kInvalidArgument);
  config.bins = 20;
  config.beta = 0.0;
  EXPECT_EQ(EvaluateSamples(s, config).status().code(),
            absl::StatusCode::kInvalidArgument);
}

// Property: on the same samples, raising the claimed epsilon never turns a
// pass into a violation, and swapping sides never changes the outcome.
TEST(EvaluateSamplesTest, MonotoneInEpsilonAndSymmetric) {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> shift(0.0, 3.0);
  for (int trial = 0; trial < 40; ++trial) {
    RandomSource rng = RandomSource::Seeded(static_cast<uint64_t>(trial));
    auto scale = LaplaceScale(1.0, 1.0).value();
    const double d = shift(gen);
    PairSamples s;
    for (int i = 0; i < 10000; ++i) {
      s.base.push_back(SampleLaplace(scale, rng));
      s.neighbor.push_back(d + SampleLaplace(scale, rng));
    }
    const std::vector<PairSamples> forward = {s};
    const std::vector<PairSamples> backward = {{s.neighbor, s.base}};
    DpTestOutcome previous = DpTestOutcome::kViolation;
    for (double eps : {0.25, 0.5, 1.0, 2.0, 4.0, 8.0}) {
      DpTestConfig config;
      config.claimed = PrivacyParams::Pure(eps).value();
      config.trials = 10000;
      auto f = EvaluateSamples(forward, config);
      auto b = EvaluateSamples(backward, config);
      ASSERT_TRUE(f.ok() && b.ok());
      EXPECT_EQ(f->outcome, b->outcome);
      EXPECT_DOUBLE_EQ(f->worst_excess, b->worst_excess);
      if (previous == DpTestOutcome::kPass) {
        EXPECT_EQ(f->outcome, DpTestOutcome::kPass) << eps;
      }
      previous = f->outcome;
    }
  }
}

const CatalogEntry& Entry(const std::string& name) {
  static const auto* catalog = new std::vector<CatalogEntry>(MechanismCatalog());
  const CatalogEntry* e = FindMechanism(*catalog, name);
  if (e == nullptr) std::abort();
  return *e;
}

DpTestOutcome RunCatalog(const std::string& name, double claimed, double actual,
                  int64_t trials, uint64_t seed, int max_size = 1) {
  const CatalogEntry& e = Entry(name);
  auto pairs = GenerateNeighborPairs(e.domain, max_size).value();
  DpTestConfig config;
  config.claimed = PrivacyParams::Pure(claimed).value();
  config.trials = trials;
  RandomSource rng = RandomSource::Seeded(seed);
  auto v = TestMechanism(e.build(actual), pairs, config, rng);
  if (!v.ok()) return DpTestOutcome::kInconclusive;
  return v->outcome;
}

TEST(TestMechanismTest, CatalogHasRequiredFixtures) {
  for (const char* name : {"dp_count", "dp_sum", "broken_half_noise",
                           "broken_no_noise", "broken_unclamped_mean"}) {
    EXPECT_NE(FindMechanism(MechanismCatalog(), name), nullptr) << name;
  }
  EXPECT_EQ(FindMechanism(MechanismCatalog(), "nonsense"), nullptr);
}

TEST(TestMechanismTest, CorrectCountPasses) {
  EXPECT_EQ(RunCatalog("dp_count", 1.0, 1.0, 20000, 1), DpTestOutcome::kPass);
}

TEST(TestMechanismTest, ConservativeClaimPasses) {
  EXPECT_EQ(RunCatalog("dp_count", 1.1, 1.0, 20000, 2), DpTestOutcome::kPass);
}

TEST(TestMechanismTest, CorrectSumPasses) {
  EXPECT_EQ(RunCatalog("dp_sum", 1.0, 1.0, 20000, 3), DpTestOutcome::kPass);
}

TEST(TestMechanismTest, BrokenFixturesViolate) {
  EXPECT_EQ(RunCatalog("broken_half_noise", 1.0, 1.0, 20000, 4),
            DpTestOutcome::kViolation);
  EXPECT_EQ(RunCatalog("broken_no_noise", 1.0, 1.0, 20000, 5),
            DpTestOutcome::kViolation);
  EXPECT_EQ(RunCatalog("broken_unclamped_mean", 1.0, 1.0, 20000, 6),
            DpTestOutcome::kViolation);
}

TEST(TestMechanismTest, ConstantMechanismPasses) {
  const TestedMechanism constant = [](std::span<const double>,
                                      RandomSource&) -> absl::StatusOr<double> {
    return 42.0;
  };
  auto pairs = GenerateNeighborPairs(Unit(), 2).value();
  DpTestConfig config;
  config.trials = 10000;
  RandomSource rng = RandomSource::Seeded(7);
  auto v = TestMechanism(constant, pairs, config, rng);
  ASSERT_TRUE(v.ok());
  EXPECT_EQ(v->outcome, DpTestOutcome::kPass);
}

TEST(TestMechanismTest, FewTrialsAreInconclusive) {
  EXPECT_EQ(RunCatalog("dp_count", 1.0, 1.0, 500, 8), DpTestOutcome::kInconclusive);
}

TEST(TestMechanismTest, MechanismErrorIsHarnessError) {
  const TestedMechanism failing = [](std::span<const double>,
                                     RandomSource&) -> absl::StatusOr<double> {
    return absl::InternalError("boom");
  };
  auto pairs = GenerateNeighborPairs(Unit(), 1).value();
  RandomSource rng = RandomSource::Seeded(9);
  EXPECT_EQ(TestMechanism(failing, pairs, DpTestConfig{}, rng).status().code(),
            absl::StatusCode::kInternal);
}

TEST(TestMechanismTest, DeterministicForSeed) {
  const CatalogEntry& e = Entry("dp_count");
  auto pairs = GenerateNeighborPairs(e.domain, 1).value();
  DpTestConfig config;
  config.trials = 10000;
  RandomSource a = RandomSource::Seeded(10);
  RandomSource b = RandomSource::Seeded(10);
  auto va = TestMechanism(e.build(1.0), pairs, config, a);
  auto vb = TestMechanism(e.build(1.0), pairs, config, b);
  EXPECT_EQ(va->worst_excess, vb->worst_excess);
  EXPECT_EQ(va->worst_pair, vb->worst_pair);
}

TEST(TestMechanismTest, SwappingPairsKeepsVerdict) {
  const CatalogEntry& e = Entry("broken_half_noise");
  auto pairs = GenerateNeighborPairs(e.domain, 1).value();
  std::vector<NeighborPair> swapped = pairs;
  for (auto& p : swapped) std::swap(p.base, p.neighbor);
  DpTestConfig config;
  config.trials = 10000;
  RandomSource a = RandomSource::Seeded(11);
  RandomSource b = RandomSource::Seeded(11);
  auto va = TestMechanism(e.build(1.0), pairs, config, a);
  auto vb = TestMechanism(e.build(1.0), swapped, config, b);
  EXPECT_EQ(va->outcome, vb->outcome);
  EXPECT_EQ(va->worst_excess, vb->worst_excess);
}

TEST(VerdictToJsonTest, CarriesWorstPair) {
  DpTestVerdict v;
  v.outcome = DpTestOutcome::kViolation;
  v.worst_pair = 0;
  v.observed_ratio = HUGE_VAL;
  NeighborPair p;
  p.neighbor = {0.0};
  const std::vector<NeighborPair> pairs = {p};
  const auto j = VerdictToJson(v, DpTestConfig{}, pairs, "broken_no_noise");
  EXPECT_EQ(j["outcome"], "violation");
  EXPECT_EQ(j["observed_ratio"], "inf");
  EXPECT_EQ(j["worst_pair"]["neighbor"][0], 0.0);
}

}  // namespace
}  // namespace dprelease
