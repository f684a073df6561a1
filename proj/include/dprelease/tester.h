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

#ifndef DPRELEASE_TESTER_H_
#define DPRELEASE_TESTER_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "dprelease/aggregates.h"
#include "dprelease/mechanisms.h"
#include "dprelease/random_source.h"
#include "dprelease/sensitivity.h"
#include "dprelease/status_macros.h"
#include "json.hpp"

namespace dprelease {

// Two databases differing in one record. `neighbor` is `base` with the record
// at `removed_index` deleted, or with `added_value` appended.
struct NeighborPair {
  enum class Relation { kRemoved, kAdded };

  std::vector<double> base;
  std::vector<double> neighbor;
  Relation relation = Relation::kRemoved;
  size_t removed_index = 0;
  double added_value = 0.0;
};

inline std::string DescribePair(const NeighborPair& p) {
  return absl::StrCat("{", absl::StrJoin(p.base, ","), "} vs {",
                      absl::StrJoin(p.neighbor, ","), "}");
}

// Every multiset over {lower, midpoint, upper} of size <= max_size, paired
// with each of its remove-one neighbors and with the three databases obtained
// by appending one domain point. Duplicate (base, neighbor) pairs are dropped.
inline absl::StatusOr<std::vector<NeighborPair>> GenerateNeighborPairs(
    const ClippingBounds& domain, int max_size) {
  if (max_size < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("max_size must be at least 1, got ", max_size));
  }
  const std::vector<double> points = {domain.lower(), domain.midpoint(),
                                      domain.upper()};
  std::vector<NeighborPair> out;
  std::set<std::pair<std::vector<double>, std::vector<double>>> seen;
  auto emit = [&](NeighborPair p) {
    if (seen.insert({p.base, p.neighbor}).second) out.push_back(std::move(p));
  };

  // Nondecreasing index sequences enumerate multisets.
  std::vector<std::vector<size_t>> bases = {{}};
  for (size_t start = 0; start < bases.size(); ++start) {
    const auto b = bases[start];
    if (b.size() == static_cast<size_t>(max_size)) continue;
    for (size_t v = b.empty() ? 0 : b.back(); v < points.size(); ++v) {
      auto next = b;
      next.push_back(v);
      bases.push_back(std::move(next));
    }
  }
  for (const auto& idx : bases) {
    std::vector<double> base;
    for (size_t i : idx) base.push_back(points[i]);
    for (size_t k = 0; k < base.size(); ++k) {
      NeighborPair p;
      p.base = base;
      p.neighbor = base;
      p.neighbor.erase(p.neighbor.begin() + static_cast<std::ptrdiff_t>(k));
      p.relation = NeighborPair::Relation::kRemoved;
      p.removed_index = k;
      emit(std::move(p));
    }
    for (double v : points) {
      NeighborPair p;
      p.base = base;
      p.neighbor = base;
      p.neighbor.push_back(v);
      p.relation = NeighborPair::Relation::kAdded;
      p.added_value = v;
      emit(std::move(p));
    }
  }
  return out;
}

struct DpTestConfig {
  PrivacyParams claimed = PrivacyParams::Pure(1.0).value();
  int64_t trials = 100000;
  int bins = 20;
  double beta = 1e-9;
};

// Below this many trials a clean result is reported as inconclusive.
inline constexpr int64_t kMinMeaningfulTrials = 10000;

enum class DpTestOutcome { kPass, kViolation, kInconclusive };

inline const char* OutcomeName(DpTestOutcome o) {
  switch (o) {
    case DpTestOutcome::kPass:
      return "pass";
    case DpTestOutcome::kViolation:
      return "violation";
    case DpTestOutcome::kInconclusive:
      return "inconclusive";
  }
  return "unknown";
}

// Result of checking p <= e^eps * p' + delta + slack on every bin of every
// pair in both directions. The worst_* fields describe the largest value of
// p - (e^eps * p' + delta) seen, whether or not it crossed the slack.
struct DpTestVerdict {
  DpTestOutcome outcome = DpTestOutcome::kPass;
  size_t worst_pair = 0;
  int worst_bin = 0;
  bool worst_reversed = false;  // true if the neighbor side was the larger
  double worst_excess = -std::numeric_limits<double>::infinity();
  double observed_ratio = 0.0;  // p / p' at the worst bin, inf if p' = 0
  double slack_used = 0.0;
  size_t pairs_tested = 0;
  std::string note;
};

inline double TesterSlack(int64_t trials, double beta) {
  return 2.0 * std::sqrt(std::log(2.0 / beta) / (2.0 * static_cast<double>(trials)));
}

// Output samples for one pair.
struct PairSamples {
  std::vector<double> base;
  std::vector<double> neighbor;
};

inline absl::Status CheckConfig(const DpTestConfig& config) {
  if (config.trials < 1) {
    return absl::InvalidArgumentError("trials must be positive");
  }
  if (config.bins < 2) {
    return absl::InvalidArgumentError("bins must be at least 2");
  }
  if (!(config.beta > 0.0 && config.beta < 1.0)) {
    return absl::InvalidArgumentError("beta must lie in (0, 1)");
  }
  return absl::OkStatus();
}

// Applies the binned DP inequality to already collected samples. Each pair is
// binned into `bins` equal-width bins over its pooled range; a pair whose
// outputs are all equal is one event with probability 1 on both sides.
inline absl::StatusOr<DpTestVerdict> EvaluateSamples(
    std::span<const PairSamples> samples, const DpTestConfig& config) {
  RETURN_IF_ERROR(CheckConfig(config));
  DpTestVerdict verdict;
  verdict.slack_used = TesterSlack(config.trials, config.beta);
  verdict.pairs_tested = samples.size();
  const double growth = std::exp(config.claimed.epsilon());
  const double delta = config.claimed.delta();

  for (size_t pi = 0; pi < samples.size(); ++pi) {
    const auto& s = samples[pi];
    if (s.base.empty() || s.neighbor.empty()) {
      return absl::InvalidArgumentError("Each side needs at least one sample");
    }
    double lo = HUGE_VAL, hi = -HUGE_VAL;
    for (const auto* side : {&s.base, &s.neighbor}) {
      for (double x : *side) {
        if (!std::isfinite(x)) {
          verdict.outcome = DpTestOutcome::kInconclusive;
          verdict.note = absl::StrCat("non-finite output on pair ", pi);
          return verdict;
        }
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
    }
    const int k = hi > lo ? config.bins : 1;
    const double width = (hi - lo) / k;
    auto histogram = [&](const std::vector<double>& xs) {
      std::vector<double> freq(static_cast<size_t>(k), 0.0);
      for (double x : xs) {
        int b = k == 1 ? 0 : static_cast<int>(std::floor((x - lo) / width));
        b = std::clamp(b, 0, k - 1);
        freq[static_cast<size_t>(b)] += 1.0;
      }
      for (double& f : freq) f /= static_cast<double>(xs.size());
      return freq;
    };
    const auto p = histogram(s.base);
    const auto q = histogram(s.neighbor);
    for (int b = 0; b < k; ++b) {
      for (bool reversed : {false, true}) {
        const double num = reversed ? q[b] : p[b];
        const double den = reversed ? p[b] : q[b];
        const double excess = num - (growth * den + delta);
        if (excess > verdict.worst_excess) {
          verdict.worst_excess = excess;
          verdict.worst_pair = pi;
          verdict.worst_bin = b;
          verdict.worst_reversed = reversed;
          verdict.observed_ratio =
              den > 0.0 ? num / den : (num > 0.0 ? HUGE_VAL : 1.0);
        }
      }
    }
  }
  if (verdict.worst_excess > verdict.slack_used) {
    verdict.outcome = DpTestOutcome::kViolation;
  } else if (config.trials < kMinMeaningfulTrials) {
    verdict.outcome = DpTestOutcome::kInconclusive;
    verdict.note = absl::StrCat("no violation found, but fewer than ",
                                kMinMeaningfulTrials, " trials");
  }
  return verdict;
}

// A mechanism under test: database in, one real output. Errors abort the
// test rather than becoming a verdict.
using TestedMechanism = std::function<absl::StatusOr<double>(
    std::span<const double>, RandomSource&)>;

// Runs `mechanism` config.trials times on each side of every pair and
// evaluates the samples. Each pair draws from two forked sources assigned by
// database order, so swapping base and neighbor yields the same samples.
inline absl::StatusOr<DpTestVerdict> TestMechanism(
    const TestedMechanism& mechanism, std::span<const NeighborPair> pairs,
    const DpTestConfig& config, RandomSource& rng) {
  RETURN_IF_ERROR(CheckConfig(config));
  if (pairs.empty()) {
    return absl::InvalidArgumentError("No neighbor pairs to test");
  }
  std::vector<PairSamples> samples;
  samples.reserve(pairs.size());
  for (const auto& pair : pairs) {
    RandomSource first = rng.Fork();
    RandomSource second = rng.Fork();
    const bool base_first = pair.base <= pair.neighbor;
    RandomSource& base_rng = base_first ? first : second;
    RandomSource& neighbor_rng = base_first ? second : first;
    PairSamples s;
    s.base.reserve(static_cast<size_t>(config.trials));
    s.neighbor.reserve(static_cast<size_t>(config.trials));
    for (int64_t t = 0; t < config.trials; ++t) {
      ASSIGN_OR_RETURN(double x, mechanism(pair.base, base_rng));
      s.base.push_back(x);
    }
    for (int64_t t = 0; t < config.trials; ++t) {
      ASSIGN_OR_RETURN(double x, mechanism(pair.neighbor, neighbor_rng));
      s.neighbor.push_back(x);
    }
    samples.push_back(std::move(s));
  }
  return EvaluateSamples(samples, config);
}

// A named mechanism for the tester, built for a given epsilon. Broken entries
// are negative controls that must be flagged when tested at `epsilon`.
struct CatalogEntry {
  std::string name;
  std::string description;
  bool broken = false;
  ClippingBounds domain;
  std::function<TestedMechanism(double epsilon)> build;
};

inline std::vector<CatalogEntry> MechanismCatalog() {
  const ClippingBounds unit = ClippingBounds::Create(0.0, 1.0).value();
  const ClippingBounds wide = ClippingBounds::Create(0.0, 100.0).value();
  std::vector<CatalogEntry> catalog;

  catalog.push_back(
      {"dp_count", "count with Laplace(1/epsilon) noise", false, unit,
       [](double eps) -> TestedMechanism {
         return [eps](std::span<const double> db,
                      RandomSource& rng) -> absl::StatusOr<double> {
           ASSIGN_OR_RETURN(NoisyResult r, DpCount(db, eps, rng));
           return r.scalar();
         };
       }});
  catalog.push_back(
      {"dp_sum", "clipped sum with Laplace(width/epsilon) noise", false, unit,
       [unit](double eps) -> TestedMechanism {
         return [eps, unit](std::span<const double> db,
                            RandomSource& rng) -> absl::StatusOr<double> {
           ASSIGN_OR_RETURN(NoisyResult r, DpSum(db, unit, eps, rng));
           return r.scalar();
         };
       }});
  catalog.push_back(
      {"broken_half_noise", "count with Laplace(1/(2 epsilon)) noise", true,
       unit, [](double eps) -> TestedMechanism {
         return [eps](std::span<const double> db,
                      RandomSource& rng) -> absl::StatusOr<double> {
           ASSIGN_OR_RETURN(NoisyResult r, DpCount(db, 2.0 * eps, rng));
           return r.scalar();
         };
       }});
  catalog.push_back({"broken_no_noise", "exact count", true, unit,
                     [](double) -> TestedMechanism {
                       return [](std::span<const double> db,
                                 RandomSource&) -> absl::StatusOr<double> {
                         return static_cast<double>(db.size());
                       };
                     }});
  catalog.push_back(
      {"broken_unclamped_mean",
       "mean with noise for bounds [0,1] but inputs never clamped", true, wide,
       [](double eps) -> TestedMechanism {
         return [eps](std::span<const double> db,
                      RandomSource& rng) -> absl::StatusOr<double> {
           const double n = static_cast<double>(std::max<size_t>(db.size(), 1));
           double sum = 0.0;
           for (double x : db) sum += x;
           ASSIGN_OR_RETURN(NoiseScale scale, LaplaceScale(1.0 / n, eps));
           return sum / n + SampleLaplace(scale, rng);
         };
       }});
  return catalog;
}

inline const CatalogEntry* FindMechanism(const std::vector<CatalogEntry>& catalog,
                                         const std::string& name) {
  for (const auto& e : catalog) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

inline nlohmann::json VerdictToJson(const DpTestVerdict& v,
                                    const DpTestConfig& config,
                                    std::span<const NeighborPair> pairs,
                                    const std::string& mechanism) {
  nlohmann::json j = {
      {"mechanism", mechanism},
      {"outcome", OutcomeName(v.outcome)},
      {"claimed_epsilon", config.claimed.epsilon()},
      {"claimed_delta", config.claimed.delta()},
      {"trials", config.trials},
      {"bins", config.bins},
      {"beta", config.beta},
      {"pairs_tested", v.pairs_tested},
      {"slack", v.slack_used},
      {"worst_bin", v.worst_bin},
      {"worst_direction", v.worst_reversed ? "neighbor_over_base"
                                           : "base_over_neighbor"},
      {"worst_excess", v.worst_excess},
      {"observed_ratio", std::isfinite(v.observed_ratio)
                             ? nlohmann::json(v.observed_ratio)
                             : nlohmann::json("inf")},
  };
  if (v.worst_pair < pairs.size()) {
    j["worst_pair"] = {{"index", v.worst_pair},
                       {"base", pairs[v.worst_pair].base},
                       {"neighbor", pairs[v.worst_pair].neighbor}};
  }
  if (!v.note.empty()) j["note"] = v.note;
  return j;
}

}  // namespace dprelease

#endif  // DPRELEASE_TESTER_H_
