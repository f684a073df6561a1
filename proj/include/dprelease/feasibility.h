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

#ifndef DPRELEASE_FEASIBILITY_H_
#define DPRELEASE_FEASIBILITY_H_

#include <cmath>
#include <cstdint>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"

namespace dprelease {

// Economic budget constraint (e^epsilon - 1) * E * N <= B.
// B: study budget, E: per-person expected cost of a breach from elsewhere,
// N: number of participants. Currency units are opaque.
class EconomicModel {
 public:
  static absl::StatusOr<EconomicModel> Create(double budget,
                                              double expected_cost,
                                              int64_t population) {
    if (!std::isfinite(budget) || budget <= 0.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("Budget must be positive, got ", budget));
    }
    if (!std::isfinite(expected_cost) || expected_cost <= 0.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("Expected cost must be positive, got ", expected_cost));
    }
    if (population < 1) {
      return absl::InvalidArgumentError(
          absl::StrCat("Population must be positive, got ", population));
    }
    return EconomicModel(budget, expected_cost, population);
  }

  double budget() const { return budget_; }
  double expected_cost() const { return expected_cost_; }
  int64_t population() const { return population_; }

 private:
  EconomicModel(double b, double e, int64_t n)
      : budget_(b), expected_cost_(e), population_(n) {}

  double budget_;
  double expected_cost_;
  int64_t population_;
};

// ln(1 + B / (E N)), the boundary of the constraint.
inline double MaxFeasibleEpsilon(const EconomicModel& model) {
  return std::log1p(model.budget() /
                    (model.expected_cost() *
                     static_cast<double>(model.population())));
}

inline bool IsFeasible(const EconomicModel& model, double epsilon) {
  return std::expm1(epsilon) * model.expected_cost() *
             static_cast<double>(model.population()) <=
         model.budget();
}

// Chance of being hit by a breach times the cost of one.
inline absl::StatusOr<double> ExpectedCostFromBreachStats(
    double annual_affected, double population, double breach_cost) {
  if (!std::isfinite(population) || population <= 0.0) {
    return absl::InvalidArgumentError("Population must be positive");
  }
  if (!std::isfinite(annual_affected) || annual_affected < 0.0) {
    return absl::InvalidArgumentError(
        "Affected count must be finite and nonnegative");
  }
  if (!std::isfinite(breach_cost) || breach_cost < 0.0) {
    return absl::InvalidArgumentError(
        "Breach cost must be finite and nonnegative");
  }
  if (annual_affected > population) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Invalid breach statistics: ", annual_affected,
        " affected exceeds population ", population));
  }
  return annual_affected / population * breach_cost;
}

}  // namespace dprelease

#endif  // DPRELEASE_FEASIBILITY_H_
