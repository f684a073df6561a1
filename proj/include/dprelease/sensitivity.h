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

#ifndef DPRELEASE_SENSITIVITY_H_
#define DPRELEASE_SENSITIVITY_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/cord.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dprelease/mechanisms.h"
#include "dprelease/random_source.h"

namespace dprelease {

// Clamp range [lower, upper] for a numeric attribute. Both ends finite and
// lower < upper.
class ClippingBounds {
 public:
  static absl::StatusOr<ClippingBounds> Create(double lower, double upper) {
    if (!std::isfinite(lower) || !std::isfinite(upper)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "Clipping bounds must be finite, got [", lower, ", ", upper, "]"));
    }
    if (!(lower < upper)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "Clipping bounds need lower < upper, got [", lower, ", ", upper,
          "]"));
    }
    return ClippingBounds(lower, upper);
  }

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double width() const { return upper_ - lower_; }
  double midpoint() const { return lower_ + (upper_ - lower_) / 2.0; }

  // Caller guarantees `value` is not NaN.
  double ClampUnchecked(double value) const {
    return std::min(std::max(value, lower_), upper_);
  }

  friend bool operator==(const ClippingBounds&, const ClippingBounds&) =
      default;

 private:
  ClippingBounds(double lower, double upper) : lower_(lower), upper_(upper) {}

  double lower_;
  double upper_;
};

enum class NeighborModel { kAddRemove };

struct SensitivityValue {
  double delta_f;
  NeighborModel neighboring = NeighborModel::kAddRemove;
};

inline absl::StatusOr<double> Clamp(double value,
                                    const ClippingBounds& bounds) {
  if (std::isnan(value)) {
    return absl::InvalidArgumentError("Cannot clamp NaN input value");
  }
  return bounds.ClampUnchecked(value);
}

// One record moves a count, or the l1 norm of a disjoint-bin histogram, by 1.
inline SensitivityValue CountSensitivity() { return {1.0}; }

inline SensitivityValue ClippedSumSensitivity(const ClippingBounds& bounds) {
  return {bounds.width()};
}

// (upper - lower) / n, treating the group size n as public.
inline absl::StatusOr<SensitivityValue> MeanSensitivity(
    const ClippingBounds& bounds, int64_t n) {
  if (n < 1) {
    return absl::InvalidArgumentError(
        absl::StrCat("Mean sensitivity needs n >= 1, got ", n));
  }
  return SensitivityValue{bounds.width() / static_cast<double>(n)};
}

struct BoundSearchOptions {
  double epsilon_per_step = 0.0;
  double start = 1.0;
  double growth = 2.0;
  double stability_tol = 0.01;
  int max_steps = 64;
};

struct BoundSearchResult {
  ClippingBounds bounds;
  int steps = 0;
  double epsilon_spent = 0.0;
};

inline constexpr char kLastCandidatePayload[] =
    "type.dprelease/bound_search.last_candidate";

// Searches for a data-driven upper clipping bound with the lower bound fixed
// at 0. Evaluates a noisy clipped sum at upper = start * growth^k and stops at
// the first step whose relative change from the previous step is below
// `stability_tol`, returning the previous (smaller) candidate. Every step
// spends `epsilon_per_step`; the caller charges `epsilon_spent` to its ledger.
//
// Fails with kOutOfRange after `max_steps` unstable steps. The error message
// and the kLastCandidatePayload payload carry the last candidate tried.
inline absl::StatusOr<BoundSearchResult> DpUpperBoundSearch(
    std::span<const double> values, const BoundSearchOptions& options,
    RandomSource& rng) {
  if (values.empty()) {
    return absl::InvalidArgumentError("Bound search needs at least one value");
  }
  if (!std::isfinite(options.start) || options.start <= 0.0) {
    return absl::InvalidArgumentError("Bound search start must be positive");
  }
  if (!std::isfinite(options.growth) || options.growth <= 1.0) {
    return absl::InvalidArgumentError("Bound search growth must exceed 1");
  }
  if (!std::isfinite(options.stability_tol) || options.stability_tol <= 0.0) {
    return absl::InvalidArgumentError(
        "Bound search stability tolerance must be positive");
  }
  if (options.max_steps < 1) {
    return absl::InvalidArgumentError("Bound search max_steps must be >= 1");
  }
  for (double v : values) {
    if (std::isnan(v)) {
      return absl::InvalidArgumentError("Bound search input contains NaN");
    }
  }

  double upper = options.start;
  double previous_upper = 0.0;
  double previous_sum = 0.0;
  for (int step = 0; step < options.max_steps; ++step) {
    double clipped_sum = 0.0;
    for (double v : values) clipped_sum += std::clamp(v, 0.0, upper);
    auto scale = LaplaceScale(upper, options.epsilon_per_step);
    if (!scale.ok()) return scale.status();
    const double noisy_sum = clipped_sum + SampleLaplace(*scale, rng);

    if (step > 0) {
      double relative_change;
      if (previous_sum == 0.0) {
        relative_change = noisy_sum == 0.0 ? 0.0 : HUGE_VAL;
      } else {
        relative_change =
            std::fabs(noisy_sum - previous_sum) / std::fabs(previous_sum);
      }
      if (relative_change < options.stability_tol) {
        auto bounds = ClippingBounds::Create(0.0, previous_upper);
        if (!bounds.ok()) return bounds.status();
        return BoundSearchResult{*bounds, step + 1,
                                 (step + 1) * options.epsilon_per_step};
      }
    }
    previous_upper = upper;
    previous_sum = noisy_sum;
    upper *= options.growth;
    if (!std::isfinite(upper)) break;
  }

  const std::string candidate = absl::StrFormat("%.17g", previous_upper);
  absl::Status status = absl::OutOfRangeError(absl::StrCat(
      "Upper bound search did not stabilize; last candidate upper=",
      candidate));
  status.SetPayload(kLastCandidatePayload, absl::Cord(candidate));
  return status;
}

}  // namespace dprelease

#endif  // DPRELEASE_SENSITIVITY_H_
