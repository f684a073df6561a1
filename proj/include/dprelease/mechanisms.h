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

#ifndef DPRELEASE_MECHANISMS_H_
#define DPRELEASE_MECHANISMS_H_

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "dprelease/random_source.h"

namespace dprelease {

// The (epsilon, delta) pair claimed or spent by a mechanism invocation.
// epsilon > 0 and 0 <= delta < 1; pure DP has delta == 0.
class PrivacyParams {
 public:
  static absl::StatusOr<PrivacyParams> Create(double epsilon,
                                              double delta = 0.0) {
    if (!std::isfinite(epsilon) || epsilon <= 0.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("Epsilon must be finite and positive, got ", epsilon));
    }
    if (!std::isfinite(delta) || delta < 0.0 || delta >= 1.0) {
      return absl::InvalidArgumentError(
          absl::StrCat("Delta must lie in [0, 1), got ", delta));
    }
    return PrivacyParams(epsilon, delta);
  }

  static absl::StatusOr<PrivacyParams> Pure(double epsilon) {
    return Create(epsilon, 0.0);
  }

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }
  bool is_pure() const { return delta_ == 0.0; }

  friend bool operator==(const PrivacyParams&, const PrivacyParams&) = default;

 private:
  PrivacyParams(double epsilon, double delta)
      : epsilon_(epsilon), delta_(delta) {}

  double epsilon_;
  double delta_;
};

// Laplace scale b = sensitivity / epsilon, in the query's output units.
class NoiseScale {
 public:
  double b() const { return b_; }

 private:
  explicit NoiseScale(double b) : b_(b) {}
  friend absl::StatusOr<NoiseScale> LaplaceScale(double, double);
  double b_;
};

inline absl::StatusOr<NoiseScale> LaplaceScale(double sensitivity,
                                               double epsilon) {
  if (!std::isfinite(sensitivity) || sensitivity <= 0.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Sensitivity must be finite and positive, got ", sensitivity));
  }
  if (!std::isfinite(epsilon) || epsilon <= 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("Epsilon must be finite and positive, got ", epsilon));
  }
  return NoiseScale(sensitivity / epsilon);
}

// Zero-mean Laplace draw by inverting the CDF at one uniform u in (0, 1):
//   x = b * ln(2u)             for u < 1/2
//   x = -b * ln(2(1 - u))      otherwise
// Any port fed the same uniform stream reproduces these samples exactly.
inline double SampleLaplace(const NoiseScale& scale, RandomSource& rng) {
  if (rng.noise_off()) return 0.0;
  const double u = rng.UniformOpen();
  if (u < 0.5) return scale.b() * std::log(2.0 * u);
  return -scale.b() * std::log(2.0 * (1.0 - u));
}

// P(|X| > t) = exp(-t / b) for X ~ Laplace(0, b).
inline absl::StatusOr<double> LaplaceTail(const NoiseScale& scale, double t) {
  if (std::isnan(t) || t < 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("Tail threshold must be nonnegative, got ", t));
  }
  return std::exp(-t / scale.b());
}

// Classic analytic calibration sigma = sensitivity * sqrt(2 ln(1.25/delta)) /
// epsilon. Only valid for epsilon < 1 and delta > 0.
inline absl::StatusOr<double> GaussianSigma(double sensitivity,
                                            const PrivacyParams& params) {
  if (params.is_pure()) {
    return absl::InvalidArgumentError(
        "Gaussian mechanism is unsupported for pure DP (delta = 0)");
  }
  if (params.epsilon() >= 1.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Gaussian calibration requires epsilon < 1, got ", params.epsilon()));
  }
  if (!std::isfinite(sensitivity) || sensitivity <= 0.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Sensitivity must be finite and positive, got ", sensitivity));
  }
  return sensitivity * std::sqrt(2.0 * std::log(1.25 / params.delta())) /
         params.epsilon();
}

// Box-Muller on two open uniforms.
inline absl::StatusOr<double> SampleGaussian(double sensitivity,
                                             const PrivacyParams& params,
                                             RandomSource& rng) {
  auto sigma = GaussianSigma(sensitivity, params);
  if (!sigma.ok()) return sigma.status();
  if (rng.noise_off()) return 0.0;
  const double u1 = rng.UniformOpen();
  const double u2 = rng.UniformOpen();
  return *sigma * std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Exponential mechanism over a finite set: index i is returned with
// probability proportional to exp(epsilon * u_i / (2 * utility_sensitivity)).
// Noise-off returns the first index of maximal utility.
inline absl::StatusOr<size_t> ExponentialChoiceIndex(
    std::span<const double> utilities, double epsilon,
    double utility_sensitivity, RandomSource& rng) {
  if (utilities.empty()) {
    return absl::InvalidArgumentError(
        "Exponential mechanism needs at least one candidate");
  }
  if (!std::isfinite(epsilon) || epsilon <= 0.0) {
    return absl::InvalidArgumentError(
        absl::StrCat("Epsilon must be finite and positive, got ", epsilon));
  }
  if (!std::isfinite(utility_sensitivity) || utility_sensitivity <= 0.0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Utility sensitivity must be finite and positive, got ",
        utility_sensitivity));
  }
  for (double u : utilities) {
    if (!std::isfinite(u)) {
      return absl::InvalidArgumentError("Utilities must be finite");
    }
  }
  const auto best = std::max_element(utilities.begin(), utilities.end());
  if (rng.noise_off()) return static_cast<size_t>(best - utilities.begin());

  // Shift by the max before exponentiating; probabilities are unchanged.
  const double top = *best;
  std::vector<double> cumulative(utilities.size());
  double total = 0.0;
  for (size_t i = 0; i < utilities.size(); ++i) {
    total += std::exp(epsilon * (utilities[i] - top) /
                      (2.0 * utility_sensitivity));
    cumulative[i] = total;
  }
  const double target = rng.UniformOpen() * total;
  const auto it =
      std::upper_bound(cumulative.begin(), cumulative.end(), target);
  return std::min(static_cast<size_t>(it - cumulative.begin()),
                  utilities.size() - 1);
}

template <typename T>
struct Candidate {
  T value;
  double utility;
};

template <typename T>
absl::StatusOr<T> ExponentialChoice(std::span<const Candidate<T>> candidates,
                                    double epsilon, double utility_sensitivity,
                                    RandomSource& rng) {
  std::vector<double> utilities;
  utilities.reserve(candidates.size());
  for (const auto& c : candidates) utilities.push_back(c.utility);
  auto index =
      ExponentialChoiceIndex(utilities, epsilon, utility_sensitivity, rng);
  if (!index.ok()) return index.status();
  return candidates[*index].value;
}

}  // namespace dprelease

#endif  // DPRELEASE_MECHANISMS_H_
