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

#ifndef DPRELEASE_AGGREGATES_H_
#define DPRELEASE_AGGREGATES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "dprelease/mechanisms.h"
#include "dprelease/random_source.h"
#include "dprelease/sensitivity.h"
#include "dprelease/status_macros.h"

namespace dprelease {

enum class MechanismKind { kLaplace, kGaussian, kExponential };

inline const char* MechanismName(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kLaplace:
      return "laplace";
    case MechanismKind::kGaussian:
      return "gaussian";
    case MechanismKind::kExponential:
      return "exponential";
  }
  return "unknown";
}

// Output of one DP aggregate. For additive mechanisms with `bounds` set, the
// value lies in [lower, upper] and `clamped` records whether the pre-clamp
// value fell outside.
struct NoisyResult {
  std::string query_id;
  std::variant<double, std::vector<double>> value;
  std::vector<std::string> bin_labels;
  double epsilon_spent = 0.0;
  double delta_spent = 0.0;
  MechanismKind mechanism = MechanismKind::kLaplace;
  std::optional<ClippingBounds> bounds;
  bool clamped = false;

  double scalar() const { return std::get<double>(value); }
  const std::vector<double>& bins() const {
    return std::get<std::vector<double>>(value);
  }
};

struct CategoricalBins {
  std::vector<std::string> categories;
};

// `bin_count` equal-width bins over [min, max]; values are clamped into the
// range first, and the last bin is closed on the right.
struct NumericBins {
  double min = 0.0;
  double max = 0.0;
  int bin_count = 1;
};

inline constexpr char kOtherBinLabel[] = "other";

class HistogramSpec {
 public:
  // Categorical specs get a trailing reserved "other" bin for values outside
  // the list.
  static absl::StatusOr<HistogramSpec> Categorical(
      std::string column, std::vector<std::string> categories,
      std::string units = "") {
    if (categories.empty()) {
      return absl::InvalidArgumentError(
          "Categorical histogram needs at least one category");
    }
    std::vector<std::string> sorted = categories;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      return absl::InvalidArgumentError("Histogram categories must be unique");
    }
    if (std::binary_search(sorted.begin(), sorted.end(), kOtherBinLabel)) {
      return absl::InvalidArgumentError(
          "Histogram category 'other' is reserved");
    }
    return HistogramSpec(std::move(column),
                         CategoricalBins{std::move(categories)},
                         std::move(units));
  }

  static absl::StatusOr<HistogramSpec> Numeric(std::string column, double min,
                                               double max, int bin_count,
                                               std::string units = "") {
    if (!std::isfinite(min) || !std::isfinite(max) || !(min < max)) {
      return absl::InvalidArgumentError(absl::StrCat(
          "Histogram range needs finite min < max, got [", min, ", ", max,
          "]"));
    }
    if (bin_count < 1) {
      return absl::InvalidArgumentError(
          absl::StrCat("Histogram bin_count must be >= 1, got ", bin_count));
    }
    return HistogramSpec(std::move(column), NumericBins{min, max, bin_count},
                         std::move(units));
  }

  const std::string& column() const { return column_; }
  const std::string& units() const { return units_; }
  bool is_categorical() const {
    return std::holds_alternative<CategoricalBins>(bins_);
  }
  const CategoricalBins& categorical() const {
    return std::get<CategoricalBins>(bins_);
  }
  const NumericBins& numeric() const { return std::get<NumericBins>(bins_); }

  size_t bin_count() const {
    if (is_categorical()) return categorical().categories.size() + 1;
    return static_cast<size_t>(numeric().bin_count);
  }

  // Category names (plus "other"), or the lower edge of each numeric bin.
  std::vector<std::string> Labels() const {
    std::vector<std::string> labels;
    if (is_categorical()) {
      labels = categorical().categories;
      labels.push_back(kOtherBinLabel);
    } else {
      for (int i = 0; i < numeric().bin_count; ++i) {
        labels.push_back(absl::StrFormat("%.10g", BinLowerEdge(i)));
      }
    }
    return labels;
  }

  double BinLowerEdge(int i) const {
    const NumericBins& b = numeric();
    return b.min + (b.max - b.min) * i / b.bin_count;
  }

  size_t BinIndex(const std::string& category) const {
    const auto& cats = categorical().categories;
    const auto it = std::find(cats.begin(), cats.end(), category);
    return static_cast<size_t>(it - cats.begin());  // == size() for "other"
  }

  size_t BinIndex(double value) const {
    const NumericBins& b = numeric();
    const double v = std::clamp(value, b.min, b.max);
    const auto i = static_cast<int64_t>(
        std::floor((v - b.min) / (b.max - b.min) * b.bin_count));
    return static_cast<size_t>(std::clamp<int64_t>(i, 0, b.bin_count - 1));
  }

 private:
  HistogramSpec(std::string column, std::variant<CategoricalBins, NumericBins> bins,
                std::string units)
      : column_(std::move(column)), bins_(std::move(bins)),
        units_(std::move(units)) {}

  std::string column_;
  std::variant<CategoricalBins, NumericBins> bins_;
  std::string units_;
};

namespace internal {

inline absl::Status CheckNoNaN(std::span<const double> values) {
  for (double v : values) {
    if (std::isnan(v)) {
      return absl::InvalidArgumentError("Input values contain NaN");
    }
  }
  return absl::OkStatus();
}

inline double ClampedSum(std::span<const double> values,
                         const ClippingBounds& bounds) {
  double sum = 0.0;
  for (double v : values) sum += bounds.ClampUnchecked(v);
  return sum;
}

// Additive noise for a query with the given l1/l2 sensitivity: Laplace for
// pure parameters, Gaussian otherwise.
inline absl::StatusOr<double> AdditiveNoise(double sensitivity,
                                            const PrivacyParams& params,
                                            RandomSource& rng) {
  if (params.is_pure()) {
    ASSIGN_OR_RETURN(NoiseScale scale,
                     LaplaceScale(sensitivity, params.epsilon()));
    return SampleLaplace(scale, rng);
  }
  return SampleGaussian(sensitivity, params, rng);
}

inline MechanismKind AdditiveKind(const PrivacyParams& params) {
  return params.is_pure() ? MechanismKind::kLaplace : MechanismKind::kGaussian;
}

inline double RoundCount(double noisy) {
  return std::max(0.0, std::round(noisy));
}

inline absl::Status NonEmpty(size_t n) {
  if (n == 0) {
    return absl::FailedPreconditionError("Empty group: no values to aggregate");
  }
  return absl::OkStatus();
}

}  // namespace internal

// True count plus Laplace(1/epsilon) noise, rounded and floored at zero.
inline absl::StatusOr<NoisyResult> DpCount(int64_t true_count,
                                           const PrivacyParams& params,
                                           RandomSource& rng) {
  ASSIGN_OR_RETURN(double noise, internal::AdditiveNoise(
                                     CountSensitivity().delta_f, params, rng));
  NoisyResult result;
  result.value = internal::RoundCount(static_cast<double>(true_count) + noise);
  result.epsilon_spent = params.epsilon();
  result.delta_spent = params.delta();
  result.mechanism = internal::AdditiveKind(params);
  return result;
}

template <typename T>
absl::StatusOr<NoisyResult> DpCount(std::span<const T> values, double epsilon,
                                    RandomSource& rng) {
  ASSIGN_OR_RETURN(PrivacyParams params, PrivacyParams::Pure(epsilon));
  return DpCount(static_cast<int64_t>(values.size()), params, rng);
}

inline absl::StatusOr<NoisyResult> DpSum(std::span<const double> values,
                                         const ClippingBounds& bounds,
                                         const PrivacyParams& params,
                                         RandomSource& rng) {
  RETURN_IF_ERROR(internal::CheckNoNaN(values));
  ASSIGN_OR_RETURN(double noise,
                   internal::AdditiveNoise(
                       ClippedSumSensitivity(bounds).delta_f, params, rng));
  NoisyResult result;
  result.value = internal::ClampedSum(values, bounds) + noise;
  result.epsilon_spent = params.epsilon();
  result.delta_spent = params.delta();
  result.mechanism = internal::AdditiveKind(params);
  return result;
}

inline absl::StatusOr<NoisyResult> DpSum(std::span<const double> values,
                                         const ClippingBounds& bounds,
                                         double epsilon, RandomSource& rng) {
  ASSIGN_OR_RETURN(PrivacyParams params, PrivacyParams::Pure(epsilon));
  return DpSum(values, bounds, params, rng);
}

// Mean of clamped values plus noise calibrated to (upper - lower) / n, then
// clamped back into the bounds. The group size n is treated as public.
inline absl::StatusOr<NoisyResult> DpMean(std::span<const double> values,
                                          const ClippingBounds& bounds,
                                          const PrivacyParams& params,
                                          RandomSource& rng) {
  RETURN_IF_ERROR(internal::NonEmpty(values.size()));
  RETURN_IF_ERROR(internal::CheckNoNaN(values));
  const auto n = static_cast<int64_t>(values.size());
  ASSIGN_OR_RETURN(SensitivityValue sensitivity, MeanSensitivity(bounds, n));
  ASSIGN_OR_RETURN(double noise, internal::AdditiveNoise(sensitivity.delta_f,
                                                         params, rng));
  const double raw =
      internal::ClampedSum(values, bounds) / static_cast<double>(n) + noise;
  NoisyResult result;
  result.value = bounds.ClampUnchecked(raw);
  result.clamped = raw < bounds.lower() || raw > bounds.upper();
  result.bounds = bounds;
  result.epsilon_spent = params.epsilon();
  result.delta_spent = params.delta();
  result.mechanism = internal::AdditiveKind(params);
  return result;
}

inline absl::StatusOr<NoisyResult> DpMean(std::span<const double> values,
                                          const ClippingBounds& bounds,
                                          double epsilon, RandomSource& rng) {
  ASSIGN_OR_RETURN(PrivacyParams params, PrivacyParams::Pure(epsilon));
  return DpMean(values, bounds, params, rng);
}

// Exponential-mechanism median over [lower, upper].
//
// With z_1 <= ... <= z_n the sorted clamped values and z_0 = lower,
// z_{n+1} = upper, every output in the open interval (z_i, z_{i+1}) has
// utility -|#{x < o} - #{x > o}| = -|2i - n| (sensitivity 1). Interval i is
// picked with weight (z_{i+1} - z_i) * exp(epsilon * u_i / 2) and the output
// is uniform within it. Delta is never spent.
//
// Noise-off returns the midpoint of the set of points (data values included)
// of maximal utility, which is the ordinary median of the clamped values.
inline absl::StatusOr<NoisyResult> DpMedian(std::span<const double> values,
                                            const ClippingBounds& bounds,
                                            const PrivacyParams& params,
                                            RandomSource& rng) {
  RETURN_IF_ERROR(internal::NonEmpty(values.size()));
  RETURN_IF_ERROR(internal::CheckNoNaN(values));
  std::vector<double> z;
  z.reserve(values.size());
  for (double v : values) z.push_back(bounds.ClampUnchecked(v));
  std::sort(z.begin(), z.end());
  const auto n = static_cast<int64_t>(z.size());

  NoisyResult result;
  result.bounds = bounds;
  result.epsilon_spent = params.epsilon();
  result.mechanism = MechanismKind::kExponential;

  auto edge = [&](int64_t i) {
    if (i == 0) return bounds.lower();
    if (i == n + 1) return bounds.upper();
    return z[static_cast<size_t>(i - 1)];
  };

  if (rng.noise_off()) {
    // Standard median of the clamped values.
    const auto mid = static_cast<size_t>(n / 2);
    result.value = n % 2 == 1 ? z[mid] : (z[mid - 1] + z[mid]) / 2.0;
    return result;
  }

  if (!std::isfinite(params.epsilon()) || params.epsilon() <= 0.0) {
    return absl::InvalidArgumentError("Epsilon must be finite and positive");
  }
  // Log-weights, skipping empty intervals.
  std::vector<double> log_weight(static_cast<size_t>(n + 1), -HUGE_VAL);
  double top = -HUGE_VAL;
  for (int64_t i = 0; i <= n; ++i) {
    const double length = edge(i + 1) - edge(i);
    if (length <= 0.0) continue;
    const double u = -static_cast<double>(std::llabs(2 * i - n));
    log_weight[i] = std::log(length) + params.epsilon() * u / 2.0;
    top = std::max(top, log_weight[i]);
  }
  std::vector<double> cumulative(log_weight.size());
  double total = 0.0;
  for (size_t i = 0; i < log_weight.size(); ++i) {
    if (log_weight[i] > -HUGE_VAL) total += std::exp(log_weight[i] - top);
    cumulative[i] = total;
  }
  const double target = rng.UniformOpen() * total;
  size_t pick = static_cast<size_t>(
      std::upper_bound(cumulative.begin(), cumulative.end(), target) -
      cumulative.begin());
  pick = std::min(pick, cumulative.size() - 1);
  while (log_weight[pick] == -HUGE_VAL && pick > 0) --pick;
  const double a = edge(static_cast<int64_t>(pick));
  const double b = edge(static_cast<int64_t>(pick) + 1);
  result.value = std::min(a + rng.UniformOpen() * (b - a), b);
  return result;
}

inline absl::StatusOr<NoisyResult> DpMedian(std::span<const double> values,
                                            const ClippingBounds& bounds,
                                            double epsilon, RandomSource& rng) {
  ASSIGN_OR_RETURN(PrivacyParams params, PrivacyParams::Pure(epsilon));
  return DpMedian(values, bounds, params, rng);
}

namespace internal {

inline absl::StatusOr<NoisyResult> NoisyBins(std::vector<double> counts,
                                             const HistogramSpec& spec,
                                             const PrivacyParams& params,
                                             RandomSource& rng) {
  for (double& c : counts) {
    ASSIGN_OR_RETURN(double noise, AdditiveNoise(CountSensitivity().delta_f,
                                                 params, rng));
    c = RoundCount(c + noise);
  }
  NoisyResult result;
  result.value = std::move(counts);
  result.bin_labels = spec.Labels();
  result.epsilon_spent = params.epsilon();
  result.delta_spent = params.delta();
  result.mechanism = AdditiveKind(params);
  return result;
}

}  // namespace internal

// One epsilon covers the whole histogram: a record lands in exactly one bin.
// Each bin gets independent noise, then is rounded and floored at zero.
inline absl::StatusOr<NoisyResult> DpHistogram(
    std::span<const std::string> values, const HistogramSpec& spec,
    const PrivacyParams& params, RandomSource& rng) {
  if (!spec.is_categorical()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Histogram on '", spec.column(), "' has numeric bins but got labels"));
  }
  std::vector<double> counts(spec.bin_count(), 0.0);
  for (const auto& v : values) counts[spec.BinIndex(v)] += 1.0;
  return internal::NoisyBins(std::move(counts), spec, params, rng);
}

inline absl::StatusOr<NoisyResult> DpHistogram(std::span<const double> values,
                                               const HistogramSpec& spec,
                                               const PrivacyParams& params,
                                               RandomSource& rng) {
  if (spec.is_categorical()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "Histogram on '", spec.column(), "' has categories but got numbers"));
  }
  RETURN_IF_ERROR(internal::CheckNoNaN(values));
  std::vector<double> counts(spec.bin_count(), 0.0);
  for (double v : values) counts[spec.BinIndex(v)] += 1.0;
  return internal::NoisyBins(std::move(counts), spec, params, rng);
}

template <typename T>
absl::StatusOr<NoisyResult> DpHistogram(std::span<const T> values,
                                        const HistogramSpec& spec,
                                        double epsilon, RandomSource& rng) {
  ASSIGN_OR_RETURN(PrivacyParams params, PrivacyParams::Pure(epsilon));
  return DpHistogram(values, spec, params, rng);
}

}  // namespace dprelease

#endif  // DPRELEASE_AGGREGATES_H_
