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

#ifndef DPRELEASE_EXACT_SUM_H_
#define DPRELEASE_EXACT_SUM_H_

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace dprelease {

// Correctly rounded sum of a sequence of doubles (Shewchuk's partials
// algorithm). Budget arithmetic goes through this so that a set of charges
// totals to the same double in any order.
inline double ExactSum(std::span<const double> values) {
  std::vector<double> partials;
  for (double x : values) {
    size_t i = 0;
    for (double y : partials) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  if (partials.empty()) return 0.0;

  size_t n = partials.size();
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    lo = y - (hi - x);
    if (lo != 0.0) break;
  }
  // Round-half-even correction when the remaining partials push past a tie.
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) ||
                (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

namespace internal {

// Sets shares[k] to the correctly rounded residual total - sum(others).
inline bool ResidualFits(std::vector<double>& shares, size_t k, double total) {
  std::vector<double> terms = {total};
  for (size_t i = 0; i < shares.size(); ++i) {
    if (i != k) terms.push_back(-shares[i]);
  }
  const double residual = ExactSum(terms);
  if (residual <= 0.0 && shares.size() > 1) return false;
  const double saved = shares[k];
  shares[k] = residual;
  if (ExactSum(shares) == total) return true;
  shares[k] = saved;
  return false;
}

}  // namespace internal

// Makes the exact sum of `shares` round to `total` by replacing the last
// element with the residual. When that lands on a rounding tie, the smallest
// share (whose ulp is finer than the total's) absorbs the residual instead.
inline void AdjustLastToTotal(std::vector<double>& shares, double total) {
  if (shares.empty() || ExactSum(shares) == total) return;
  if (internal::ResidualFits(shares, shares.size() - 1, total)) return;
  const auto smallest = static_cast<size_t>(
      std::min_element(shares.begin(), shares.end()) - shares.begin());
  internal::ResidualFits(shares, smallest, total);
}

}  // namespace dprelease

#endif  // DPRELEASE_EXACT_SUM_H_
