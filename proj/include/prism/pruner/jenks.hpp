/*
 * Copyright 2026 The PRISm Authors.
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

#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "prism/error.hpp"

namespace prism::pruner {

// Two-class natural-breaks split of a set of scores.
struct JenksSplit {
  std::vector<std::size_t> order;  // item indices sorted by ascending value (stable)
  std::size_t break_index = 0;     // first sorted position of the upper class
  double cost = 0.0;               // total within-class sum of squared deviations

  std::vector<std::size_t> upper_class() const {
    return {order.begin() + static_cast<std::ptrdiff_t>(break_index), order.end()};
  }
};

// Splits the sorted values into a lower and an upper contiguous class so
// that the summed within-class squared deviation is minimal. Among equal-cost
// splits the one with the smaller upper class wins. O(n log n).
inline JenksSplit jenks_two_class(std::span<const double> values) {
  const std::size_t n = values.size();
  require(n >= 2, ErrorKind::kTooFewValues, "natural breaks needs at least two values");

  JenksSplit out;
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  // Centering first keeps the prefix-sum form of the SSD well conditioned.
  long double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<long double>(n);
  std::vector<long double> sum(n + 1, 0), sq(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const long double x = values[out.order[i]] - mean;
    sum[i + 1] = sum[i] + x;
    sq[i + 1] = sq[i] + x * x;
  }
  auto ssd = [&](std::size_t lo, std::size_t hi) {
    const long double s = sum[hi] - sum[lo];
    const long double cnt = static_cast<long double>(hi - lo);
    const long double v = (sq[hi] - sq[lo]) - s * s / cnt;
    return v < 0 ? 0.0L : v;
  };

  long double best = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const long double cost = ssd(0, k) + ssd(k, n);
    if (k == 1 || cost <= best) {
      best = cost;
      out.break_index = k;
    }
  }
  out.cost = static_cast<double>(best);
  return out;
}

}  // namespace prism::pruner
