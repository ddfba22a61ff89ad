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

#include <cstdio>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "prism/pruner/prune.hpp"

namespace prism::pruner {

// Retention statistics for graphs whose original object count lies in
// [min_objects, max_objects]. Rates are percentages averaged over graphs;
// the triplet rate only averages graphs that had edges.
struct RetentionBucket {
  std::size_t min_objects = 0;
  std::size_t max_objects = 0;
  std::size_t graphs = 0;
  double objects_retained = 0.0;
  double directly_important = 0.0;
  double indirectly_important = 0.0;
  double triplets_retained = 0.0;
  std::size_t graphs_with_triplets = 0;

  std::string label() const {
    if (max_objects == std::numeric_limits<std::size_t>::max())
      return std::to_string(min_objects) + "+";
    return std::to_string(min_objects) + "-" + std::to_string(max_objects);
  }
};

// `upper_bounds` are inclusive bucket tops; a final open bucket catches the
// rest. Buckets without graphs are omitted.
inline std::vector<RetentionBucket> retention_report(
    const std::vector<RetentionDecision>& decisions,
    const std::vector<std::size_t>& upper_bounds = {5, 10, 15, 20}) {
  std::vector<RetentionBucket> buckets;
  std::size_t lo = 1;
  for (std::size_t hi : upper_bounds) {
    buckets.push_back({lo, hi});
    lo = hi + 1;
  }
  buckets.push_back({lo, std::numeric_limits<std::size_t>::max()});

  for (const auto& d : decisions) {
    if (d.original_objects == 0) continue;
    RetentionBucket* b = &buckets.back();
    for (auto& candidate : buckets) {
      if (d.original_objects >= candidate.min_objects && d.original_objects <= candidate.max_objects) {
        b = &candidate;
        break;
      }
    }
    std::size_t direct = 0, indirect = 0;
    for (const auto& [id, reason] : d.objects) (is_direct(reason) ? direct : indirect)++;
    const double n = static_cast<double>(d.original_objects);
    ++b->graphs;
    b->objects_retained += 100.0 * static_cast<double>(d.objects.size()) / n;
    b->directly_important += 100.0 * static_cast<double>(direct) / n;
    b->indirectly_important += 100.0 * static_cast<double>(indirect) / n;
    if (d.original_triplets > 0) {
      ++b->graphs_with_triplets;
      b->triplets_retained +=
          100.0 * static_cast<double>(d.triplets.size()) / static_cast<double>(d.original_triplets);
    }
  }

  std::vector<RetentionBucket> out;
  for (auto& b : buckets) {
    if (b.graphs == 0) continue;
    const double g = static_cast<double>(b.graphs);
    b.objects_retained /= g;
    b.directly_important /= g;
    b.indirectly_important /= g;
    if (b.graphs_with_triplets > 0) b.triplets_retained /= static_cast<double>(b.graphs_with_triplets);
    out.push_back(b);
  }
  return out;
}

inline std::string format_retention_table(const std::vector<RetentionBucket>& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %7s %10s %10s %10s %10s\n", "objects", "graphs",
                "retained%", "direct%", "indirect%", "triplets%");
  out << line;
  for (const auto& b : report) {
    std::snprintf(line, sizeof line, "%-10s %7zu %10.1f %10.1f %10.1f %10.1f\n", b.label().c_str(),
                  b.graphs, b.objects_retained, b.directly_important, b.indirectly_important,
                  b.triplets_retained);
    out << line;
  }
  return out.str();
}

}  // namespace prism::pruner
