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
#include <cmath>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include "prism/graphcore/types.hpp"
#include "prism/importance/ground_truth.hpp"
#include "prism/pruner/jenks.hpp"

namespace prism::pruner {

using graphcore::SceneGraph;
using importance::GraphScores;

enum class RetentionReason {
  kAbsolute,            // score above the fixed threshold
  kRelative,            // upper natural-breaks class of its category
  kIndirectViaTriplet,  // endpoint of a kept triplet
  kFallback,            // highest-scoring object kept so the graph is not empty
};

constexpr std::string_view to_string(RetentionReason r) {
  switch (r) {
    case RetentionReason::kAbsolute: return "absolute";
    case RetentionReason::kRelative: return "relative";
    case RetentionReason::kIndirectViaTriplet: return "indirect";
    case RetentionReason::kFallback: return "fallback";
  }
  return "unknown";
}

inline bool is_direct(RetentionReason r) { return r != RetentionReason::kIndirectViaTriplet; }

struct PruneOptions {
  double threshold = 0.4;
  bool use_jenks = true;
  // Categories with fewer items than this get no natural-breaks split.
  std::size_t jenks_min_items = 3;
  bool empty_guard = true;
};

struct RetentionDecision {
  std::map<int, RetentionReason> objects;           // kept node id -> reason
  std::map<std::size_t, RetentionReason> triplets;  // kept edge index -> reason
  std::vector<int> old_to_new;                      // -1 for dropped nodes
  std::size_t original_objects = 0;
  std::size_t original_triplets = 0;

  std::vector<int> kept_objects() const {
    std::vector<int> out;
    for (const auto& [id, r] : objects) out.push_back(id);
    return out;
  }
  std::vector<std::size_t> kept_triplets() const {
    std::vector<std::size_t> out;
    for (const auto& [e, r] : triplets) out.push_back(e);
    return out;
  }
};

struct PruneResult {
  SceneGraph graph;
  RetentionDecision decision;
};

namespace detail {

inline std::vector<std::size_t> upper_class_items(const std::vector<double>& scores,
                                                  const PruneOptions& opts) {
  if (!opts.use_jenks || scores.size() < std::max<std::size_t>(opts.jenks_min_items, 2)) return {};
  return jenks_two_class(scores).upper_class();
}

}  // namespace detail

// Keeps an item if its score exceeds the threshold or it falls in the upper
// natural-breaks class of its category (objects and triplets are split
// separately); every endpoint of a kept triplet is kept as well. The result
// is the subgraph over kept objects holding exactly the kept triplets, with
// nodes renumbered contiguously in original order.
inline PruneResult prune(const SceneGraph& graph, const GraphScores& scores,
                         const PruneOptions& opts = {}) {
  require(scores.objects.size() == graph.nodes.size() && scores.triplets.size() == graph.edges.size(),
          ErrorKind::kScoreCoverageIncomplete, "scores must cover every node and edge");
  require(std::isfinite(opts.threshold), ErrorKind::kInvalidArgument, "threshold must be finite");
  for (double s : scores.objects)
    require(std::isfinite(s), ErrorKind::kInvalidArgument, "object score is not finite");
  for (double s : scores.triplets)
    require(std::isfinite(s), ErrorKind::kInvalidArgument, "triplet score is not finite");

  RetentionDecision d;
  d.original_objects = graph.nodes.size();
  d.original_triplets = graph.edges.size();

  for (std::size_t e = 0; e < scores.triplets.size(); ++e)
    if (scores.triplets[e] > opts.threshold) d.triplets[e] = RetentionReason::kAbsolute;
  for (std::size_t e : detail::upper_class_items(scores.triplets, opts))
    d.triplets.emplace(e, RetentionReason::kRelative);

  for (std::size_t i = 0; i < scores.objects.size(); ++i)
    if (scores.objects[i] > opts.threshold)
      d.objects[static_cast<int>(i)] = RetentionReason::kAbsolute;
  for (std::size_t i : detail::upper_class_items(scores.objects, opts))
    d.objects.emplace(static_cast<int>(i), RetentionReason::kRelative);

  for (const auto& [e, reason] : d.triplets) {
    d.objects.emplace(graph.edges[e].src, RetentionReason::kIndirectViaTriplet);
    d.objects.emplace(graph.edges[e].dst, RetentionReason::kIndirectViaTriplet);
  }

  if (d.objects.empty() && opts.empty_guard && !graph.nodes.empty()) {
    const auto best = std::max_element(scores.objects.begin(), scores.objects.end());
    d.objects[static_cast<int>(best - scores.objects.begin())] = RetentionReason::kFallback;
  }

  PruneResult out;
  d.old_to_new.assign(graph.nodes.size(), -1);
  for (const auto& [id, reason] : d.objects) {
    const int fresh = static_cast<int>(out.graph.nodes.size());
    d.old_to_new[static_cast<std::size_t>(id)] = fresh;
    graphcore::ObjectNode n = graph.nodes[static_cast<std::size_t>(id)];
    n.id = fresh;
    out.graph.nodes.push_back(std::move(n));
  }
  for (const auto& [e, reason] : d.triplets) {
    graphcore::RelationEdge r = graph.edges[e];
    r.src = d.old_to_new[static_cast<std::size_t>(r.src)];
    r.dst = d.old_to_new[static_cast<std::size_t>(r.dst)];
    out.graph.edges.push_back(std::move(r));
  }
  out.decision = std::move(d);
  return out;
}

// Scores restricted to the survivors of a decision, in the pruned graph's
// numbering.
inline GraphScores surviving_scores(const GraphScores& scores, const RetentionDecision& d) {
  GraphScores out;
  for (const auto& [id, r] : d.objects) out.objects.push_back(scores.objects[static_cast<std::size_t>(id)]);
  for (const auto& [e, r] : d.triplets) out.triplets.push_back(scores.triplets[e]);
  return out;
}

}  // namespace prism::pruner
