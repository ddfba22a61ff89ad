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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prism/graphcore/types.hpp"

namespace prism::importance {

using graphcore::EmbeddingBundle;
using graphcore::Embedding;
using graphcore::Tensor;

// Mean inner product between an item's text embedding and each caption
// embedding. Serves for objects (label embedding) and triplets (embedding of
// the "subject relation object" phrase) alike.
inline double caption_alignment(std::span<const float> item, const Tensor& captions) {
  require(captions.rows() > 0, ErrorKind::kEmptyCaptions, "importance score needs >= 1 caption");
  require(captions.cols() == item.size(), ErrorKind::kDimMismatch,
          "item and caption embedding widths differ");
  double total = 0.0;
  for (std::size_t k = 0; k < captions.rows(); ++k) {
    double dot = 0.0;
    for (std::size_t j = 0; j < item.size(); ++j) dot += static_cast<double>(item[j]) * captions(k, j);
    total += dot;
  }
  return total / static_cast<double>(captions.rows());
}

inline double gt_object_score(std::span<const float> object_text_emb, const Tensor& captions) {
  return caption_alignment(object_text_emb, captions);
}

inline double gt_triplet_score(std::span<const float> phrase_emb, const Tensor& captions) {
  return caption_alignment(phrase_emb, captions);
}

// Per-item scores of one graph: one value per node and one per edge.
struct GraphScores {
  std::vector<double> objects;
  std::vector<double> triplets;
  friend bool operator==(const GraphScores&, const GraphScores&) = default;
};

inline GraphScores ground_truth_scores(const EmbeddingBundle& b) {
  GraphScores s;
  for (const auto& n : b.graph.nodes) s.objects.push_back(gt_object_score(n.text_emb, b.caption_embs));
  for (std::size_t e = 0; e < b.graph.edges.size(); ++e) {
    const auto& edge = b.graph.edges[e];
    require(!edge.phrase_emb.empty(), ErrorKind::kMissingGroundTruth,
            "image '" + b.image_id + "': edge " + std::to_string(e) + " has no phrase embedding");
    s.triplets.push_back(gt_triplet_score(edge.phrase_emb, b.caption_embs));
  }
  return s;
}

enum class TargetKind { kObject, kTriplet };

// One item to score, carrying the five input tokens. Object targets have
// the second object and relation tokens set to zero.
struct ScoreTarget {
  TargetKind kind = TargetKind::kObject;
  std::size_t bundle_index = 0;
  std::size_t item_index = 0;  // node id or edge index
  Embedding subject;           // [text || vis] of object a
  Embedding object;            // [text || vis] of object b
  Embedding relation;          // relation text embedding
  Embedding image;             // global visual embedding
  Embedding graph;             // graph embedding
  std::optional<double> gt_score;
};

namespace detail {

inline Embedding concat(const Embedding& a, const Embedding& b) {
  Embedding out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace detail

// Targets for every object then every triplet of a bundle. Ground-truth
// scores are attached when `with_ground_truth` is set.
inline std::vector<ScoreTarget> build_targets(const EmbeddingBundle& b, std::size_t bundle_index,
                                              bool with_ground_truth) {
  std::vector<ScoreTarget> out;
  const auto& g = b.graph;
  require(!g.nodes.empty(), ErrorKind::kEmptyGraph, "image '" + b.image_id + "' has an empty scene graph");
  const std::size_t d_text = g.nodes.front().text_emb.size();
  const std::size_t d_vis = g.nodes.front().vis_emb.size();
  std::optional<GraphScores> gt;
  if (with_ground_truth) gt = ground_truth_scores(b);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    ScoreTarget t;
    t.kind = TargetKind::kObject;
    t.bundle_index = bundle_index;
    t.item_index = i;
    t.subject = detail::concat(g.nodes[i].text_emb, g.nodes[i].vis_emb);
    t.object = Embedding(d_text + d_vis, 0.0f);
    t.relation = Embedding(d_text, 0.0f);
    t.image = b.global_vis;
    t.graph = b.graph_emb;
    if (gt) t.gt_score = gt->objects[i];
    out.push_back(std::move(t));
  }
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto& edge = g.edges[e];
    const auto& a = g.nodes[static_cast<std::size_t>(edge.src)];
    const auto& o = g.nodes[static_cast<std::size_t>(edge.dst)];
    ScoreTarget t;
    t.kind = TargetKind::kTriplet;
    t.bundle_index = bundle_index;
    t.item_index = e;
    t.subject = detail::concat(a.text_emb, a.vis_emb);
    t.object = detail::concat(o.text_emb, o.vis_emb);
    t.relation = edge.rel_emb;
    t.image = b.global_vis;
    t.graph = b.graph_emb;
    if (gt) t.gt_score = gt->triplets[e];
    out.push_back(std::move(t));
  }
  return out;
}

inline std::vector<ScoreTarget> build_targets(const std::vector<EmbeddingBundle>& bundles,
                                              bool with_ground_truth) {
  std::vector<ScoreTarget> out;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    auto t = build_targets(bundles[i], i, with_ground_truth);
    out.insert(out.end(), std::make_move_iterator(t.begin()), std::make_move_iterator(t.end()));
  }
  return out;
}

// Splits a flat prediction list (as produced for build_targets(b)) back into
// per-graph object and triplet scores.
inline GraphScores unflatten_scores(const EmbeddingBundle& b, std::span<const double> flat) {
  require(flat.size() == b.graph.nodes.size() + b.graph.edges.size(),
          ErrorKind::kLengthMismatch, "prediction count differs from item count");
  GraphScores s;
  s.objects.assign(flat.begin(), flat.begin() + static_cast<std::ptrdiff_t>(b.graph.nodes.size()));
  s.triplets.assign(flat.begin() + static_cast<std::ptrdiff_t>(b.graph.nodes.size()), flat.end());
  return s;
}

}  // namespace prism::importance
