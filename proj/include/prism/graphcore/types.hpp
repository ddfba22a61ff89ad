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

#include <cmath>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "prism/error.hpp"
#include "prism/numerics/tensor.hpp"

namespace prism::graphcore {

using numerics::Tensor;
using Embedding = std::vector<float>;

inline constexpr double kBoxTolerance = 1e-6;
inline constexpr double kUnitNormTolerance = 1e-5;

// Normalized box: top-left corner plus extent, all in [0, 1].
struct BBox {
  float x = 0, y = 0, w = 0, h = 0;
  friend bool operator==(const BBox&, const BBox&) = default;
};

struct ObjectNode {
  int id = 0;
  std::string label;
  Embedding text_emb;  // unit L2 norm
  Embedding vis_emb;   // crop embedding
  BBox bbox;
  float area = 0;
  friend bool operator==(const ObjectNode&, const ObjectNode&) = default;
};

// Directed relation src -> dst. `phrase_emb` is the embedding of the
// space-joined "subject relation object" phrase; it may be empty for graphs
// that are only used at inference.
struct RelationEdge {
  int src = 0;
  int dst = 0;
  std::string label;
  Embedding rel_emb;
  Embedding phrase_emb;
  friend bool operator==(const RelationEdge&, const RelationEdge&) = default;
};

struct SceneGraph {
  std::vector<ObjectNode> nodes;
  std::vector<RelationEdge> edges;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_edges() const { return edges.size(); }
  friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

struct Triplet {
  int subj = 0;
  std::size_t rel_edge_index = 0;
  int obj = 0;
  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct Dims {
  std::size_t d_text = 32;
  std::size_t d_vis = 32;
  std::size_t d_g = 16;
  friend bool operator==(const Dims&, const Dims&) = default;
};

struct EmbeddingBundle {
  std::string image_id;
  std::string split;    // "train", "val", "test" or empty
  Tensor caption_embs;  // K x d_text, rows unit norm; K may be 0
  Embedding global_vis;  // z_I
  Embedding graph_emb;   // z_G
  SceneGraph graph;

  std::size_t num_captions() const { return caption_embs.rows(); }
  friend bool operator==(const EmbeddingBundle&, const EmbeddingBundle&) = default;
};

// One triplet per edge, in edge order.
inline std::vector<Triplet> extract_triplets(const SceneGraph& g) {
  std::vector<Triplet> out;
  out.reserve(g.edges.size());
  for (std::size_t e = 0; e < g.edges.size(); ++e)
    out.push_back({g.edges[e].src, e, g.edges[e].dst});
  return out;
}

// "subject relation object", the phrase whose embedding scores a triplet.
inline std::string phrase_string(const std::string& subject, const std::string& relation,
                                 const std::string& object) {
  return subject + " " + relation + " " + object;
}

inline std::string phrase_string(const SceneGraph& g, const Triplet& t) {
  return phrase_string(g.nodes[static_cast<std::size_t>(t.subj)].label,
                       g.edges[t.rel_edge_index].label,
                       g.nodes[static_cast<std::size_t>(t.obj)].label);
}

namespace detail {

inline bool all_finite(const Embedding& v) {
  for (float x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double l2_norm(std::span<const float> v) {
  double s = 0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

}  // namespace detail

inline void validate_graph(const SceneGraph& g, const Dims& dims, const std::string& where) {
  auto bad = [&](const std::string& what) {
    fail(ErrorKind::kInvariantViolation, where + ": " + what);
  };
  auto dim = [&](const Embedding& v, std::size_t expect, const std::string& what) {
    if (v.size() != expect)
      fail(ErrorKind::kDimMismatch, where + ": " + what + " has " + std::to_string(v.size()) +
                                        " dims, expected " + std::to_string(expect));
    if (!detail::all_finite(v)) bad(what + " is not finite");
  };
  if (g.nodes.empty()) bad("scene graph has no nodes");
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const ObjectNode& n = g.nodes[i];
    const std::string tag = "node " + std::to_string(i);
    if (n.id != static_cast<int>(i)) bad(tag + " id is not contiguous from 0");
    dim(n.text_emb, dims.d_text, tag + " text embedding");
    dim(n.vis_emb, dims.d_vis, tag + " visual embedding");
    if (std::abs(detail::l2_norm(n.text_emb) - 1.0) > kUnitNormTolerance)
      bad(tag + " text embedding is not unit norm");
    const BBox& b = n.bbox;
    for (float c : {b.x, b.y, b.w, b.h, n.area}) {
      if (!std::isfinite(c) || c < 0.0f || c > 1.0f) bad(tag + " bbox/area outside [0, 1]");
    }
    if (b.x + b.w > 1.0 + kBoxTolerance || b.y + b.h > 1.0 + kBoxTolerance)
      bad(tag + " bbox extends past the image");
  }
  std::set<std::tuple<int, int, std::string>> seen;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const RelationEdge& r = g.edges[e];
    const std::string tag = "edge " + std::to_string(e);
    const int n = static_cast<int>(g.nodes.size());
    if (r.src < 0 || r.src >= n || r.dst < 0 || r.dst >= n) bad(tag + " references a missing node");
    if (r.src == r.dst) bad(tag + " is a self loop");
    if (!seen.emplace(r.src, r.dst, r.label).second) bad(tag + " duplicates (src, dst, label)");
    dim(r.rel_emb, dims.d_text, tag + " relation embedding");
    if (std::abs(detail::l2_norm(r.rel_emb) - 1.0) > kUnitNormTolerance)
      bad(tag + " relation embedding is not unit norm");
    if (!r.phrase_emb.empty()) dim(r.phrase_emb, dims.d_text, tag + " phrase embedding");
  }
}

inline void validate_bundle(const EmbeddingBundle& b, const Dims& dims) {
  const std::string where = "image '" + b.image_id + "'";
  if (b.image_id.empty()) fail(ErrorKind::kInvariantViolation, "bundle without image id");
  if (b.caption_embs.rows() > 0 && b.caption_embs.cols() != dims.d_text)
    fail(ErrorKind::kDimMismatch, where + ": caption width differs from d_text");
  if (!b.caption_embs.all_finite())
    fail(ErrorKind::kInvariantViolation, where + ": caption embedding is not finite");
  for (std::size_t k = 0; k < b.caption_embs.rows(); ++k) {
    if (std::abs(detail::l2_norm(b.caption_embs.row_span(k)) - 1.0) > kUnitNormTolerance)
      fail(ErrorKind::kInvariantViolation, where + ": caption " + std::to_string(k) +
                                               " is not unit norm");
  }
  if (b.global_vis.size() != dims.d_vis)
    fail(ErrorKind::kDimMismatch, where + ": global visual embedding width differs from d_vis");
  if (b.graph_emb.size() != dims.d_g)
    fail(ErrorKind::kDimMismatch, where + ": graph embedding width differs from d_g");
  if (!detail::all_finite(b.global_vis) || !detail::all_finite(b.graph_emb))
    fail(ErrorKind::kInvariantViolation, where + ": global embedding is not finite");
  validate_graph(b.graph, dims, where);
}

}  // namespace prism::graphcore
