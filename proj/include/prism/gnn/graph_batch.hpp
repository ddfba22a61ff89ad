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

#include <vector>

#include "prism/graphcore/types.hpp"

namespace prism::gnn {

using graphcore::SceneGraph;
using graphcore::Tensor;

// Width of the box features appended to every node: x, y, w, h, area.
inline constexpr std::size_t kBoxFeatures = 5;

inline std::size_t node_feature_width(const graphcore::Dims& dims) {
  return dims.d_text + dims.d_vis + kBoxFeatures;
}

// Several scene graphs laid out as one disjoint union. Node features are
// [text || crop visual || bbox || area]; the text block comes first so the
// edge-aware layer can split it from the visual block.
struct GraphBatch {
  Tensor node_features;              // N x (d_text + d_vis + 5)
  Tensor edge_embeddings;            // E x d_text
  std::vector<std::size_t> src;      // per edge, batch-global node index
  std::vector<std::size_t> dst;
  std::vector<std::size_t> graph_of_node;
  std::size_t graphs = 0;
  std::size_t d_text = 0;

  std::size_t num_nodes() const { return graph_of_node.size(); }
  std::size_t num_edges() const { return src.size(); }
};

// With `bidirectional`, every relation is also delivered against its
// direction, carrying the same relation embedding.
inline GraphBatch make_batch(const std::vector<const SceneGraph*>& graphs,
                             const graphcore::Dims& dims, bool bidirectional = false) {
  GraphBatch b;
  b.graphs = graphs.size();
  b.d_text = dims.d_text;
  std::size_t nodes = 0, edges = 0;
  for (const SceneGraph* g : graphs) {
    require(!g->nodes.empty(), ErrorKind::kEmptyGraph, "cannot embed a graph without nodes");
    nodes += g->nodes.size();
    edges += g->edges.size() * (bidirectional ? 2 : 1);
  }
  const std::size_t width = node_feature_width(dims);
  b.node_features = Tensor(nodes, width);
  b.edge_embeddings = Tensor(edges, dims.d_text);
  std::size_t base = 0, row = 0, erow = 0;
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const SceneGraph& g = *graphs[gi];
    for (const auto& n : g.nodes) {
      require(n.text_emb.size() == dims.d_text && n.vis_emb.size() == dims.d_vis,
              ErrorKind::kDimMismatch, "node embedding widths differ from declared dims");
      float* out = b.node_features.data() + row * width;
      out = std::copy(n.text_emb.begin(), n.text_emb.end(), out);
      out = std::copy(n.vis_emb.begin(), n.vis_emb.end(), out);
      *out++ = n.bbox.x;
      *out++ = n.bbox.y;
      *out++ = n.bbox.w;
      *out++ = n.bbox.h;
      *out++ = n.area;
      b.graph_of_node.push_back(gi);
      ++row;
    }
    for (const auto& e : g.edges) {
      require(e.rel_emb.size() == dims.d_text, ErrorKind::kMissingEdgeEmbedding,
              "edge without a relation embedding of width d_text");
      auto push = [&](std::size_t s, std::size_t d) {
        b.src.push_back(base + s);
        b.dst.push_back(base + d);
        std::copy(e.rel_emb.begin(), e.rel_emb.end(), b.edge_embeddings.data() + erow * dims.d_text);
        ++erow;
      };
      push(static_cast<std::size_t>(e.src), static_cast<std::size_t>(e.dst));
      if (bidirectional) push(static_cast<std::size_t>(e.dst), static_cast<std::size_t>(e.src));
    }
    base += g.nodes.size();
  }
  return b;
}

}  // namespace prism::gnn
