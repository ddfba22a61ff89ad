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

#include <string>
#include <vector>

#include "prism/gnn/graph_batch.hpp"
#include "prism/numerics/layers.hpp"

namespace prism::gnn {

using numerics::BasicTensor;
using numerics::Parameter;
using numerics::ParameterList;
using numerics::Tape;
using numerics::Var;

struct GnnConfig {
  std::size_t layers = 3;
  std::size_t hidden = 64;
  std::size_t heads = 4;
  std::size_t out_dim = 32;
  double dropout = 0.1;
  bool bidirectional = false;
  // false swaps layer 1 for a plain attention layer over raw node features.
  bool edge_aware_first = true;

  void validate() const {
    require(layers >= 1, ErrorKind::kConfigInvalid, "gnn needs >= 1 layer");
    require(hidden > 0 && heads > 0 && hidden % heads == 0, ErrorKind::kHeadsDoNotDivide,
            "gnn hidden width must be divisible by the head count");
    require(out_dim > 0, ErrorKind::kConfigInvalid, "gnn output width must be positive");
    require(dropout >= 0.0 && dropout < 1.0, ErrorKind::kConfigInvalid, "gnn dropout must be in [0, 1)");
  }
};

// Edge lists extended by one self-loop per node; loops come last.
struct Topology {
  std::vector<std::size_t> src, dst;
  std::size_t nodes = 0;
  std::size_t real_edges = 0;
};

inline Topology with_self_loops(const std::vector<std::size_t>& src,
                                const std::vector<std::size_t>& dst, std::size_t nodes) {
  Topology t{src, dst, nodes, src.size()};
  for (std::size_t i = 0; i < nodes; ++i) {
    t.src.push_back(i);
    t.dst.push_back(i);
  }
  return t;
}

// Attention from target i over sources j:
//   e_ij = a . LeakyReLU(W_t z_i + W_s m_ij), alpha = softmax over in-edges of i,
//   out_i = sum_j alpha_ij W_s m_ij + b, per head.
// W_t and W_s together are the attention matrix applied to [z_i || m_ij].
template <typename T>
class AttentionCore {
 public:
  AttentionCore() = default;
  AttentionCore(const std::string& name, std::size_t target_in, std::size_t source_in,
                std::size_t width, std::size_t heads, numerics::Rng& rng)
      : heads_(heads), width_(width) {
    require(heads > 0 && width % heads == 0, ErrorKind::kHeadsDoNotDivide,
            name + ": width not divisible by head count");
    w_target_ = numerics::Linear<T>(name + ".w_target", target_in, width, rng, false);
    w_source_ = numerics::Linear<T>(name + ".w_source", source_in, width, rng, true);
    const double bound = 1.0 / std::sqrt(static_cast<double>(width / heads));
    attn_ = numerics::uniform_parameter<T>(name + ".attn", 1, width, bound, rng);
    bias_ = numerics::constant_parameter<T>(name + ".bias", 1, width, T(0));
  }

  // `targets` holds one row per node, `messages` one row per edge of `topo`.
  Var<T> operator()(const Var<T>& targets, const Var<T>& messages, const Topology& topo,
                    BasicTensor<T>* alpha_out = nullptr) {
    Tape<T>& tape = targets.tape();
    Var<T> src = w_source_(messages);
    Var<T> tgt = numerics::gather_rows(w_target_(targets), topo.dst);
    Var<T> logits = numerics::head_sum(
        numerics::mul_row(numerics::leaky_relu(numerics::add(tgt, src), 0.2), tape.param(attn_)), heads_);
    Var<T> alpha = numerics::edge_softmax(logits, topo.dst, topo.nodes);
    if (alpha_out) *alpha_out = alpha.value();
    return numerics::add_row(numerics::scatter_weighted(src, alpha, topo.dst, topo.nodes),
                             tape.param(bias_));
  }

  std::size_t heads() const { return heads_; }
  std::size_t width() const { return width_; }

  void collect(ParameterList<T>& out) {
    w_target_.collect(out);
    w_source_.collect(out);
    out.push_back(&attn_);
    out.push_back(&bias_);
  }

 private:
  std::size_t heads_ = 1, width_ = 0;
  numerics::Linear<T> w_target_, w_source_;
  Parameter<T> attn_, bias_;
};

// First layer. Each neighbor message is conditioned on the connecting
// relation: its text part is fused with the edge embedding by an MLP, its
// visual part (crop embedding and box) passes through unchanged.
template <typename T>
class EdgeAwareLayer {
 public:
  EdgeAwareLayer() = default;
  EdgeAwareLayer(const std::string& name, const graphcore::Dims& dims, std::size_t width,
                 std::size_t heads, numerics::Rng& rng)
      : d_text_(dims.d_text), d_node_(node_feature_width(dims)) {
    fusion_ = numerics::Mlp<T>(name + ".fusion", {2 * d_text_, width, d_text_}, rng);
    self_edge_ = numerics::normal_parameter<T>(name + ".self_edge", 1, d_text_,
                                               1.0 / std::sqrt(static_cast<double>(d_text_)), rng);
    core_ = AttentionCore<T>(name, d_node_, d_node_, width, heads, rng);
  }

  // Rows of z_j_text, z_ij, z_j_vis pair up; returns [fused text || z_j_vis].
  Var<T> contextualize_neighbor(const Var<T>& z_j_text, const Var<T>& z_ij, const Var<T>& z_j_vis) {
    require(z_j_text.cols() == d_text_ && z_ij.cols() == d_text_, ErrorKind::kDimMismatch,
            "contextualize_neighbor: text and edge widths must equal d_text");
    require(z_j_vis.cols() == d_node_ - d_text_, ErrorKind::kDimMismatch,
            "contextualize_neighbor: visual width mismatch");
    require(z_j_text.rows() == z_ij.rows() && z_ij.rows() == z_j_vis.rows(), ErrorKind::kDimMismatch,
            "contextualize_neighbor: row counts differ");
    return numerics::concat_cols<T>({fusion_(numerics::concat_cols<T>({z_j_text, z_ij})), z_j_vis});
  }

  // `x` is N x d_node, `edge_emb` is E x d_text for the E real edges of `topo`.
  Var<T> operator()(const Var<T>& x, const Var<T>& edge_emb, const Topology& topo,
                    BasicTensor<T>* alpha_out = nullptr) {
    require(x.cols() == d_node_, ErrorKind::kDimMismatch, "edge-aware layer: node width mismatch");
    require(edge_emb.rows() == topo.real_edges && (topo.real_edges == 0 || edge_emb.cols() == d_text_),
            ErrorKind::kMissingEdgeEmbedding, "edge-aware layer: one d_text embedding per edge required");
    Tape<T>& tape = x.tape();
    Var<T> loops = numerics::tile_rows(tape.param(self_edge_), topo.nodes);
    Var<T> z_ij = topo.real_edges == 0 ? loops : numerics::concat_rows<T>({edge_emb, loops});
    Var<T> neighbors = numerics::gather_rows(x, topo.src);
    Var<T> messages = contextualize_neighbor(numerics::slice_cols(neighbors, 0, d_text_), z_ij,
                                             numerics::slice_cols(neighbors, d_text_, d_node_ - d_text_));
    return core_(x, messages, topo, alpha_out);
  }

  void collect(ParameterList<T>& out) {
    fusion_.collect(out);
    out.push_back(&self_edge_);
    core_.collect(out);
  }

 private:
  std::size_t d_text_ = 0, d_node_ = 0;
  numerics::Mlp<T> fusion_;
  Parameter<T> self_edge_;
  AttentionCore<T> core_;
};

// Plain GATv2 layer over node states; never sees edge embeddings.
template <typename T>
class GatV2Layer {
 public:
  GatV2Layer() = default;
  GatV2Layer(const std::string& name, std::size_t in, std::size_t width, std::size_t heads,
             numerics::Rng& rng)
      : core_(name, in, in, width, heads, rng) {}

  Var<T> operator()(const Var<T>& h, const Topology& topo, BasicTensor<T>* alpha_out = nullptr) {
    return core_(h, numerics::gather_rows(h, topo.src), topo, alpha_out);
  }

  void collect(ParameterList<T>& out) { core_.collect(out); }

 private:
  AttentionCore<T> core_;
};

// Layer 1 (edge-aware), then residual attention layers, mean over nodes per
// graph and a linear output transform.
template <typename T = float>
class GnnStack {
 public:
  GnnStack() = default;
  GnnStack(const graphcore::Dims& dims, const GnnConfig& cfg, numerics::Rng& rng)
      : dims_(dims), cfg_(cfg) {
    cfg.validate();
    const std::size_t d_node = node_feature_width(dims);
    if (cfg.edge_aware_first)
      first_edge_ = EdgeAwareLayer<T>("gnn.layer0", dims, cfg.hidden, cfg.heads, rng);
    else
      first_plain_ = GatV2Layer<T>("gnn.layer0", d_node, cfg.hidden, cfg.heads, rng);
    for (std::size_t l = 1; l < cfg.layers; ++l)
      upper_.emplace_back("gnn.layer" + std::to_string(l), cfg.hidden, cfg.hidden, cfg.heads, rng);
    readout_ = numerics::Linear<T>("gnn.readout", cfg.hidden, cfg.out_dim, rng);
  }

  const GnnConfig& config() const { return cfg_; }
  std::size_t out_dim() const { return cfg_.out_dim; }

  // Node states after layer 1, before any later layer.
  Var<T> first_layer(Tape<T>& tape, const GraphBatch& batch, const Topology& topo,
                     BasicTensor<T>* alpha_out = nullptr) {
    Var<T> x = numerics::dropout(tape.constant(numerics::tensor_cast<T>(batch.node_features)), cfg_.dropout);
    if (!cfg_.edge_aware_first) return numerics::gelu(first_plain_(x, topo, alpha_out));
    Var<T> e = tape.constant(numerics::tensor_cast<T>(batch.edge_embeddings));
    return numerics::gelu(first_edge_(x, e, topo, alpha_out));
  }

  // One E_G row per graph of the batch.
  Var<T> forward(Tape<T>& tape, const GraphBatch& batch) {
    require(batch.num_nodes() > 0, ErrorKind::kEmptyGraph, "gnn batch has no nodes");
    const Topology topo = with_self_loops(batch.src, batch.dst, batch.num_nodes());
    Var<T> h = first_layer(tape, batch, topo);
    for (auto& layer : upper_)
      h = numerics::add(h, numerics::gelu(layer(numerics::dropout(h, cfg_.dropout), topo)));
    return readout_(numerics::segment_mean(h, batch.graph_of_node, batch.graphs));
  }

  ParameterList<T> parameters() {
    ParameterList<T> out;
    if (cfg_.edge_aware_first)
      first_edge_.collect(out);
    else
      first_plain_.collect(out);
    for (auto& l : upper_) l.collect(out);
    readout_.collect(out);
    return out;
  }

  EdgeAwareLayer<T>& edge_aware_layer() { return first_edge_; }
  std::vector<GatV2Layer<T>>& upper_layers() { return upper_; }

 private:
  graphcore::Dims dims_;
  GnnConfig cfg_;
  EdgeAwareLayer<T> first_edge_;
  GatV2Layer<T> first_plain_;
  std::vector<GatV2Layer<T>> upper_;
  numerics::Linear<T> readout_;
};

// E_G for a single graph.
template <typename T>
BasicTensor<T> forward_graph(GnnStack<T>& stack, const graphcore::SceneGraph& graph,
                             const graphcore::Dims& dims) {
  Tape<T> tape;
  const GraphBatch batch = make_batch({&graph}, dims, stack.config().bidirectional);
  return stack.forward(tape, batch).value();
}

}  // namespace prism::gnn
