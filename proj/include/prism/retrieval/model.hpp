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
#include <exception>
#include <thread>
#include <vector>

#include "prism/gnn/gnn.hpp"
#include "prism/graphcore/types.hpp"

namespace prism::retrieval {

using numerics::BasicTensor;
using numerics::ParameterList;
using numerics::Tape;
using numerics::Var;

struct RetrievalConfig {
  std::size_t vis_hidden = 64;
  std::size_t d_vis_out = 32;
  double alpha = 0.7;
  gnn::GnnConfig gnn;

  void validate() const {
    require(vis_hidden > 0 && d_vis_out > 0, ErrorKind::kConfigInvalid, "visual stream widths must be positive");
    require(std::isfinite(alpha) && alpha > 0.0, ErrorKind::kConfigInvalid, "norm cap must be positive");
    gnn.validate();
  }
};

// Minimum visual projection norm that can still be rescaled to the cap.
inline constexpr double kMinVisualNorm = 1e-9;

// E^M = [E_I || E_G]: the global visual embedding through a two-layer MLP
// rescaled to norm alpha, next to the graph embedding from the GNN.
template <typename T = float>
class DualStreamModel {
 public:
  DualStreamModel() = default;
  DualStreamModel(const graphcore::Dims& dims, const RetrievalConfig& cfg, std::uint64_t seed)
      : dims_(dims), cfg_(cfg) {
    cfg.validate();
    numerics::Rng rng(seed);
    visual_ = numerics::Mlp<T>("visual", {dims.d_vis, cfg.vis_hidden, cfg.d_vis_out}, rng,
                               numerics::Activation::kLeakyRelu);
    gnn_ = gnn::GnnStack<T>(dims, cfg.gnn, rng);
  }

  DualStreamModel(const DualStreamModel&) = delete;
  DualStreamModel& operator=(const DualStreamModel&) = delete;
  DualStreamModel(DualStreamModel&&) = default;
  DualStreamModel& operator=(DualStreamModel&&) = default;

  const graphcore::Dims& dims() const { return dims_; }
  const RetrievalConfig& config() const { return cfg_; }
  std::size_t embedding_width() const { return cfg_.d_vis_out + cfg_.gnn.out_dim; }

  // Rows of `z_i` (G x d_vis) to E_I rows of norm alpha.
  Var<T> visual_stream(const Var<T>& z_i) {
    return numerics::normalize_rows(visual_(z_i), cfg_.alpha, kMinVisualNorm,
                                    ErrorKind::kZeroVisualActivation);
  }

  // One E^M row per (bundle, graph) pair; `graphs[g]` is the (pruned) graph
  // used for bundle g.
  Var<T> embed(Tape<T>& tape, const std::vector<const graphcore::EmbeddingBundle*>& bundles,
               const std::vector<const graphcore::SceneGraph*>& graphs) {
    require(bundles.size() == graphs.size() && !bundles.empty(), ErrorKind::kInvalidArgument,
            "embed needs one graph per bundle");
    BasicTensor<T> z(bundles.size(), dims_.d_vis);
    for (std::size_t g = 0; g < bundles.size(); ++g) {
      require(bundles[g]->global_vis.size() == dims_.d_vis, ErrorKind::kDimMismatch,
              "global visual embedding width differs from d_vis");
      for (std::size_t c = 0; c < dims_.d_vis; ++c) z(g, c) = static_cast<T>(bundles[g]->global_vis[c]);
    }
    Var<T> e_i = visual_stream(tape.constant(std::move(z)));
    Var<T> e_g = gnn_.forward(tape, gnn::make_batch(graphs, dims_, cfg_.gnn.bidirectional));
    return numerics::concat_cols<T>({e_i, e_g});
  }

  BasicTensor<T> embed_image(const graphcore::EmbeddingBundle& bundle, const graphcore::SceneGraph& pruned) {
    Tape<T> tape;
    return embed(tape, {&bundle}, {&pruned}).value();
  }

  // Inference over many images, `chunk` graphs per tape, spread over `jobs`
  // threads. Rows follow input order regardless of `jobs`.
  BasicTensor<T> embed_all(const std::vector<graphcore::EmbeddingBundle>& bundles,
                           const std::vector<graphcore::SceneGraph>& graphs, std::size_t jobs = 1,
                           std::size_t chunk = 32) {
    require(bundles.size() == graphs.size(), ErrorKind::kLengthMismatch, "one graph per bundle required");
    const std::size_t n = bundles.size(), width = embedding_width();
    BasicTensor<T> out(n, width);
    const std::size_t chunks = (n + chunk - 1) / chunk;
    auto work = [&](std::size_t first, std::size_t stride) {
      for (std::size_t c = first; c < chunks; c += stride) {
        const std::size_t lo = c * chunk, hi = std::min(n, lo + chunk);
        std::vector<const graphcore::EmbeddingBundle*> bs;
        std::vector<const graphcore::SceneGraph*> gs;
        for (std::size_t i = lo; i < hi; ++i) {
          bs.push_back(&bundles[i]);
          gs.push_back(&graphs[i]);
        }
        Tape<T> tape;
        const BasicTensor<T>& e = embed(tape, bs, gs).value();
        std::copy(e.data(), e.data() + e.size(), out.data() + lo * width);
      }
    };
    jobs = std::max<std::size_t>(1, std::min(jobs, chunks));
    if (jobs == 1) {
      work(0, 1);
      return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::size_t t = 0; t < jobs; ++t)
      pool.emplace_back([&, t] {
        try {
          work(t, jobs);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return out;
  }

  ParameterList<T> parameters() {
    ParameterList<T> out;
    visual_.collect(out);
    for (auto* p : gnn_.parameters()) out.push_back(p);
    return out;
  }

  gnn::GnnStack<T>& gnn() { return gnn_; }

 private:
  graphcore::Dims dims_;
  RetrievalConfig cfg_;
  numerics::Mlp<T> visual_;
  gnn::GnnStack<T> gnn_;
};

struct PairLoss {
  double contribution = 0.0;
  double weight = 1.0;
};

// Squared error weighted by exp(2 s), so similar pairs dominate.
inline PairLoss weighted_pair_loss(double predicted, double target) {
  const double w = std::exp(2.0 * target);
  return {w * (predicted - target) * (predicted - target), w};
}

// Mean weighted squared error over pairs (left[p], right[p]) of the rows of
// `embeddings`; `targets` are the ground-truth similarities.
template <typename T>
Var<T> pair_loss(const Var<T>& embeddings, const std::vector<std::size_t>& left,
                 const std::vector<std::size_t>& right, const std::vector<double>& targets) {
  require(left.size() == right.size() && left.size() == targets.size() && !left.empty(),
          ErrorKind::kLengthMismatch, "pair lists differ in length");
  Tape<T>& tape = embeddings.tape();
  const std::size_t b = left.size();
  BasicTensor<T> s(b, 1), w(b, 1);
  for (std::size_t p = 0; p < b; ++p) {
    s(p, 0) = static_cast<T>(targets[p]);
    w(p, 0) = static_cast<T>(std::exp(2.0 * targets[p]));
  }
  Var<T> pred = numerics::row_sum(
      numerics::mul(numerics::gather_rows(embeddings, left), numerics::gather_rows(embeddings, right)));
  Var<T> err = numerics::sub(pred, tape.constant(std::move(s)));
  return numerics::mean_all(numerics::mul(numerics::mul(err, err), tape.constant(std::move(w))));
}

}  // namespace prism::retrieval
