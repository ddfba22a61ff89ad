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

#include <chrono>
#include <functional>
#include <string>
#include <vector>

#include "prism/gnn/gnn.hpp"
#include "prism/importance/model.hpp"
#include "prism/numerics/attention.hpp"
#include "prism/numerics/gradcheck.hpp"
#include "prism/numerics/layers.hpp"
#include "prism/retrieval/model.hpp"
#include "prism/synth.hpp"

namespace prism::gradcheck {

using numerics::GradcheckResult;
using numerics::Parameter;
using numerics::ParameterList;
using numerics::Tape;
using numerics::Var;

inline constexpr double kTolerance = 1e-3;

namespace detail {

inline Parameter<double> input(const std::string& name, std::size_t rows, std::size_t cols, numerics::Rng& rng) {
  return numerics::uniform_parameter<double>(name, rows, cols, 1.0, rng);
}

template <typename Layer>
ParameterList<double> params_of(Layer& layer, std::initializer_list<Parameter<double>*> inputs) {
  ParameterList<double> out(inputs);
  layer.collect(out);
  return out;
}

// 4 nodes, 5 directed edges including a parallel pair, plus self-loops.
inline gnn::Topology small_topology() {
  return gnn::with_self_loops({0, 1, 2, 3, 0}, {1, 2, 3, 0, 1}, 4);
}

inline const graphcore::Dims& small_dims() {
  static const graphcore::Dims d{8, 8, 8};
  return d;
}

}  // namespace detail

inline GradcheckResult linear(std::uint64_t seed) {
  numerics::Rng rng(seed);
  numerics::Linear<double> layer("linear", 7, 6, rng);
  auto x = detail::input("x", 5, 7, rng);
  return numerics::gradcheck(detail::params_of(layer, {&x}), [&](Tape<double>& t) {
    return numerics::random_projection_loss(layer(t.param(x)), seed);
  });
}

inline GradcheckResult mlp(std::uint64_t seed) {
  numerics::Rng rng(seed);
  numerics::Mlp<double> gelu("mlp.gelu", {6, 10, 4}, rng, numerics::Activation::kGelu);
  numerics::Mlp<double> leaky("mlp.leaky", {4, 8, 3}, rng, numerics::Activation::kLeakyRelu);
  auto x = detail::input("x", 5, 6, rng);
  ParameterList<double> params{&x};
  gelu.collect(params);
  leaky.collect(params);
  return numerics::gradcheck(params, [&](Tape<double>& t) {
    return numerics::random_projection_loss(leaky(gelu(t.param(x))), seed);
  });
}

// Two groups: 2 queries over 3 keys each, width 8, 2 heads.
inline GradcheckResult attention(std::uint64_t seed) {
  numerics::Rng rng(seed);
  numerics::MultiHeadAttention<double> mha("mha", 8, 2, rng);
  auto q = detail::input("query", 4, 8, rng);
  auto m = detail::input("memory", 6, 8, rng);
  return numerics::gradcheck(detail::params_of(mha, {&q, &m}), [&](Tape<double>& t) {
    return numerics::random_projection_loss(mha(t.param(q), t.param(m), 2), seed);
  });
}

// 5 tokens of width 16, one pre-norm block, 2 heads.
inline GradcheckResult transformer(std::uint64_t seed) {
  numerics::Rng rng(seed);
  numerics::TransformerEncoder<double> enc("encoder", 16, 1, 2, 0.0, rng);
  auto x = detail::input("x", 5, 16, rng);
  return numerics::gradcheck(detail::params_of(enc, {&x}), [&](Tape<double>& t) {
    return numerics::random_projection_loss(enc(t.param(x)), seed);
  });
}

inline GradcheckResult edge_aware_layer(std::uint64_t seed) {
  numerics::Rng rng(seed);
  const auto& dims = detail::small_dims();
  gnn::EdgeAwareLayer<double> layer("edge_aware", dims, 8, 2, rng);
  const gnn::Topology topo = detail::small_topology();
  auto x = detail::input("x", topo.nodes, gnn::node_feature_width(dims), rng);
  auto e = detail::input("edge", topo.real_edges, dims.d_text, rng);
  return numerics::gradcheck(detail::params_of(layer, {&x, &e}), [&](Tape<double>& t) {
    return numerics::random_projection_loss(layer(t.param(x), t.param(e), topo), seed);
  });
}

inline GradcheckResult gatv2_layer(std::uint64_t seed) {
  numerics::Rng rng(seed);
  gnn::GatV2Layer<double> layer("gatv2", 8, 8, 2, rng);
  const gnn::Topology topo = detail::small_topology();
  auto h = detail::input("h", topo.nodes, 8, rng);
  return numerics::gradcheck(detail::params_of(layer, {&h}), [&](Tape<double>& t) {
    return numerics::random_projection_loss(layer(t.param(h), topo), seed);
  });
}

inline GradcheckResult importance_model(std::uint64_t seed) {
  const auto& dims = detail::small_dims();
  importance::ImportanceModel<double> model(dims, {16, 2, 1, 2, 0.0}, seed);
  const auto targets = synth::planted_targets(2, dims, seed);
  const std::vector<const importance::ScoreTarget*> batch{&targets[0], &targets[1]};
  return numerics::gradcheck(model.parameters(), [&](Tape<double>& t) {
    return numerics::random_projection_loss(model.forward(t, batch), seed);
  });
}

// Weighted pair loss through both streams of a small model on four images.
inline GradcheckResult dual_stream_loss(std::uint64_t seed) {
  synth::SynthOptions o;
  o.images = 4;
  o.clusters = 2;
  o.seed = seed;
  o.dims = detail::small_dims();
  const auto bundles = synth::make_fixtures(o);
  retrieval::RetrievalConfig cfg;
  cfg.vis_hidden = 8;
  cfg.d_vis_out = 4;
  cfg.gnn = {2, 8, 2, 4, 0.0, false, true};
  retrieval::DualStreamModel<double> model(o.dims, cfg, seed);
  std::vector<const graphcore::EmbeddingBundle*> bs;
  std::vector<const graphcore::SceneGraph*> gs;
  for (const auto& b : bundles) {
    bs.push_back(&b);
    gs.push_back(&b.graph);
  }
  numerics::Rng rng(numerics::mix_seed(seed, "pairs"));
  const std::vector<std::size_t> left{0, 0, 1, 2}, right{1, 2, 3, 3};
  std::vector<double> targets;
  for (std::size_t p = 0; p < left.size(); ++p) targets.push_back(rng.uniform(-0.2, 1.0));
  return numerics::gradcheck(model.parameters(), [&](Tape<double>& t) {
    return retrieval::pair_loss(model.embed(t, bs, gs), left, right, targets);
  });
}

struct Suite {
  std::string name;
  std::function<GradcheckResult(std::uint64_t)> run;
};

inline std::vector<Suite> suites() {
  return {{"linear", linear},
          {"mlp", mlp},
          {"attention", attention},
          {"transformer", transformer},
          {"edge_aware_layer", edge_aware_layer},
          {"gatv2_layer", gatv2_layer},
          {"importance_model", importance_model},
          {"dual_stream_loss", dual_stream_loss}};
}

struct SuiteReport {
  std::string name;
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::uint64_t worst_seed = 0;
  std::size_t runs = 0;
};

struct Report {
  std::vector<SuiteReport> suites;
  double max_relative_error = 0.0;
  double seconds = 0.0;
};

// Every suite over seeds first_seed .. first_seed + seeds - 1.
inline Report run_all(std::size_t seeds = 20, std::uint64_t first_seed = 1) {
  const auto start = std::chrono::steady_clock::now();
  Report r;
  for (const Suite& s : suites()) {
    SuiteReport sr;
    sr.name = s.name;
    for (std::size_t k = 0; k < seeds; ++k) {
      const std::uint64_t seed = first_seed + k;
      const GradcheckResult g = s.run(seed);
      ++sr.runs;
      if (sr.runs == 1 || g.max_relative_error > sr.max_relative_error) {
        sr.max_relative_error = g.max_relative_error;
        sr.worst_parameter = g.worst_parameter;
        sr.worst_seed = seed;
      }
    }
    r.max_relative_error = std::max(r.max_relative_error, sr.max_relative_error);
    r.suites.push_back(std::move(sr));
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace prism::gradcheck
