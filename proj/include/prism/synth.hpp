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
#include <cstdio>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "prism/graphcore/types.hpp"
#include "prism/importance/ground_truth.hpp"
#include "prism/numerics/random.hpp"

namespace prism::synth {

using graphcore::Dims;
using graphcore::Embedding;
using graphcore::EmbeddingBundle;
using graphcore::SceneGraph;

enum class Mode {
  // Clusters differ in their core objects, relations and global look.
  kClusters,
  // Every cluster has the same objects, layout and global look; only the
  // relations between the core objects differ.
  kRelationOnly,
  // Graph sizes spread over 3..30 objects; everything beyond the three core
  // objects is unrelated clutter.
  kRetention,
};

inline std::string_view to_string(Mode m) {
  switch (m) {
    case Mode::kClusters: return "clusters";
    case Mode::kRelationOnly: return "relation_only";
    case Mode::kRetention: return "retention";
  }
  return "unknown";
}

inline Mode parse_mode(std::string_view s) {
  if (s == "clusters") return Mode::kClusters;
  if (s == "relation_only") return Mode::kRelationOnly;
  if (s == "retention") return Mode::kRetention;
  fail(ErrorKind::kInvalidArgument, "unknown fixture mode '" + std::string(s) + "'");
}

struct SynthOptions {
  std::size_t images = 50;
  std::size_t clusters = 5;
  std::uint64_t seed = 7;
  Mode mode = Mode::kClusters;
  double test_fraction = 0.3;
  Dims dims;
};

namespace detail {

// Text embeddings stand in for a frozen encoder: a fixed function of the
// string, independent of the fixture seed.
inline constexpr std::uint64_t kEncoderSeed = 0x5eedf00dULL;

inline void normalize(std::vector<double>& v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  for (double& x : v) x /= n;
}

inline std::vector<double> gaussian(numerics::Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

inline std::vector<double> unit_gaussian(std::uint64_t seed, std::string_view salt, std::size_t d) {
  numerics::Rng rng(numerics::mix_seed(seed, salt));
  auto v = gaussian(rng, d);
  normalize(v);
  return v;
}

inline Embedding to_float(const std::vector<double>& v) { return {v.begin(), v.end()}; }

inline void axpy(std::vector<double>& y, double a, const std::vector<double>& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

const std::vector<std::string> kObjectPool = {
    "person", "dog",   "frisbee", "horse", "cart",   "hat",   "cat",    "sofa",
    "remote", "boat",  "oar",     "lake",  "chef",   "knife", "onion",  "child",
    "kite",   "beach", "bicycle", "road",  "helmet", "bird",  "branch", "nest"};
const std::vector<std::string> kRelationPool = {
    "holding",  "swinging", "throwing", "catching", "biting",  "chasing", "riding",  "carrying",
    "watching", "kicking",  "pulling",  "wearing",  "cutting", "rowing",  "feeding", "climbing"};
const std::vector<std::string> kClutterObjects = {"tree", "grass", "sky", "bench", "wall", "cloud",
                                                  "fence", "sign", "pole", "window", "floor", "lamp"};
const std::vector<std::string> kClutterRelations = {"near", "beside", "behind"};

}  // namespace detail

inline Embedding label_embedding(std::string_view label, std::size_t d_text) {
  return detail::to_float(detail::unit_gaussian(detail::kEncoderSeed, "text:" + std::string(label), d_text));
}

// Embedding of a "subject relation object" phrase: dominated by the
// relation, with both objects mixed in.
inline Embedding phrase_embedding(std::string_view subject, std::string_view relation, std::string_view object,
                                  std::size_t d_text) {
  using namespace detail;
  std::vector<double> v(d_text, 0.0);
  const std::uint64_t s = kEncoderSeed;
  axpy(v, 0.6, unit_gaussian(s, "text:" + std::string(subject), d_text));
  axpy(v, 1.0, unit_gaussian(s, "text:" + std::string(relation), d_text));
  axpy(v, 0.6, unit_gaussian(s, "text:" + std::string(object), d_text));
  const std::string phrase = graphcore::phrase_string(std::string(subject), std::string(relation),
                                                      std::string(object));
  axpy(v, 0.1, unit_gaussian(s, "phrase:" + phrase, d_text));
  normalize(v);
  return to_float(v);
}

// Structural graph embedding: the mean node text embedding folded down to
// d_g - 4 entries, then the fraction of nodes with degree 0, 1, 2 and >= 3.
inline Embedding structural_graph_embedding(const SceneGraph& g, std::size_t d_g) {
  require(d_g > 4, ErrorKind::kDimMismatch, "structural graph embedding needs d_g > 4");
  Embedding out(d_g, 0.0f);
  const std::size_t fold = d_g - 4;
  const double n = static_cast<double>(std::max<std::size_t>(1, g.nodes.size()));
  std::vector<double> acc(fold, 0.0);
  for (const auto& node : g.nodes)
    for (std::size_t c = 0; c < node.text_emb.size(); ++c) acc[c % fold] += node.text_emb[c] / n;
  std::vector<int> degree(g.nodes.size(), 0);
  for (const auto& e : g.edges) {
    ++degree[static_cast<std::size_t>(e.src)];
    ++degree[static_cast<std::size_t>(e.dst)];
  }
  std::vector<double> hist(4, 0.0);
  for (int d : degree) hist[static_cast<std::size_t>(std::min(d, 3))] += 1.0 / n;
  for (std::size_t c = 0; c < fold; ++c) out[c] = static_cast<float>(acc[c]);
  for (std::size_t c = 0; c < 4; ++c) out[fold + c] = static_cast<float>(hist[c]);
  return out;
}

namespace detail {

struct ClusterPlan {
  std::vector<std::string> core_objects;  // three labels
  std::vector<std::string> core_relations;  // for edges 0->1, 1->2, 0->2
  std::vector<double> look;                 // global visual prototype
};

inline std::vector<ClusterPlan> plan_clusters(const SynthOptions& o) {
  std::vector<ClusterPlan> plans;
  numerics::Rng rng(numerics::mix_seed(o.seed, "clusters"));
  const auto shared_look = gaussian(rng, o.dims.d_vis);
  for (std::size_t c = 0; c < o.clusters; ++c) {
    ClusterPlan p;
    for (std::size_t k = 0; k < 3; ++k) {
      p.core_relations.push_back(kRelationPool[(3 * c + k) % kRelationPool.size()]);
      p.core_objects.push_back(o.mode == Mode::kRelationOnly
                                   ? kObjectPool[k]
                                   : kObjectPool[(3 * c + k) % kObjectPool.size()]);
    }
    p.look = o.mode == Mode::kClusters ? gaussian(rng, o.dims.d_vis) : shared_look;
    plans.push_back(std::move(p));
  }
  return plans;
}

inline graphcore::ObjectNode make_node(int id, const std::string& label, const Dims& dims, numerics::Rng& rng) {
  graphcore::ObjectNode n;
  n.id = id;
  n.label = label;
  n.text_emb = label_embedding(label, dims.d_text);
  auto vis = unit_gaussian(kEncoderSeed, "crop:" + label, dims.d_vis);
  for (double& x : vis) x += 0.1 * rng.normal();
  n.vis_emb = to_float(vis);
  n.bbox.w = static_cast<float>(rng.uniform(0.1, 0.5));
  n.bbox.h = static_cast<float>(rng.uniform(0.1, 0.5));
  n.bbox.x = static_cast<float>(rng.uniform(0.0, 1.0 - n.bbox.w));
  n.bbox.y = static_cast<float>(rng.uniform(0.0, 1.0 - n.bbox.h));
  n.area = n.bbox.w * n.bbox.h;
  return n;
}

inline void add_edge(SceneGraph& g, std::set<std::tuple<int, int, std::string>>& seen, int src, int dst,
                     const std::string& rel, const Dims& dims) {
  if (src == dst || !seen.emplace(src, dst, rel).second) return;
  graphcore::RelationEdge e;
  e.src = src;
  e.dst = dst;
  e.label = rel;
  e.rel_emb = label_embedding(rel, dims.d_text);
  e.phrase_emb = phrase_embedding(g.nodes[static_cast<std::size_t>(src)].label, rel,
                                  g.nodes[static_cast<std::size_t>(dst)].label, dims.d_text);
  g.edges.push_back(std::move(e));
}

}  // namespace detail

// Cluster of image i; images are dealt round-robin over clusters.
inline std::size_t cluster_of(std::size_t image, std::size_t clusters) { return image % clusters; }

// Seeded fixture set with planted structure. Captions describe the three core
// triplets of the image's cluster, so core items score high, clutter scores
// low, and images of one cluster are mutually similar. Within each cluster
// the first images go to the test split.
inline std::vector<EmbeddingBundle> make_fixtures(const SynthOptions& o) {
  using namespace detail;
  require(o.images >= 2 && o.clusters >= 1 && o.clusters <= o.images, ErrorKind::kInvalidArgument,
          "fixtures need >= 2 images and between 1 and #images clusters");
  require(o.test_fraction >= 0.0 && o.test_fraction < 1.0, ErrorKind::kInvalidArgument,
          "test fraction must be in [0, 1)");
  require(o.dims.d_text > 0 && o.dims.d_vis > 0 && o.dims.d_g > 4, ErrorKind::kDimMismatch,
          "fixture dims must be positive with d_g > 4");
  const Dims& dims = o.dims;
  const auto plans = plan_clusters(o);
  std::vector<EmbeddingBundle> out;
  for (std::size_t i = 0; i < o.images; ++i) {
    numerics::Rng rng(numerics::mix_seed(o.seed, "image:" + std::to_string(i)));
    const std::size_t c = cluster_of(i, o.clusters);
    const ClusterPlan& plan = plans[c];
    const std::size_t in_cluster = (o.images - c + o.clusters - 1) / o.clusters;
    const auto test_count = static_cast<std::size_t>(std::lround(o.test_fraction * static_cast<double>(in_cluster)));

    EmbeddingBundle b;
    char id[32];
    std::snprintf(id, sizeof id, "img_%04zu", i);
    b.image_id = id;
    b.split = i / o.clusters < test_count ? "test" : "train";

    SceneGraph& g = b.graph;
    std::set<std::tuple<int, int, std::string>> seen;
    for (int k = 0; k < 3; ++k) g.nodes.push_back(make_node(k, plan.core_objects[k], dims, rng));
    const std::size_t clutter = o.mode == Mode::kRetention ? i % 28 : 1 + rng.index(3);
    for (std::size_t k = 0; k < clutter; ++k) {
      const auto& label = kClutterObjects[rng.index(kClutterObjects.size())];
      g.nodes.push_back(make_node(static_cast<int>(g.nodes.size()), label, dims, rng));
    }
    add_edge(g, seen, 0, 1, plan.core_relations[0], dims);
    add_edge(g, seen, 1, 2, plan.core_relations[1], dims);
    add_edge(g, seen, 0, 2, plan.core_relations[2], dims);
    const int n = static_cast<int>(g.nodes.size());
    // Clutter hangs off the scene with background relations.
    for (int k = 3; k < n; ++k) {
      const int other = static_cast<int>(rng.index(static_cast<std::size_t>(k)));
      const auto& rel = kClutterRelations[rng.index(kClutterRelations.size())];
      if (rng.uniform() < 0.5)
        add_edge(g, seen, k, other, rel, dims);
      else
        add_edge(g, seen, other, k, rel, dims);
    }

    const std::size_t captions = 3 + rng.index(3);
    b.caption_embs = graphcore::Tensor(captions, dims.d_text);
    for (std::size_t k = 0; k < captions; ++k) {
      std::vector<double> cap(dims.d_text, 0.0);
      for (std::size_t t = 0; t < 3; ++t) {
        const auto& e = g.edges[t].phrase_emb;
        const double w = rng.uniform(0.8, 1.2);
        for (std::size_t d = 0; d < dims.d_text; ++d) cap[d] += w * e[d];
      }
      auto noise = gaussian(rng, dims.d_text);
      normalize(noise);
      axpy(cap, 0.3, noise);
      normalize(cap);
      for (std::size_t d = 0; d < dims.d_text; ++d) b.caption_embs(k, d) = static_cast<float>(cap[d]);
    }

    std::vector<double> look = plan.look;
    for (double& x : look) x += 0.3 * rng.normal();
    b.global_vis = to_float(look);
    b.graph_emb = structural_graph_embedding(g, dims.d_g);
    out.push_back(std::move(b));
  }
  return out;
}

// Importance targets with random tokens and planted scores kept away from
// the 0.4 decision threshold: positives in [0.55, 0.9], negatives in
// [-0.1, 0.25].
inline std::vector<importance::ScoreTarget> planted_targets(std::size_t count, const Dims& dims,
                                                            std::uint64_t seed) {
  numerics::Rng rng(numerics::mix_seed(seed, "planted"));
  auto vec = [&](std::size_t d) {
    Embedding v(d);
    for (float& x : v) x = static_cast<float>(rng.normal(0.0, 0.5));
    return v;
  };
  std::vector<importance::ScoreTarget> out;
  for (std::size_t i = 0; i < count; ++i) {
    importance::ScoreTarget t;
    const bool triplet = i % 2 == 1;
    t.kind = triplet ? importance::TargetKind::kTriplet : importance::TargetKind::kObject;
    t.bundle_index = 0;
    t.item_index = i;
    t.subject = vec(dims.d_text + dims.d_vis);
    t.object = triplet ? vec(dims.d_text + dims.d_vis) : Embedding(dims.d_text + dims.d_vis, 0.0f);
    t.relation = triplet ? vec(dims.d_text) : Embedding(dims.d_text, 0.0f);
    t.image = vec(dims.d_vis);
    t.graph = vec(dims.d_g);
    t.gt_score = rng.uniform() < 0.5 ? rng.uniform(0.55, 0.9) : rng.uniform(-0.1, 0.25);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace prism::synth
