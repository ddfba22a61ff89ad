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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "prism/config.hpp"
#include "prism/eval/metrics.hpp"
#include "prism/importance/train.hpp"
#include "prism/pruner/prune.hpp"
#include "prism/pruner/retention.hpp"
#include "prism/retrieval/index.hpp"
#include "prism/retrieval/similarity.hpp"
#include "prism/retrieval/train.hpp"

namespace prism {

using graphcore::EmbeddingBundle;

using Log = std::function<void(const std::string&)>;

struct SplitBundles {
  std::vector<EmbeddingBundle> train, test;
};

// Bundles tagged "test" form the test split; everything else trains.
inline SplitBundles split_bundles(const std::vector<EmbeddingBundle>& bundles) {
  SplitBundles s;
  for (const auto& b : bundles) (b.split == "test" ? s.test : s.train).push_back(b);
  return s;
}

// Ground-truth scores and the resulting pruned graph for every bundle.
inline std::vector<pruner::PruneResult> prune_with_ground_truth(const std::vector<EmbeddingBundle>& bundles,
                                                                const pruner::PruneOptions& opts) {
  std::vector<pruner::PruneResult> out;
  for (const auto& b : bundles) out.push_back(pruner::prune(b.graph, importance::ground_truth_scores(b), opts));
  return out;
}

// Predicted scores for every item of every bundle, one GraphScores each.
template <typename T>
std::vector<importance::GraphScores> predict_graph_scores(importance::ImportanceModel<T>& model,
                                                          const std::vector<EmbeddingBundle>& bundles,
                                                          std::size_t jobs) {
  const auto targets = importance::build_targets(bundles, false);
  const auto flat = importance::predict_scores(model, targets, jobs);
  std::vector<importance::GraphScores> out;
  std::size_t offset = 0;
  for (const auto& b : bundles) {
    const std::size_t n = b.graph.nodes.size() + b.graph.edges.size();
    out.push_back(importance::unflatten_scores(b, std::span<const double>(flat).subspan(offset, n)));
    offset += n;
  }
  return out;
}

inline std::vector<graphcore::SceneGraph> graphs_of(const std::vector<pruner::PruneResult>& pruned) {
  std::vector<graphcore::SceneGraph> out;
  for (const auto& p : pruned) out.push_back(p.graph);
  return out;
}

inline std::vector<std::string> ids_of(const std::vector<EmbeddingBundle>& bundles) {
  std::vector<std::string> out;
  for (const auto& b : bundles) out.push_back(b.image_id);
  return out;
}

struct PipelineResult {
  numerics::TrainingReport importance_report;
  importance::ClassifierMetrics importance_test;  // predicted vs ground truth on test items
  numerics::TrainingReport retrieval_report;
  std::vector<pruner::RetentionDecision> test_decisions;
  retrieval::RetrievalIndex index;
  eval::MetricsTable metrics;
  double seconds = 0.0;
};

// Full run on one fixture set: train the importance model on the train
// split, prune train graphs with ground-truth scores, train the dual-stream
// model, then score and prune the test graphs with the learned model, index
// them and evaluate leave-one-out.
inline PipelineResult run_pipeline(const std::vector<EmbeddingBundle>& bundles, const graphcore::Dims& dims,
                                   const RunConfig& cfg, const std::filesystem::path& cache_dir = {},
                                   const Log& log = {}) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  auto say = [&](const std::string& m) {
    if (log) log(m);
  };
  const SplitBundles split = split_bundles(bundles);
  require(split.train.size() >= 2, ErrorKind::kInsufficientData, "pipeline needs >= 2 training images");
  require(split.test.size() >= 2, ErrorKind::kInsufficientData, "pipeline needs >= 2 test images");
  PipelineResult r;

  importance::ImportanceModel<float> scorer(dims, cfg.importance(), numerics::mix_seed(cfg.seed, "importance.init"));
  const auto train_targets = importance::build_targets(split.train, true);
  say("importance: " + std::to_string(train_targets.size()) + " targets");
  r.importance_report = importance::train_importance(scorer, train_targets, cfg.importance_training(),
                                                     [&](std::size_t e, double loss, double) {
                                                       if ((e + 1) % 10 == 0)
                                                         say("importance epoch " + std::to_string(e + 1) +
                                                             " mse " + std::to_string(loss));
                                                     });

  const auto train_pruned = prune_with_ground_truth(split.train, cfg.pruning());
  const auto train_graphs = graphs_of(train_pruned);
  const auto train_sims = retrieval::cached_pair_similarities(split.train, cache_dir, cfg.jobs);
  retrieval::DualStreamModel<float> model(dims, cfg.retrieval(), numerics::mix_seed(cfg.seed, "retrieval.init"));
  say("retrieval: " + std::to_string(split.train.size()) + " training images");
  r.retrieval_report = retrieval::train_retrieval(model, split.train, train_graphs, train_sims,
                                                  cfg.retrieval_training(),
                                                  [&](std::size_t e, double loss, double) {
                                                    if ((e + 1) % 20 == 0)
                                                      say("retrieval epoch " + std::to_string(e + 1) + " loss " +
                                                          std::to_string(loss));
                                                  });

  const auto predicted = predict_graph_scores(scorer, split.test, cfg.jobs);
  std::vector<double> pred_flat, gt_flat;
  std::vector<graphcore::SceneGraph> test_graphs;
  for (std::size_t i = 0; i < split.test.size(); ++i) {
    const auto gt = importance::ground_truth_scores(split.test[i]);
    pred_flat.insert(pred_flat.end(), predicted[i].objects.begin(), predicted[i].objects.end());
    pred_flat.insert(pred_flat.end(), predicted[i].triplets.begin(), predicted[i].triplets.end());
    gt_flat.insert(gt_flat.end(), gt.objects.begin(), gt.objects.end());
    gt_flat.insert(gt_flat.end(), gt.triplets.begin(), gt.triplets.end());
    auto pruned = pruner::prune(split.test[i].graph, predicted[i], cfg.pruning());
    test_graphs.push_back(std::move(pruned.graph));
    r.test_decisions.push_back(std::move(pruned.decision));
  }
  r.importance_test = importance::eval_importance_classifier(pred_flat, gt_flat, cfg.prune_threshold);

  const auto embeddings = model.embed_all(split.test, test_graphs, cfg.jobs);
  r.index = retrieval::RetrievalIndex(ids_of(split.test), embeddings, cfg.hash());
  const auto test_sims = retrieval::pair_similarities(split.test, cfg.jobs);
  r.metrics = eval::evaluate_testset(r.index.embeddings(), r.index.ids(), test_sims, {1, 3, 5},
                                     cfg.relevance(), cfg.jobs);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace prism
