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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "prism/gradcheck_suites.hpp"
#include "prism/prism.hpp"

namespace {

using namespace prism;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

graphcore::Tensor random_unit_rows(numerics::Rng& rng, std::size_t rows, std::size_t cols) {
  graphcore::Tensor t(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double n = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      t(r, c) = static_cast<float>(rng.normal());
      n += static_cast<double>(t(r, c)) * t(r, c);
    }
    for (std::size_t c = 0; c < cols; ++c) t(r, c) = static_cast<float>(t(r, c) / std::sqrt(n));
  }
  return t;
}

Outcome gradient_integrity() {
  const auto r = gradcheck::run_all(20);
  std::string worst;
  for (const auto& s : r.suites)
    if (s.max_relative_error == r.max_relative_error) worst = s.name + "/" + s.worst_parameter;
  return {r.max_relative_error < gradcheck::kTolerance && r.seconds < 60.0,
          "suites=" + std::to_string(r.suites.size()) + " seeds=20 max_rel_err=" +
              fmt("%.3g", r.max_relative_error) + " (" + worst + ") time=" + fmt("%.1fs", r.seconds)};
}

Outcome score_and_similarity_oracles() {
  numerics::Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 4 + rng.index(29);
    const auto caps_a = random_unit_rows(rng, 1 + rng.index(6), d);
    const auto caps_b = random_unit_rows(rng, 1 + rng.index(6), d);
    const auto item = random_unit_rows(rng, 1, d);
    const auto phrase = random_unit_rows(rng, 1, d);
    const auto a = oracle::rows_of(caps_a), b = oracle::rows_of(caps_b);
    const auto it = oracle::rows_of(item)[0], ph = oracle::rows_of(phrase)[0];
    worst = std::max(worst, std::abs(importance::gt_object_score(item.row_span(0), caps_a) - oracle::item_score(it, a)));
    worst = std::max(worst, std::abs(importance::gt_triplet_score(phrase.row_span(0), caps_b) - oracle::item_score(ph, b)));
    worst = std::max(worst, std::abs(retrieval::surrogate_similarity(caps_a, caps_b) - oracle::image_similarity(a, b)));
  }
  return {worst <= 1e-6, "caption_sets=100 max_abs_diff=" + fmt("%.3g", worst)};
}

Outcome jenks_oracle() {
  numerics::Rng rng(202);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + rng.index(49);
    std::vector<double> v(n);
    const bool coarse = trial % 5 == 0;  // repeated values exercise ties
    for (double& x : v) x = coarse ? std::round(rng.uniform() * 4.0) / 4.0 : rng.uniform(-1.0, 2.0);
    const auto split = pruner::jenks_two_class(v);
    if (split.break_index != oracle::jenks_lower_size(v)) ++mismatches;
  }
  return {mismatches == 0, "arrays=500 n<=50 mismatches=" + std::to_string(mismatches)};
}

graphcore::SceneGraph random_graph(numerics::Rng& rng) {
  graphcore::SceneGraph g;
  const std::size_t n = 1 + rng.index(12);
  for (std::size_t i = 0; i < n; ++i) {
    graphcore::ObjectNode node;
    node.id = static_cast<int>(i);
    node.label = "obj" + std::to_string(i);
    g.nodes.push_back(node);
  }
  const std::size_t e = rng.index(2 * n + 1);
  for (std::size_t k = 0; k < e; ++k) {
    graphcore::RelationEdge edge;
    edge.src = static_cast<int>(rng.index(n));
    edge.dst = static_cast<int>(rng.index(n));
    edge.label = "rel" + std::to_string(k);
    g.edges.push_back(edge);
  }
  return g;
}

Outcome pruning_closure_and_monotonicity() {
  numerics::Rng rng(303);
  std::size_t closure_failures = 0, monotone_failures = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto g = random_graph(rng);
    importance::GraphScores s;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) s.objects.push_back(rng.uniform(-0.2, 1.0));
    for (std::size_t i = 0; i < g.edges.size(); ++i) s.triplets.push_back(rng.uniform(-0.2, 1.0));
    const auto full = pruner::prune(g, s, {});
    if (!oracle::closure_holds(g, full)) ++closure_failures;

    pruner::PruneOptions rules13;
    rules13.use_jenks = false;
    rules13.empty_guard = false;
    std::vector<int> prev_objects;
    std::vector<std::size_t> prev_triplets;
    bool first = true;
    for (double b : {0.0, 0.2, 0.4, 0.6, 0.8}) {
      rules13.threshold = b;
      const auto r = pruner::prune(g, s, rules13);
      if (!oracle::closure_holds(g, r)) ++closure_failures;
      const auto objs = r.decision.kept_objects();
      const auto trips = r.decision.kept_triplets();
      if (!first && (!std::includes(prev_objects.begin(), prev_objects.end(), objs.begin(), objs.end()) ||
                     !std::includes(prev_triplets.begin(), prev_triplets.end(), trips.begin(), trips.end())))
        ++monotone_failures;
      prev_objects = objs;
      prev_triplets = trips;
      first = false;
    }
  }
  return {closure_failures == 0 && monotone_failures == 0,
          "assignments=1000 closure_failures=" + std::to_string(closure_failures) +
              " monotonicity_failures=" + std::to_string(monotone_failures)};
}

Outcome norm_cap() {
  const graphcore::Dims dims;
  retrieval::DualStreamModel<float> model(dims, RunConfig::desk().retrieval(), 404);
  numerics::Rng rng(405);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    numerics::Tensor z(1, dims.d_vis);
    const double scale = std::pow(10.0, rng.uniform(-3.0, 3.0));
    for (auto& v : z.values()) v = static_cast<float>(scale * rng.normal());
    numerics::Tape<float> tape;
    const auto e = model.visual_stream(tape.constant(z)).value();
    double n = 0.0;
    for (float v : e.values()) n += static_cast<double>(v) * v;
    worst = std::max(worst, std::abs(std::sqrt(n) - 0.7));
  }
  return {worst <= 1e-6, "inputs=1000 max_|norm-0.7|=" + fmt("%.3g", worst)};
}

Outcome metric_oracles() {
  numerics::Rng rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(20);
    std::vector<double> gains(n);
    std::vector<char> rel(n);
    for (std::size_t i = 0; i < n; ++i) {
      gains[i] = rng.uniform() < 0.2 ? 0.0 : rng.uniform();
      rel[i] = rng.uniform() < 0.4;
    }
    std::vector<double> ideal = gains;
    std::sort(ideal.begin(), ideal.end(), std::greater<>());
    for (std::size_t k : {1, 3, 5, 10}) {
      worst = std::max(worst, std::abs(eval::ndcg_at_k(gains, ideal, k) - oracle::ndcg(gains, k)));
      worst = std::max(worst, std::abs(eval::average_precision_at_k(rel, k) - oracle::average_precision(rel, k)));
    }
    worst = std::max(worst, std::abs(eval::reciprocal_rank(rel) - oracle::reciprocal_rank(rel)));
  }
  const std::vector<double> ranked{0.2, 0.8}, ideal{0.8, 0.2};
  const double expected = (0.2 + 0.8 / std::log2(3.0)) / (0.8 + 0.2 / std::log2(3.0));
  const double ndcg2 = eval::ndcg_at_k(ranked, ideal, 2);
  const std::vector<char> rel011{0, 1, 1};
  const double ap = eval::average_precision_at_k(rel011, 3);
  const bool examples = std::abs(ndcg2 - expected) < 1e-12 && std::abs(ndcg2 - 0.7609) < 1e-4 &&
                        std::abs(ap - (0.5 + 2.0 / 3.0) / 2.0) < 1e-12;
  return {worst <= 1e-12 && examples, "evaluations=200 max_abs_diff=" + fmt("%.3g", worst) +
                                          " ndcg@2_example=" + fmt("%.4f", ndcg2) + " ap_example=" + fmt("%.4f", ap)};
}

Outcome importance_overfit() {
  const auto start = Clock::now();
  const graphcore::Dims dims;
  const auto targets = synth::planted_targets(50, dims, 606);
  const RunConfig cfg = RunConfig::desk();
  importance::ImportanceModel<float> model(dims, cfg.importance(), 607);
  auto opts = cfg.importance_training();
  opts.batch_size = targets.size();
  opts.epochs = 500;  // one full-batch step per epoch
  const auto report = importance::train_importance(model, targets, opts);
  const auto preds = importance::predict_scores(model, targets, 1);
  std::vector<double> gts;
  double mse = 0.0, mae = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    gts.push_back(*targets[i].gt_score);
    mse += (preds[i] - gts[i]) * (preds[i] - gts[i]);
    mae += std::abs(preds[i] - gts[i]);
  }
  mse /= static_cast<double>(targets.size());
  mae /= static_cast<double>(targets.size());
  const auto cls = importance::eval_importance_classifier(preds, gts, cfg.prune_threshold);
  const double secs = seconds_since(start);
  return {report.steps == 500 && mse < 1e-3 && cls.f1 == 1.0 && secs < 120.0,
          "targets=50 steps=" + std::to_string(report.steps) + " mse=" + fmt("%.3g", mse) + " mae=" +
              fmt("%.3g", mae) + " f1=" + fmt("%.4f", cls.f1) + " time=" + fmt("%.1fs", secs)};
}

PipelineResult pipeline_on(synth::Mode mode, bool edge_aware) {
  synth::SynthOptions o;
  o.mode = mode;
  RunConfig cfg = RunConfig::desk();
  cfg.gnn_edge_aware = edge_aware;
  return run_pipeline(synth::make_fixtures(o), o.dims, cfg);
}

std::string metrics_text(const PipelineResult& r) { return eval::metrics_json(r.metrics).dump(); }

PipelineResult* g_clusters_run = nullptr;

Outcome end_to_end_retrieval() {
  const auto start = Clock::now();
  static PipelineResult clusters = pipeline_on(synth::Mode::kClusters, true);
  g_clusters_run = &clusters;
  const auto with_edges = pipeline_on(synth::Mode::kRelationOnly, true);
  const auto without_edges = pipeline_on(synth::Mode::kRelationOnly, false);
  const double secs = seconds_since(start);
  const double ndcg1 = clusters.metrics.ndcg.at(1), mrr = clusters.metrics.mrr;
  const double gap = with_edges.metrics.ndcg.at(1) - without_edges.metrics.ndcg.at(1);
  return {ndcg1 >= 0.9 && mrr >= 0.9 && gap >= 0.05 && secs < 600.0,
          "clusters ndcg@1=" + fmt("%.4f", ndcg1) + " mrr=" + fmt("%.4f", mrr) +
              "; relation_only ndcg@1 edge_aware=" + fmt("%.4f", with_edges.metrics.ndcg.at(1)) +
              " plain=" + fmt("%.4f", without_edges.metrics.ndcg.at(1)) + " gap=" + fmt("%.4f", gap) +
              " time=" + fmt("%.1fs", secs)};
}

Outcome retention_direction() {
  synth::SynthOptions o;
  o.mode = synth::Mode::kRetention;
  o.images = 112;  // four graphs per size from 3 to 30 objects
  o.dims.d_text = 128;
  const auto bundles = synth::make_fixtures(o);
  std::vector<pruner::RetentionDecision> decisions;
  for (const auto& b : bundles)
    decisions.push_back(pruner::prune(b.graph, importance::ground_truth_scores(b), RunConfig::desk().pruning()).decision);
  const auto report = pruner::retention_report(decisions);
  bool decreasing = report.size() >= 3;
  std::string rates;
  for (std::size_t i = 0; i < report.size(); ++i) {
    if (i > 0 && !(report[i].objects_retained < report[i - 1].objects_retained)) decreasing = false;
    rates += (i ? " " : "") + report[i].label() + ":" + fmt("%.1f%%", report[i].objects_retained);
  }
  return {decreasing, "buckets " + rates};
}

Outcome determinism() {
  if (!g_clusters_run) return {false, "end-to-end run missing"};
  const auto again = pipeline_on(synth::Mode::kClusters, true);
  const auto& first = *g_clusters_run;
  const bool same_metrics = metrics_text(first) == metrics_text(again) &&
                            eval::format_metrics_table(first.metrics) == eval::format_metrics_table(again.metrics);
  const auto& a = first.index.embeddings();
  const auto& b = again.index.embeddings();
  const bool same_embeddings = a.same_shape(b) && std::equal(a.values().begin(), a.values().end(), b.values().begin());
  return {same_metrics && same_embeddings,
          std::string("metric tables ") + (same_metrics ? "identical" : "differ") + ", embeddings " +
              (same_embeddings ? "bit-identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"gradient_integrity", gradient_integrity},
      {"score_and_similarity_oracles", score_and_similarity_oracles},
      {"jenks_oracle", jenks_oracle},
      {"pruning_closure_and_monotonicity", pruning_closure_and_monotonicity},
      {"visual_norm_cap", norm_cap},
      {"metric_oracles", metric_oracles},
      {"importance_overfit", importance_overfit},
      {"end_to_end_retrieval", end_to_end_retrieval},
      {"retention_direction", retention_direction},
      {"determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << "  " << o.detail << std::endl;
  }
  std::cout << (failures ? "FAILED " : "ALL PASSED ") << criteria.size() - failures << "/" << criteria.size()
            << std::endl;
  return failures ? 1 : 0;
}
