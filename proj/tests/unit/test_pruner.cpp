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

#include <algorithm>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prism/numerics/random.hpp"
#include "prism/pruner/retention.hpp"
#include "test_util.hpp"

using namespace prism;
using namespace prism::pruner;
using graphcore::SceneGraph;

namespace {

SceneGraph graph_of(const std::vector<std::string>& labels, const std::vector<std::pair<int, int>>& edges) {
  SceneGraph g;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    graphcore::ObjectNode n;
    n.id = static_cast<int>(i);
    n.label = labels[i];
    g.nodes.push_back(n);
  }
  for (const auto& [s, d] : edges) {
    graphcore::RelationEdge e;
    e.src = s;
    e.dst = d;
    e.label = g.nodes[static_cast<std::size_t>(s)].label + "->" + g.nodes[static_cast<std::size_t>(d)].label;
    g.edges.push_back(e);
  }
  return g;
}

PruneOptions threshold_only(double b = 0.4) {
  PruneOptions o;
  o.threshold = b;
  o.use_jenks = false;
  return o;
}

}  // namespace

TEST(Jenks, WorkedExamples) {
  const auto split = jenks_two_class(std::vector<double>{0.1, 0.2, 0.8, 0.9});
  EXPECT_EQ(split.break_index, 2u);
  auto upper = split.upper_class();
  std::sort(upper.begin(), upper.end());
  EXPECT_EQ(upper, (std::vector<std::size_t>{2, 3}));

  const auto tie = jenks_two_class(std::vector<double>{0.5, 0.5});
  EXPECT_EQ(tie.upper_class().size(), 1u);
}

TEST(Jenks, UnsortedInputReportsOriginalIndices) {
  const auto split = jenks_two_class(std::vector<double>{0.9, 0.1, 0.85, 0.15, 0.2});
  auto upper = split.upper_class();
  std::sort(upper.begin(), upper.end());
  EXPECT_EQ(upper, (std::vector<std::size_t>{0, 2}));
}

TEST(Jenks, TooFewValues) {
  EXPECT_PRISM_ERROR(jenks_two_class(std::vector<double>{0.3}), ErrorKind::kTooFewValues);
  EXPECT_PRISM_ERROR(jenks_two_class(std::vector<double>{}), ErrorKind::kTooFewValues);
}

TEST(Jenks, MatchesExhaustiveOracle) {
  numerics::Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(2 + rng.index(49));
    for (auto& x : v) x = rng.uniform();
    const auto split = jenks_two_class(v);
    EXPECT_EQ(split.break_index, oracle::jenks_lower_size(v)) << "trial " << trial;
  }
}

TEST(Prune, ThresholdAndClosure) {
  const auto g = graph_of({"dog", "tv", "grass"}, {{0, 2}});
  const auto r = prune(g, {{0.6, 0.1, 0.5}, {0.55}}, threshold_only());
  EXPECT_EQ(r.decision.kept_objects(), (std::vector<int>{0, 2}));
  EXPECT_EQ(r.decision.kept_triplets(), (std::vector<std::size_t>{0}));
  ASSERT_EQ(r.graph.nodes.size(), 2u);
  EXPECT_EQ(r.graph.nodes[1].label, "grass");
  EXPECT_EQ(r.graph.nodes[1].id, 1);
  EXPECT_EQ(r.graph.edges[0].src, 0);
  EXPECT_EQ(r.graph.edges[0].dst, 1);
  EXPECT_EQ(r.decision.old_to_new, (std::vector<int>{0, -1, 1}));
  EXPECT_EQ(r.decision.objects.at(0), RetentionReason::kAbsolute);
}

TEST(Prune, JenksAbstainsOnSmallCategories) {
  const auto g = graph_of({"dog", "tv", "grass"}, {{0, 2}});
  PruneOptions o;
  const auto r = prune(g, {{0.6, 0.1, 0.5}, {0.55}}, o);
  EXPECT_EQ(r.decision.kept_objects(), (std::vector<int>{0, 2}));
  o.jenks_min_items = 2;
  EXPECT_EQ(prune(graph_of({"a", "b"}, {}), {{0.1, 0.3}, {}}, o).decision.objects.at(1),
            RetentionReason::kRelative);
}

TEST(Prune, FallbackKeepsBestObject) {
  const auto single = prune(graph_of({"cup"}, {}), {{0.2}, {}});
  EXPECT_EQ(single.decision.kept_objects(), (std::vector<int>{0}));
  EXPECT_EQ(single.decision.objects.at(0), RetentionReason::kFallback);

  const auto low = prune(graph_of({"a", "b", "c"}, {}), {{0.1, 0.3, 0.2}, {}}, threshold_only());
  EXPECT_EQ(low.decision.kept_objects(), (std::vector<int>{1}));

  PruneOptions bare = threshold_only();
  bare.empty_guard = false;
  EXPECT_TRUE(prune(graph_of({"cup"}, {}), {{0.2}, {}}, bare).graph.nodes.empty());
}

TEST(Prune, TripletKeepsLowScoringEndpoints) {
  const auto g = graph_of({"man", "horse", "sky"}, {{0, 1}});
  const auto r = prune(g, {{0.05, 0.05, 0.01}, {0.9}}, threshold_only());
  EXPECT_EQ(r.decision.kept_objects(), (std::vector<int>{0, 1}));
  EXPECT_EQ(r.decision.objects.at(0), RetentionReason::kIndirectViaTriplet);
  EXPECT_EQ(r.decision.objects.at(1), RetentionReason::kIndirectViaTriplet);
  EXPECT_FALSE(is_direct(r.decision.objects.at(0)));
}

TEST(Prune, DirectReasonWinsOverIndirect) {
  const auto g = graph_of({"man", "horse"}, {{0, 1}});
  const auto r = prune(g, {{0.7, 0.05}, {0.9}}, threshold_only());
  EXPECT_EQ(r.decision.objects.at(0), RetentionReason::kAbsolute);
  EXPECT_EQ(r.decision.objects.at(1), RetentionReason::kIndirectViaTriplet);
}

TEST(Prune, DroppedTripletLeavesEndpointsAlone) {
  const auto g = graph_of({"a", "b", "c"}, {{0, 1}, {1, 2}});
  const auto r = prune(g, {{0.5, 0.1, 0.1}, {0.1, 0.2}}, threshold_only());
  EXPECT_EQ(r.decision.kept_objects(), (std::vector<int>{0}));
  EXPECT_TRUE(r.graph.edges.empty());
}

TEST(Prune, ScoreCoverageAndFiniteness) {
  const auto g = graph_of({"a", "b"}, {{0, 1}});
  EXPECT_PRISM_ERROR(prune(g, {{0.5}, {0.5}}), ErrorKind::kScoreCoverageIncomplete);
  EXPECT_PRISM_ERROR(prune(g, {{0.5, 0.5}, {}}), ErrorKind::kScoreCoverageIncomplete);
  EXPECT_PRISM_ERROR(prune(g, {{0.5, std::nan("")}, {0.5}}), ErrorKind::kInvalidArgument);
}

TEST(Prune, ClosureOnRandomGraphs) {
  numerics::Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(12);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back("n" + std::to_string(i));
    std::vector<std::pair<int, int>> edges;
    for (std::size_t k = 0; n > 1 && k < rng.index(2 * n); ++k) {
      const int s = static_cast<int>(rng.index(n));
      const int d = static_cast<int>(rng.index(n));
      if (s != d) edges.emplace_back(s, d);
    }
    const auto g = graph_of(labels, edges);
    importance::GraphScores s;
    for (std::size_t i = 0; i < n; ++i) s.objects.push_back(rng.uniform());
    for (std::size_t e = 0; e < edges.size(); ++e) s.triplets.push_back(rng.uniform());
    const auto r = prune(g, s);
    EXPECT_TRUE(oracle::closure_holds(g, r)) << "trial " << trial;
    const auto kept = surviving_scores(s, r.decision);
    EXPECT_EQ(kept.objects.size(), r.graph.nodes.size());
    EXPECT_EQ(kept.triplets.size(), r.graph.edges.size());
  }
}

TEST(Retention, AllKeptIsHundredPercent) {
  const auto g = graph_of({"a", "b", "c"}, {{0, 1}});
  const auto r = prune(g, {{0.9, 0.9, 0.9}, {0.9}}, threshold_only());
  const auto report = retention_report({r.decision});
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].label(), "1-5");
  EXPECT_DOUBLE_EQ(report[0].objects_retained, 100.0);
  EXPECT_DOUBLE_EQ(report[0].directly_important, 100.0);
  EXPECT_DOUBLE_EQ(report[0].triplets_retained, 100.0);
}

TEST(Retention, AveragesPerGraphWithinBuckets) {
  const auto small = prune(graph_of({"a", "b"}, {}), {{0.9, 0.1}, {}}, threshold_only());
  std::vector<std::string> many(22, "x");
  std::vector<double> scores(22, 0.1);
  scores[0] = 0.9;
  const auto big = prune(graph_of(many, {{1, 2}}), {scores, {0.8}}, threshold_only());
  const auto report = retention_report({small.decision, big.decision});
  ASSERT_EQ(report.size(), 2u);
  EXPECT_DOUBLE_EQ(report[0].objects_retained, 50.0);
  EXPECT_EQ(report[0].graphs_with_triplets, 0u);
  EXPECT_EQ(report[1].label(), "21+");
  EXPECT_DOUBLE_EQ(report[1].objects_retained, 300.0 / 22.0);
  EXPECT_DOUBLE_EQ(report[1].indirectly_important, 200.0 / 22.0);
  EXPECT_FALSE(format_retention_table(report).empty());
}

TEST(Retention, EmptyInput) { EXPECT_TRUE(retention_report({}).empty()); }
