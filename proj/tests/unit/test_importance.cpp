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

#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prism/config.hpp"
#include "prism/importance/train.hpp"
#include "prism/synth.hpp"
#include "test_util.hpp"

using namespace prism;
using namespace prism::importance;

namespace {

// Unit rows (a_k, sqrt(1 - a_k^2), 0, ...) whose inner product with e_0 is a_k.
Tensor captions_with_alignment(const std::vector<double>& a, std::size_t d) {
  Tensor t(a.size(), d);
  for (std::size_t k = 0; k < a.size(); ++k) {
    t(k, 0) = static_cast<float>(a[k]);
    t(k, 1) = static_cast<float>(std::sqrt(1.0 - a[k] * a[k]));
  }
  return t;
}

Embedding basis(std::size_t d, std::size_t i) {
  Embedding e(d, 0.0f);
  e[i] = 1.0f;
  return e;
}

const graphcore::Dims kDims;

ImportanceConfig small_config() { return RunConfig::desk().importance(); }

std::vector<graphcore::EmbeddingBundle> fixtures(std::size_t images) {
  synth::SynthOptions o;
  o.images = images;
  o.clusters = 3;
  return synth::make_fixtures(o);
}

}  // namespace

TEST(GroundTruth, WorkedExamples) {
  EXPECT_NEAR(gt_object_score(basis(4, 0), captions_with_alignment({1.0}, 4)), 1.0, 1e-12);
  EXPECT_NEAR(gt_object_score(basis(4, 2), captions_with_alignment({0.3, 0.9}, 4)), 0.0, 1e-12);
  Tensor two(2, 2);
  two(0, 0) = 1.0f;
  two(1, 1) = 1.0f;
  EXPECT_NEAR(gt_object_score(basis(2, 0), two), 0.5, 1e-12);
  EXPECT_NEAR(gt_triplet_score(basis(4, 0), captions_with_alignment({1.0, 1.0, 1.0}, 4)), 1.0, 1e-12);
  EXPECT_NEAR(gt_triplet_score(basis(4, 0), captions_with_alignment({0.2, 0.4, 0.6}, 4)), 0.4, 1e-6);
}

TEST(GroundTruth, MatchesDoubleLoopOracleOnFixtures) {
  for (const auto& b : fixtures(9)) {
    const auto s = ground_truth_scores(b);
    const auto caps = oracle::rows_of(b.caption_embs);
    for (std::size_t i = 0; i < b.graph.nodes.size(); ++i) {
      const std::vector<double> item(b.graph.nodes[i].text_emb.begin(), b.graph.nodes[i].text_emb.end());
      EXPECT_NEAR(s.objects[i], oracle::item_score(item, caps), 1e-6);
    }
    for (std::size_t e = 0; e < b.graph.edges.size(); ++e) {
      const auto& p = b.graph.edges[e].phrase_emb;
      EXPECT_NEAR(s.triplets[e], oracle::item_score({p.begin(), p.end()}, caps), 1e-6);
    }
  }
}

TEST(GroundTruth, Errors) {
  EXPECT_PRISM_ERROR(gt_object_score(basis(4, 0), Tensor(0, 4)), ErrorKind::kEmptyCaptions);
  EXPECT_PRISM_ERROR(gt_object_score(basis(3, 0), captions_with_alignment({1.0}, 4)), ErrorKind::kDimMismatch);
  auto b = fixtures(3).front();
  b.graph.edges.front().phrase_emb.clear();
  EXPECT_PRISM_ERROR(ground_truth_scores(b), ErrorKind::kMissingGroundTruth);
}

TEST(Targets, ObjectsThenTripletsWithZeroPadding) {
  const auto b = fixtures(3).front();
  const auto t = build_targets(b, 0, true);
  ASSERT_EQ(t.size(), b.graph.nodes.size() + b.graph.edges.size());
  const auto gt = ground_truth_scores(b);
  for (std::size_t i = 0; i < b.graph.nodes.size(); ++i) {
    EXPECT_EQ(t[i].kind, TargetKind::kObject);
    EXPECT_EQ(*t[i].gt_score, gt.objects[i]);
    for (float v : t[i].object) EXPECT_EQ(v, 0.0f);
    for (float v : t[i].relation) EXPECT_EQ(v, 0.0f);
  }
  const auto& first_edge = t[b.graph.nodes.size()];
  EXPECT_EQ(first_edge.kind, TargetKind::kTriplet);
  EXPECT_EQ(first_edge.relation, b.graph.edges.front().rel_emb);
  EXPECT_FALSE(build_targets(b, 0, false).front().gt_score.has_value());
}

TEST(Targets, UnflattenChecksLength) {
  const auto b = fixtures(3).front();
  const std::vector<double> flat(b.graph.nodes.size() + b.graph.edges.size(), 0.25);
  const auto s = unflatten_scores(b, flat);
  EXPECT_EQ(s.objects.size(), b.graph.nodes.size());
  EXPECT_EQ(s.triplets.size(), b.graph.edges.size());
  EXPECT_PRISM_ERROR(unflatten_scores(b, std::span<const double>(flat).subspan(1)), ErrorKind::kLengthMismatch);
}

TEST(Model, IdenticalTokensGiveIdenticalScores) {
  ImportanceModel<float> m(kDims, small_config(), 3);
  const auto t = synth::planted_targets(1, kDims, 4).front();
  auto copy = t;
  copy.item_index = 99;
  EXPECT_EQ(predict_score(m, t), predict_score(m, copy));
}

TEST(Model, TokenOrderDoesNotMatter) {
  ImportanceModel<double> m(kDims, small_config(), 5);
  const auto targets = synth::planted_targets(4, kDims, 6);
  std::vector<const ScoreTarget*> batch;
  for (const auto& t : targets) batch.push_back(&t);
  numerics::Tape<double> a, b;
  const auto canonical = m.forward(a, batch).value();
  const auto permuted = m.forward(b, batch, {3, 1, 4, 0, 2}).value();
  for (std::size_t i = 0; i < canonical.size(); ++i) EXPECT_NEAR(canonical[i], permuted[i], 1e-10);
}

TEST(Model, PredictionsIndependentOfThreadsAndChunks) {
  ImportanceModel<float> m(kDims, small_config(), 7);
  const auto targets = synth::planted_targets(50, kDims, 8);
  const auto one = predict_scores(m, targets, 1, 64);
  EXPECT_EQ(one, predict_scores(m, targets, 3, 7));
  EXPECT_EQ(one[17], predict_score(m, targets[17]));
}

TEST(Model, WrongTokenWidthIsReported) {
  ImportanceModel<float> m(kDims, small_config(), 9);
  auto t = synth::planted_targets(1, kDims, 10).front();
  t.graph.pop_back();
  EXPECT_PRISM_ERROR(predict_score(m, t), ErrorKind::kDimMismatch);
  std::vector<ScoreTarget> many(70, t);
  EXPECT_PRISM_ERROR(predict_scores(m, many, 2, 8), ErrorKind::kDimMismatch);
}

TEST(Model, ConfigValidation) {
  EXPECT_PRISM_ERROR(ImportanceModel<float>(kDims, {30, 4, 1, 2, 0.0}, 1), ErrorKind::kConfigInvalid);
  EXPECT_PRISM_ERROR(ImportanceModel<float>(kDims, {32, 4, 0, 2, 0.0}, 1), ErrorKind::kConfigInvalid);
}

TEST(Training, ZeroTargetsLossStartsAtMeanSquareAndFalls) {
  ImportanceModel<float> m(kDims, small_config(), 11);
  auto targets = synth::planted_targets(20, kDims, 12);
  for (auto& t : targets) t.gt_score = 0.0;
  // Start every prediction near 0.5 through the output bias.
  m.parameters().back()->value[0] = 0.5f;
  double initial = 0.0;
  for (double s : predict_scores(m, targets)) initial += s * s / static_cast<double>(targets.size());
  // Default learning rate; full-batch steps so epoch 1 sees the untrained model.
  numerics::TrainOptions opts{5, targets.size(), {RunConfig{}.imp_lr, 0.9, 20}, 13};
  const auto report = train_importance(m, targets, opts);
  ASSERT_EQ(report.epoch_loss.size(), 5u);
  EXPECT_NEAR(report.epoch_loss[0], initial, 1e-6 * std::max(1.0, initial));
  for (std::size_t e = 1; e < 5; ++e) EXPECT_LT(report.epoch_loss[e], report.epoch_loss[e - 1]);
}

TEST(Training, SingleTargetOverfits) {
  ImportanceModel<float> m(kDims, small_config(), 14);
  const auto targets = synth::planted_targets(1, kDims, 15);
  numerics::TrainOptions opts{200, 1, {1e-3, 0.95, 20}, 16};
  const auto report = train_importance(m, targets, opts);
  EXPECT_EQ(report.steps, 200u);
  const double err = predict_score(m, targets[0]) - *targets[0].gt_score;
  EXPECT_LT(err * err, 1e-4);
}

TEST(Training, Preconditions) {
  ImportanceModel<float> m(kDims, small_config(), 17);
  EXPECT_PRISM_ERROR(train_importance(m, {}, {}), ErrorKind::kInvalidArgument);
  auto targets = synth::planted_targets(2, kDims, 18);
  targets[1].gt_score.reset();
  EXPECT_PRISM_ERROR(train_importance(m, targets, {}), ErrorKind::kMissingGroundTruth);
}

TEST(Training, DeterministicForSeed) {
  const auto targets = synth::planted_targets(10, kDims, 19);
  numerics::TrainOptions opts{3, 4, {1e-3, 0.9, 20}, 20};
  ImportanceModel<float> a(kDims, small_config(), 21), b(kDims, small_config(), 21);
  EXPECT_EQ(train_importance(a, targets, opts).epoch_loss, train_importance(b, targets, opts).epoch_loss);
  EXPECT_EQ(predict_scores(a, targets), predict_scores(b, targets));
}

TEST(Classifier, WorkedExamples) {
  const auto same = eval_importance_classifier({0.1, 0.5, 0.9}, {0.1, 0.5, 0.9}, 0.4);
  EXPECT_DOUBLE_EQ(same.recall, 1.0);
  EXPECT_DOUBLE_EQ(same.f1, 1.0);
  EXPECT_DOUBLE_EQ(eval_importance_classifier({0.1, 0.2}, {0.5, 0.9}, 0.4).recall, 0.0);
  // TP = 1, FN = 1, FP = 1: recall 1/2, precision 1/2, so F1 = 2TP / (2TP + FP + FN) = 1/2.
  const auto mixed = eval_importance_classifier({0.5, 0.3, 0.6}, {0.5, 0.5, 0.3}, 0.4);
  EXPECT_EQ(mixed.true_positives, 1u);
  EXPECT_EQ(mixed.false_negatives, 1u);
  EXPECT_EQ(mixed.false_positives, 1u);
  EXPECT_DOUBLE_EQ(mixed.recall, 0.5);
  EXPECT_DOUBLE_EQ(mixed.f1, 0.5);
  EXPECT_PRISM_ERROR(eval_importance_classifier({0.1}, {}, 0.4), ErrorKind::kLengthMismatch);
}
