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
#include <vector>

#include "prism/importance/model.hpp"
#include "prism/numerics/training.hpp"

namespace prism::importance {

// Minimizes the mean squared error between predicted and ground-truth scores
// over minibatches of the target set.
template <typename T>
numerics::TrainingReport train_importance(ImportanceModel<T>& model,
                                          const std::vector<ScoreTarget>& targets,
                                          const numerics::TrainOptions& opts,
                                          const numerics::EpochCallback& on_epoch = {}) {
  require(!targets.empty(), ErrorKind::kInvalidArgument, "no importance targets to train on");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    require(targets[i].gt_score.has_value(), ErrorKind::kMissingGroundTruth,
            "importance target " + std::to_string(i) + " has no ground-truth score");
  }
  require(opts.batch_size > 0, ErrorKind::kConfigInvalid, "batch size must be positive");

  numerics::Rng rng(opts.seed);
  numerics::Adam<T> adam(opts.schedule.base_lr);
  ParameterList<T> params = model.parameters();
  numerics::TrainingReport report;

  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    const double lr = opts.schedule.lr(static_cast<int>(epoch) + 1);  // epochs count from 1
    adam.set_lr(lr);
    const auto order = numerics::shuffled_indices(targets.size(), rng);
    double sq_sum = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += opts.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + opts.batch_size);
      std::vector<const ScoreTarget*> batch;
      BasicTensor<T> gt(hi - lo, 1);
      for (std::size_t i = lo; i < hi; ++i) {
        batch.push_back(&targets[order[i]]);
        gt(i - lo, 0) = static_cast<T>(*targets[order[i]].gt_score);
      }
      numerics::zero_grads(params);
      Tape<T> tape(true, &rng);
      Var<T> pred = model.forward(tape, batch);
      Var<T> err = numerics::sub(pred, tape.constant(std::move(gt)));
      Var<T> loss = numerics::mean_all(numerics::mul(err, err));
      sq_sum += static_cast<double>(loss.value()[0]) * static_cast<double>(hi - lo);
      tape.backward(loss);
      adam.step(params);
      ++report.steps;
    }
    const double epoch_loss = sq_sum / static_cast<double>(targets.size());
    report.epoch_loss.push_back(epoch_loss);
    report.epoch_lr.push_back(lr);
    if (on_epoch) on_epoch(epoch, epoch_loss, lr);
  }
  return report;
}

struct ClassifierMetrics {
  double recall = 0.0;
  double precision = 0.0;
  double f1 = 0.0;
  std::size_t true_positives = 0, false_positives = 0, false_negatives = 0;
};

// Binarizes predictions and ground truth at `threshold` (strictly above is
// positive) and scores the positive class. With no positives on either side
// the classifier is vacuously perfect.
inline ClassifierMetrics eval_importance_classifier(const std::vector<double>& preds,
                                                    const std::vector<double>& gts,
                                                    double threshold) {
  require(preds.size() == gts.size(), ErrorKind::kLengthMismatch,
          "prediction and ground-truth lists differ in length");
  ClassifierMetrics m;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] > threshold, g = gts[i] > threshold;
    if (p && g) ++m.true_positives;
    if (p && !g) ++m.false_positives;
    if (!p && g) ++m.false_negatives;
  }
  const double tp = static_cast<double>(m.true_positives);
  const double fp = static_cast<double>(m.false_positives);
  const double fn = static_cast<double>(m.false_negatives);
  m.recall = (tp + fn) > 0 ? tp / (tp + fn) : 1.0;
  m.precision = (tp + fp) > 0 ? tp / (tp + fp) : 1.0;
  m.f1 = (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 1.0;
  return m;
}

}  // namespace prism::importance
