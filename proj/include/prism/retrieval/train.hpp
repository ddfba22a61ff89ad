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
#include <map>
#include <vector>

#include "prism/numerics/training.hpp"
#include "prism/retrieval/model.hpp"

namespace prism::retrieval {

struct PairSample {
  std::size_t i = 0, j = 0;
  double similarity = 0.0;
};

// Draws training pairs (i < j) from all pairs of N images. Each batch takes
// half its pairs uniformly and half from the highest-similarity decile.
class PairSampler {
 public:
  PairSampler(const std::vector<double>& similarities, std::size_t n, double hard_share = 0.5,
              double hard_quantile = 0.1)
      : hard_share_(hard_share) {
    require(n >= 2, ErrorKind::kInsufficientPairs, "pair sampling needs at least two images");
    require(similarities.size() == n * n, ErrorKind::kLengthMismatch, "similarity matrix must be N x N");
    require(hard_share >= 0.0 && hard_share <= 1.0 && hard_quantile > 0.0 && hard_quantile <= 1.0,
            ErrorKind::kConfigInvalid, "hard-pair fractions must lie in (0, 1]");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) pool_.push_back({i, j, similarities[i * n + j]});
    hard_ = pool_;
    std::stable_sort(hard_.begin(), hard_.end(),
                     [](const PairSample& a, const PairSample& b) { return a.similarity > b.similarity; });
    const auto keep = static_cast<std::size_t>(std::ceil(hard_quantile * static_cast<double>(hard_.size())));
    hard_.resize(std::max<std::size_t>(1, keep));
  }

  std::vector<PairSample> batch(std::size_t size, numerics::Rng& rng) const {
    const auto hard = static_cast<std::size_t>(std::floor(hard_share_ * static_cast<double>(size)));
    std::vector<PairSample> out;
    out.reserve(size);
    for (std::size_t k = 0; k < size - hard; ++k) out.push_back(pool_[rng.index(pool_.size())]);
    for (std::size_t k = 0; k < hard; ++k) out.push_back(hard_[rng.index(hard_.size())]);
    return out;
  }

  const std::vector<PairSample>& pool() const { return pool_; }
  const std::vector<PairSample>& hard_pool() const { return hard_; }

 private:
  double hard_share_;
  std::vector<PairSample> pool_, hard_;
};

struct RetrievalTrainOptions {
  numerics::TrainOptions train;
  // Pairs drawn per epoch, as a multiple of the image count.
  std::size_t pairs_per_image = 64;
};

// Fits inner products of E^M rows to the surrogate similarities.
// `graphs[i]` is the (pruned) graph of `bundles[i]`; `similarities` is the
// row-major N x N ground-truth matrix.
template <typename T>
numerics::TrainingReport train_retrieval(DualStreamModel<T>& model,
                                         const std::vector<graphcore::EmbeddingBundle>& bundles,
                                         const std::vector<graphcore::SceneGraph>& graphs,
                                         const std::vector<double>& similarities,
                                         const RetrievalTrainOptions& opts,
                                         const numerics::EpochCallback& on_epoch = {}) {
  require(bundles.size() >= 2, ErrorKind::kInsufficientPairs, "retrieval training needs at least two images");
  require(graphs.size() == bundles.size(), ErrorKind::kLengthMismatch, "one graph per bundle required");
  require(opts.train.batch_size > 0 && opts.pairs_per_image > 0, ErrorKind::kConfigInvalid,
          "batch size and pairs per image must be positive");
  const std::size_t n = bundles.size();
  const PairSampler sampler(similarities, n);
  const std::size_t steps =
      (opts.pairs_per_image * n + opts.train.batch_size - 1) / opts.train.batch_size;

  numerics::Rng rng(opts.train.seed);
  numerics::Adam<T> adam(opts.train.schedule.base_lr);
  ParameterList<T> params = model.parameters();
  numerics::TrainingReport report;

  for (std::size_t epoch = 0; epoch < opts.train.epochs; ++epoch) {
    const double lr = opts.train.schedule.lr(static_cast<int>(epoch) + 1);  // epochs count from 1
    adam.set_lr(lr);
    double loss_sum = 0.0;
    for (std::size_t step = 0; step < steps; ++step) {
      const auto pairs = sampler.batch(opts.train.batch_size, rng);
      // Each distinct image is embedded once per step.
      std::map<std::size_t, std::size_t> slot;
      std::vector<const graphcore::EmbeddingBundle*> bs;
      std::vector<const graphcore::SceneGraph*> gs;
      auto slot_of = [&](std::size_t img) {
        auto [it, fresh] = slot.emplace(img, bs.size());
        if (fresh) {
          bs.push_back(&bundles[img]);
          gs.push_back(&graphs[img]);
        }
        return it->second;
      };
      std::vector<std::size_t> left, right;
      std::vector<double> target;
      for (const auto& p : pairs) {
        left.push_back(slot_of(p.i));
        right.push_back(slot_of(p.j));
        target.push_back(p.similarity);
      }
      numerics::zero_grads(params);
      Tape<T> tape(true, &rng);
      Var<T> loss = pair_loss(model.embed(tape, bs, gs), left, right, target);
      loss_sum += static_cast<double>(loss.value()[0]);
      tape.backward(loss);
      adam.step(params);
      ++report.steps;
    }
    const double epoch_loss = loss_sum / static_cast<double>(steps);
    report.epoch_loss.push_back(epoch_loss);
    report.epoch_lr.push_back(lr);
    if (on_epoch) on_epoch(epoch, epoch_loss, lr);
  }
  return report;
}

}  // namespace prism::retrieval
