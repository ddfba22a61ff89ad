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

#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "prism/numerics/optim.hpp"
#include "prism/numerics/random.hpp"

namespace prism::numerics {

struct TrainOptions {
  std::size_t epochs = 60;
  std::size_t batch_size = 32;
  LrSchedule schedule;
  std::uint64_t seed = 0;
};

struct TrainingReport {
  std::vector<double> epoch_loss;
  std::vector<double> epoch_lr;
  std::size_t steps = 0;

  double first_loss() const { return epoch_loss.empty() ? 0.0 : epoch_loss.front(); }
  double last_loss() const { return epoch_loss.empty() ? 0.0 : epoch_loss.back(); }
};

using EpochCallback = std::function<void(std::size_t epoch, double loss, double lr)>;

// Fisher-Yates with the engine's portable generator.
inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  return idx;
}

}  // namespace prism::numerics
