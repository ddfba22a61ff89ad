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
#include <cstdint>
#include <vector>

#include "prism/numerics/tape.hpp"

namespace prism::numerics {

// Constant learning rate for the warmup epochs, then exponential decay:
// lr(e) = base for e < warmup, base * gamma^(e - warmup) afterwards.
struct LrSchedule {
  double base_lr = 1e-4;
  double gamma = 0.9;
  int warmup_epochs = 20;

  double lr(int epoch) const {
    if (epoch < warmup_epochs) return base_lr;
    return base_lr * std::pow(gamma, epoch - warmup_epochs);
  }
};

// Adam with bias correction. Moments are laid out parallel to the parameter
// list handed to step(), which must not change between calls.
template <typename T>
class Adam {
 public:
  explicit Adam(double lr = 1e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void set_lr(double lr) { lr_ = lr; }
  double lr() const { return lr_; }
  std::int64_t steps() const { return step_; }
  double beta1() const { return beta1_; }
  double beta2() const { return beta2_; }
  double eps() const { return eps_; }

  const std::vector<BasicTensor<T>>& first_moments() const { return m_; }
  const std::vector<BasicTensor<T>>& second_moments() const { return v_; }

  void step(const ParameterList<T>& params) {
    if (m_.empty()) {
      for (Parameter<T>* p : params) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
      }
    }
    require(m_.size() == params.size(), ErrorKind::kInvalidArgument,
            "adam: parameter list changed between steps");
    for (Parameter<T>* p : params) {
      require(!p->grad.empty() && p->grad.same_shape(p->value), ErrorKind::kMissingGrad,
              "adam: parameter '" + p->name + "' has no gradient");
    }
    ++step_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      Parameter<T>& p = *params[k];
      BasicTensor<T>& m = m_[k];
      BasicTensor<T>& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = p.grad[i];
        const double mi = beta1_ * m[i] + (1.0 - beta1_) * g;
        const double vi = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        m[i] = static_cast<T>(mi);
        v[i] = static_cast<T>(vi);
        const double update = lr_ * (mi / c1) / (std::sqrt(vi / c2) + eps_);
        p.value[i] = static_cast<T>(p.value[i] - update);
      }
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::int64_t step_ = 0;
  std::vector<BasicTensor<T>> m_, v_;
};

}  // namespace prism::numerics
