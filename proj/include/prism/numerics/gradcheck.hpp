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
#include <functional>
#include <string>
#include <vector>

#include "prism/numerics/ops.hpp"

namespace prism::numerics {

struct GradcheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t elements_checked = 0;
  std::size_t kink_refinements = 0;
};

// Builds a scalar loss on the given tape. Must be deterministic.
template <typename T>
using LossBuilder = std::function<Var<T>(Tape<T>&)>;

// Compares the tape's analytic gradient with central finite differences of
// step `h`, in double precision. The error for each tensor is
// |analytic - numeric| / max(|analytic|, |numeric|, 1e-3 * |analytic of all|),
// using L2 norms; the result is the worst tensor.
//
// Piecewise-linear ops (leaky ReLU) log the sign of their inputs. When a
// perturbation flips one of those signs the difference quotient straddles a
// kink and measures nothing useful, so the step is shrunk by 10x (up to six
// times) until both sides see the same sign pattern as the unperturbed point.
inline GradcheckResult gradcheck(const ParameterList<double>& params,
                                 const LossBuilder<double>& build, double h = 1e-3) {
  auto evaluate = [&](std::vector<char>* kinks) {
    Tape<double> tape;
    tape.set_kink_log(kinks);
    Var<double> loss = build(tape);
    check_shape(loss.value().size() == 1, "gradcheck: loss must be scalar");
    return loss.value()[0];
  };

  zero_grads(params);
  {
    Tape<double> tape;
    Var<double> loss = build(tape);
    check_shape(loss.value().size() == 1, "gradcheck: loss must be scalar");
    tape.backward(loss);
  }

  std::vector<char> base_kinks;
  evaluate(&base_kinks);

  GradcheckResult result;
  std::vector<std::vector<double>> numeric(params.size());
  double global_sq = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<double>& p = *params[k];
    numeric[k].resize(p.value.size());
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      global_sq += p.grad[i] * p.grad[i];
      const double original = p.value[i];
      double step = h;
      double estimate = 0.0;
      for (int attempt = 0; attempt <= 6; ++attempt) {
        std::vector<char> plus_kinks, minus_kinks;
        p.value[i] = original + step;
        const double up = evaluate(&plus_kinks);
        const double actual_up = p.value[i] - original;
        p.value[i] = original - step;
        const double down = evaluate(&minus_kinks);
        const double actual_down = original - p.value[i];
        p.value[i] = original;
        estimate = (up - down) / (actual_up + actual_down);
        if (plus_kinks == base_kinks && minus_kinks == base_kinks) break;
        ++result.kink_refinements;
        step /= 10.0;
      }
      numeric[k][i] = estimate;
      ++result.elements_checked;
    }
  }

  const double floor = 1e-3 * std::sqrt(global_sq);
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Parameter<double>& p = *params[k];
    double diff = 0.0, a = 0.0, n = 0.0;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      diff += (p.grad[i] - numeric[k][i]) * (p.grad[i] - numeric[k][i]);
      a += p.grad[i] * p.grad[i];
      n += numeric[k][i] * numeric[k][i];
    }
    const double denom = std::max({std::sqrt(a), std::sqrt(n), floor, 1e-300});
    const double rel = std::sqrt(diff) / denom;
    if (result.worst_parameter.empty() || rel > result.max_relative_error) {
      result.max_relative_error = rel;
      result.worst_parameter = p.name;
    }
  }
  return result;
}

// Weighted sum of every output element with fixed pseudo-random weights: a
// generic scalar loss that exercises all output coordinates.
template <typename T>
Var<T> random_projection_loss(const Var<T>& out, std::uint64_t seed) {
  Rng rng(seed);
  BasicTensor<T> w(out.value().shape());
  for (auto& v : w.values()) v = static_cast<T>(rng.uniform(-1.0, 1.0));
  Tape<T>& tape = out.tape();
  return sum_all(mul(out, tape.constant(std::move(w))));
}

}  // namespace prism::numerics
