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
#include <string>
#include <vector>

#include "prism/numerics/ops.hpp"
#include "prism/numerics/random.hpp"

namespace prism::numerics {

template <typename T>
Parameter<T> uniform_parameter(std::string name, std::size_t rows, std::size_t cols,
                               double bound, Rng& rng) {
  Parameter<T> p{std::move(name), BasicTensor<T>(rows, cols), {}};
  for (auto& v : p.value.values()) v = static_cast<T>(rng.uniform(-bound, bound));
  return p;
}

template <typename T>
Parameter<T> normal_parameter(std::string name, std::size_t rows, std::size_t cols,
                              double stddev, Rng& rng) {
  Parameter<T> p{std::move(name), BasicTensor<T>(rows, cols), {}};
  for (auto& v : p.value.values()) v = static_cast<T>(rng.normal(0.0, stddev));
  return p;
}

template <typename T>
Parameter<T> constant_parameter(std::string name, std::size_t rows, std::size_t cols, T fill) {
  return Parameter<T>{std::move(name), BasicTensor<T>(rows, cols, fill), {}};
}

// y = x W + b with W stored as (in x out).
template <typename T>
class Linear {
 public:
  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng, bool bias = true)
      : in_(in), out_(out), has_bias_(bias) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight_ = uniform_parameter<T>(name + ".weight", in, out, bound, rng);
    if (bias) bias_ = uniform_parameter<T>(name + ".bias", 1, out, bound, rng);
  }

  Var<T> operator()(const Var<T>& x) {
    require(x.cols() == in_, ErrorKind::kDimMismatch,
            weight_.name + ": expected input width " + std::to_string(in_) + ", got " +
                std::to_string(x.cols()));
    Tape<T>& tape = x.tape();
    Var<T> y = matmul(x, tape.param(weight_));
    return has_bias_ ? add_row(y, tape.param(bias_)) : y;
  }

  std::size_t in_dim() const { return in_; }
  std::size_t out_dim() const { return out_; }

  Parameter<T>& weight() { return weight_; }
  Parameter<T>& bias() { return bias_; }

  void collect(ParameterList<T>& out) {
    out.push_back(&weight_);
    if (has_bias_) out.push_back(&bias_);
  }

 private:
  std::size_t in_ = 0, out_ = 0;
  bool has_bias_ = true;
  Parameter<T> weight_, bias_;
};

enum class Activation { kGelu, kLeakyRelu };

template <typename T>
Var<T> activate(const Var<T>& x, Activation act) {
  return act == Activation::kGelu ? gelu(x) : leaky_relu(x, 0.2);
}

// Stack of linear layers with an activation between consecutive layers and
// none after the last.
template <typename T>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const std::string& name, const std::vector<std::size_t>& widths, Rng& rng,
      Activation act = Activation::kGelu)
      : act_(act) {
    require(widths.size() >= 2, ErrorKind::kInvalidArgument, name + ": MLP needs >= 2 widths");
    for (std::size_t i = 0; i + 1 < widths.size(); ++i)
      layers_.emplace_back(name + "." + std::to_string(i), widths[i], widths[i + 1], rng);
  }

  Var<T> operator()(Var<T> x) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      x = layers_[i](x);
      if (i + 1 < layers_.size()) x = activate(x, act_);
    }
    return x;
  }

  std::size_t in_dim() const { return layers_.front().in_dim(); }
  std::size_t out_dim() const { return layers_.back().out_dim(); }
  std::vector<Linear<T>>& layers() { return layers_; }

  void collect(ParameterList<T>& out) {
    for (auto& l : layers_) l.collect(out);
  }

 private:
  std::vector<Linear<T>> layers_;
  Activation act_ = Activation::kGelu;
};

template <typename T>
class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(const std::string& name, std::size_t width)
      : gain_(constant_parameter<T>(name + ".gain", 1, width, T(1))),
        bias_(constant_parameter<T>(name + ".bias", 1, width, T(0))) {}

  Var<T> operator()(const Var<T>& x) {
    Tape<T>& tape = x.tape();
    return layer_norm_rows(x, tape.param(gain_), tape.param(bias_));
  }

  void collect(ParameterList<T>& out) {
    out.push_back(&gain_);
    out.push_back(&bias_);
  }

 private:
  Parameter<T> gain_, bias_;
};

}  // namespace prism::numerics
