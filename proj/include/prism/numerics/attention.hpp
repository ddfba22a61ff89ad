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

#include <string>
#include <vector>

#include "prism/numerics/layers.hpp"

namespace prism::numerics {

// Projected multi-head attention: Q, K, V each go through their own linear
// map, attend per head, and the concatenated heads are projected back.
template <typename T>
class MultiHeadAttention {
 public:
  MultiHeadAttention() = default;
  MultiHeadAttention(const std::string& name, std::size_t width, std::size_t heads, Rng& rng)
      : heads_(heads) {
    require(heads > 0 && width % heads == 0, ErrorKind::kHeadsDoNotDivide,
            name + ": width " + std::to_string(width) + " not divisible by " +
                std::to_string(heads) + " heads");
    wq_ = Linear<T>(name + ".q", width, width, rng);
    wk_ = Linear<T>(name + ".k", width, width, rng);
    wv_ = Linear<T>(name + ".v", width, width, rng);
    wo_ = Linear<T>(name + ".out", width, width, rng);
  }

  // `query` holds groups*m rows and `memory` groups*n rows; each query group
  // attends only to its own memory group.
  Var<T> operator()(const Var<T>& query, const Var<T>& memory, std::size_t groups = 1,
                    BasicTensor<T>* weights_out = nullptr) {
    return (*this)(query, memory, memory, groups, weights_out);
  }

  Var<T> operator()(const Var<T>& query, const Var<T>& keys, const Var<T>& values,
                    std::size_t groups, BasicTensor<T>* weights_out) {
    Var<T> attended =
        scaled_dot_attention(wq_(query), wk_(keys), wv_(values), heads_, groups, weights_out);
    return wo_(attended);
  }

  std::size_t heads() const { return heads_; }
  Linear<T>& value_projection() { return wv_; }
  Linear<T>& output_projection() { return wo_; }

  void collect(ParameterList<T>& out) {
    wq_.collect(out);
    wk_.collect(out);
    wv_.collect(out);
    wo_.collect(out);
  }

 private:
  std::size_t heads_ = 1;
  Linear<T> wq_, wk_, wv_, wo_;
};

// Pre-norm block: x + Attn(LN(x)), then x + FF(LN(x)) with a GELU
// feed-forward of width 4d.
template <typename T>
class TransformerBlock {
 public:
  TransformerBlock() = default;
  TransformerBlock(const std::string& name, std::size_t width, std::size_t heads, double dropout,
                   Rng& rng)
      : dropout_(dropout),
        norm1_(name + ".norm1", width),
        attn_(name + ".attn", width, heads, rng),
        norm2_(name + ".norm2", width),
        ff_(name + ".ff", {width, 4 * width, width}, rng, Activation::kGelu) {}

  Var<T> operator()(const Var<T>& x, std::size_t groups) {
    Var<T> h = norm1_(x);
    Var<T> y = add(x, dropout(attn_(h, h, groups), dropout_));
    return add(y, dropout(ff_(norm2_(y)), dropout_));
  }

  void collect(ParameterList<T>& out) {
    norm1_.collect(out);
    attn_.collect(out);
    norm2_.collect(out);
    ff_.collect(out);
  }

 private:
  double dropout_ = 0.0;
  LayerNorm<T> norm1_;
  MultiHeadAttention<T> attn_;
  LayerNorm<T> norm2_;
  Mlp<T> ff_;
};

// Stack of pre-norm blocks followed by a final layer norm. No positional
// encoding: the output is equivariant to row permutations within a group.
template <typename T>
class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(const std::string& name, std::size_t width, std::size_t layers,
                     std::size_t heads, double dropout, Rng& rng)
      : final_norm_(name + ".final_norm", width) {
    require(layers >= 1, ErrorKind::kInvalidArgument, name + ": encoder needs >= 1 layer");
    require(dropout >= 0.0 && dropout < 1.0, ErrorKind::kInvalidArgument,
            name + ": dropout must be in [0, 1)");
    for (std::size_t i = 0; i < layers; ++i)
      blocks_.emplace_back(name + ".block" + std::to_string(i), width, heads, dropout, rng);
  }

  // x holds `groups` independent sequences of equal length, stacked by rows.
  Var<T> operator()(Var<T> x, std::size_t groups = 1) {
    for (auto& b : blocks_) x = b(x, groups);
    return final_norm_(x);
  }

  std::size_t layers() const { return blocks_.size(); }

  void collect(ParameterList<T>& out) {
    for (auto& b : blocks_) b.collect(out);
    final_norm_.collect(out);
  }

 private:
  std::vector<TransformerBlock<T>> blocks_;
  LayerNorm<T> final_norm_;
};

}  // namespace prism::numerics
