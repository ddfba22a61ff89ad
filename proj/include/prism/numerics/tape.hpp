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
#include <initializer_list>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prism/error.hpp"
#include "prism/numerics/random.hpp"
#include "prism/numerics/tensor.hpp"

namespace prism::numerics {

// A trainable tensor with a persistent gradient buffer. Owned by the layer
// that declares it; tapes only borrow it.
template <typename T>
struct Parameter {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;

  void zero_grad() { grad = BasicTensor<T>(value.shape()); }
};

template <typename T>
using ParameterList = std::vector<Parameter<T>*>;

template <typename T>
class Tape;

// Handle to a node on a tape. Cheap to copy; only valid while the tape that
// produced it has not been reset.
template <typename T>
class Var {
 public:
  Var() = default;

  Tape<T>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  std::uint64_t generation() const { return generation_; }
  bool valid() const { return tape_ != nullptr; }

  const BasicTensor<T>& value() const { return tape_->value(*this); }
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }

 private:
  friend class Tape<T>;
  Var(Tape<T>* tape, std::size_t id, std::uint64_t generation)
      : tape_(tape), id_(id), generation_(generation) {}

  Tape<T>* tape_ = nullptr;
  std::size_t id_ = 0;
  std::uint64_t generation_ = 0;
};

// Records forward operations in creation order; backward() replays them in
// exact reverse order. A tape is single-use: backpropagating twice without a
// reset() is an error, as is touching a Var from before the last reset().
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const BasicTensor<T>& out_grad)>;

  explicit Tape(bool training = false, Rng* rng = nullptr)
      : training_(training), rng_(rng) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool training() const { return training_; }
  void set_training(bool training) { training_ = training; }
  Rng* rng() const { return rng_; }
  void set_rng(Rng* rng) { rng_ = rng; }

  Var<T> constant(BasicTensor<T> value) { return push(std::move(value), nullptr, false); }

  // Non-parameter input whose gradient is wanted (gradient checks, probes).
  Var<T> leaf(BasicTensor<T> value) { return push(std::move(value), nullptr, true); }

  Var<T> param(Parameter<T>& p) {
    auto it = param_nodes_.find(&p);
    if (it != param_nodes_.end()) return Var<T>(this, it->second, generation_);
    Var<T> v = push(BasicTensor<T>{}, &p, true);
    param_nodes_.emplace(&p, v.id());
    return v;
  }

  // Appends an operation result. `backward` runs only if some input needs a
  // gradient; it receives the accumulated gradient of this node.
  Var<T> record(BasicTensor<T> value, std::initializer_list<Var<T>> inputs,
                BackwardFn backward) {
    bool needs = false;
    for (const Var<T>& in : inputs) {
      check(in);
      needs = needs || nodes_[in.id()].requires_grad;
    }
    Var<T> out = push(std::move(value), nullptr, needs);
    if (needs) nodes_[out.id()].backward = std::move(backward);
    return out;
  }

  Var<T> record(BasicTensor<T> value, const std::vector<Var<T>>& inputs, BackwardFn backward) {
    bool needs = false;
    for (const Var<T>& in : inputs) {
      check(in);
      needs = needs || nodes_[in.id()].requires_grad;
    }
    Var<T> out = push(std::move(value), nullptr, needs);
    if (needs) nodes_[out.id()].backward = std::move(backward);
    return out;
  }

  const BasicTensor<T>& value(const Var<T>& v) const {
    check(v);
    const Node& n = nodes_[v.id()];
    return n.param ? n.param->value : n.value;
  }

  bool requires_grad(const Var<T>& v) const {
    check(v);
    return nodes_[v.id()].requires_grad;
  }

  // Gradient buffer of a node, allocated as zeros on first use.
  BasicTensor<T>& grad(std::size_t id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = BasicTensor<T>(value_of(id).shape());
    return n.grad;
  }
  BasicTensor<T>& grad(const Var<T>& v) {
    check(v);
    return grad(v.id());
  }

  // Accumulates `g` into the gradient of `v` if `v` participates in backward.
  void accumulate(const Var<T>& v, const BasicTensor<T>& g) {
    if (!nodes_[v.id()].requires_grad) return;
    BasicTensor<T>& dst = grad(v.id());
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  }

  bool needs_grad(const Var<T>& v) const { return nodes_[v.id()].requires_grad; }

  void backward(const Var<T>& root) {
    if (!root.valid() || root.generation() != generation_ || root.id() >= nodes_.size()) {
      fail(ErrorKind::kBackwardWithoutForward, "backward called on a value not recorded on this tape");
    }
    if (backpropagated_) {
      fail(ErrorKind::kTapeAlreadyBackpropagated, "backward called twice without reset");
    }
    backpropagated_ = true;
    if (!nodes_[root.id()].requires_grad) return;
    grad(root.id()).fill(T(1));
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty()) continue;
      if (n.backward) n.backward(*this, n.grad);
      if (n.param) {
        if (n.param->grad.empty()) n.param->zero_grad();
        for (std::size_t k = 0; k < n.grad.size(); ++k) n.param->grad[k] += n.grad[k];
      }
    }
  }

  void reset() {
    nodes_.clear();
    param_nodes_.clear();
    backpropagated_ = false;
    ++generation_;
  }

  std::size_t size() const { return nodes_.size(); }

  // Sign pattern of every kink-op input seen in forward, used by the gradient
  // checker to detect finite-difference steps that straddle a kink.
  void set_kink_log(std::vector<char>* log) { kink_log_ = log; }
  std::vector<char>* kink_log() const { return kink_log_; }

 private:
  struct Node {
    BasicTensor<T> value;
    Parameter<T>* param = nullptr;
    BasicTensor<T> grad;
    BackwardFn backward;
    bool requires_grad = false;
  };

  const BasicTensor<T>& value_of(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.param ? n.param->value : n.value;
  }

  Var<T> push(BasicTensor<T> value, Parameter<T>* param, bool requires_grad) {
    if (backpropagated_) {
      fail(ErrorKind::kTapeAlreadyBackpropagated, "tape must be reset before recording again");
    }
    Node n;
    n.value = std::move(value);
    n.param = param;
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var<T>(this, nodes_.size() - 1, generation_);
  }

  void check(const Var<T>& v) const {
    if (!v.valid() || &v.tape() != this || v.generation() != generation_ ||
        v.id() >= nodes_.size()) {
      fail(ErrorKind::kBackwardWithoutForward, "value does not belong to the current tape");
    }
  }

  std::vector<Node> nodes_;
  std::unordered_map<const Parameter<T>*, std::size_t> param_nodes_;
  bool training_ = false;
  bool backpropagated_ = false;
  std::uint64_t generation_ = 1;
  Rng* rng_ = nullptr;
  std::vector<char>* kink_log_ = nullptr;
};

template <typename T>
void zero_grads(const ParameterList<T>& params) {
  for (Parameter<T>* p : params) p->zero_grad();
}

}  // namespace prism::numerics
