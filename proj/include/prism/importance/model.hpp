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
#include <array>
#include <cstdint>
#include <exception>
#include <numeric>
#include <thread>
#include <vector>

#include "prism/graphcore/types.hpp"
#include "prism/importance/ground_truth.hpp"
#include "prism/numerics/attention.hpp"

namespace prism::importance {

using numerics::BasicTensor;
using numerics::Parameter;
using numerics::ParameterList;
using numerics::Tape;
using numerics::Var;

struct ImportanceConfig {
  std::size_t hidden = 1536;
  std::size_t heads = 32;
  std::size_t layers = 3;
  std::size_t queries = 4;
  double dropout = 0.1;

  void validate() const {
    require(hidden > 0 && heads > 0 && hidden % heads == 0, ErrorKind::kConfigInvalid,
            "importance hidden width must be divisible by the head count");
    require(layers >= 1, ErrorKind::kConfigInvalid, "importance encoder needs >= 1 layer");
    require(queries >= 1, ErrorKind::kConfigInvalid, "importance model needs >= 1 learned query");
    require(dropout >= 0.0 && dropout < 1.0, ErrorKind::kConfigInvalid,
            "importance dropout must be in [0, 1)");
  }
};

inline constexpr std::size_t kTokensPerTarget = 5;
using TokenOrder = std::array<std::size_t, kTokensPerTarget>;
inline constexpr TokenOrder kCanonicalTokenOrder = {0, 1, 2, 3, 4};

// Scores an object or triplet from its five tokens. Each token is
// zero-padded to a common width and projected by a shared MLP, encoded by a
// transformer without positions, summarized by learned queries through
// cross-attention, mean-pooled, and mapped to a scalar.
template <typename T = float>
class ImportanceModel {
 public:
  ImportanceModel() = default;
  ImportanceModel(const graphcore::Dims& dims, const ImportanceConfig& cfg, std::uint64_t seed)
      : dims_(dims), cfg_(cfg) {
    cfg.validate();
    token_width_ = std::max({dims.d_text + dims.d_vis, dims.d_text, dims.d_vis, dims.d_g});
    numerics::Rng rng(seed);
    input_ = numerics::Mlp<T>("importance.input", {token_width_, cfg.hidden, cfg.hidden}, rng);
    encoder_ = numerics::TransformerEncoder<T>("importance.encoder", cfg.hidden, cfg.layers,
                                               cfg.heads, cfg.dropout, rng);
    queries_ = numerics::normal_parameter<T>("importance.queries", cfg.queries, cfg.hidden, 0.02, rng);
    summary_ = numerics::MultiHeadAttention<T>("importance.summary", cfg.hidden, cfg.heads, rng);
    output_ = numerics::Mlp<T>("importance.output", {cfg.hidden, cfg.hidden, 1}, rng);
  }

  const graphcore::Dims& dims() const { return dims_; }
  const ImportanceConfig& config() const { return cfg_; }
  std::size_t token_width() const { return token_width_; }

  // B targets -> B x 1 predicted scores.
  Var<T> forward(Tape<T>& tape, const std::vector<const ScoreTarget*>& targets,
                 const TokenOrder& order = kCanonicalTokenOrder) {
    const std::size_t batch = targets.size();
    require(batch > 0, ErrorKind::kInvalidArgument, "importance forward needs >= 1 target");
    BasicTensor<T> tokens(batch * kTokensPerTarget, token_width_);
    for (std::size_t b = 0; b < batch; ++b) {
      const ScoreTarget& t = *targets[b];
      const std::array<const Embedding*, kTokensPerTarget> parts = {&t.subject, &t.object,
                                                                    &t.relation, &t.image, &t.graph};
      const std::array<std::size_t, kTokensPerTarget> widths = {
          dims_.d_text + dims_.d_vis, dims_.d_text + dims_.d_vis, dims_.d_text, dims_.d_vis,
          dims_.d_g};
      for (std::size_t k = 0; k < kTokensPerTarget; ++k) {
        const Embedding& src = *parts[order[k]];
        require(src.size() == widths[order[k]], ErrorKind::kDimMismatch,
                "importance token " + std::to_string(order[k]) + " has width " +
                    std::to_string(src.size()) + ", expected " + std::to_string(widths[order[k]]));
        const std::size_t row = b * kTokensPerTarget + k;
        for (std::size_t j = 0; j < src.size(); ++j) tokens(row, j) = static_cast<T>(src[j]);
      }
    }
    Var<T> z = input_(tape.constant(std::move(tokens)));
    Var<T> encoded = encoder_(z, batch);
    Var<T> q = numerics::tile_rows(tape.param(queries_), batch);
    Var<T> summary = summary_(q, encoded, batch);
    Var<T> pooled = numerics::group_mean_rows(summary, cfg_.queries);
    return output_(pooled);
  }

  ParameterList<T> parameters() {
    ParameterList<T> out;
    input_.collect(out);
    encoder_.collect(out);
    out.push_back(&queries_);
    summary_.collect(out);
    output_.collect(out);
    return out;
  }

 private:
  graphcore::Dims dims_;
  ImportanceConfig cfg_;
  std::size_t token_width_ = 0;
  numerics::Mlp<T> input_;
  numerics::TransformerEncoder<T> encoder_;
  Parameter<T> queries_;
  numerics::MultiHeadAttention<T> summary_;
  numerics::Mlp<T> output_;
};

// Eval-mode predictions, fanned out over `jobs` threads. Results are
// independent of the thread count.
template <typename T>
std::vector<double> predict_scores(ImportanceModel<T>& model, const std::vector<ScoreTarget>& targets,
                                   std::size_t jobs = 1, std::size_t chunk = 64) {
  std::vector<double> out(targets.size());
  const std::size_t chunks = (targets.size() + chunk - 1) / chunk;
  auto work = [&](std::size_t first_chunk, std::size_t stride) {
    for (std::size_t c = first_chunk; c < chunks; c += stride) {
      const std::size_t lo = c * chunk, hi = std::min(targets.size(), lo + chunk);
      std::vector<const ScoreTarget*> batch;
      for (std::size_t i = lo; i < hi; ++i) batch.push_back(&targets[i]);
      Tape<T> tape(false);
      Var<T> pred = model.forward(tape, batch);
      for (std::size_t i = lo; i < hi; ++i) out[i] = pred.value()[i - lo];
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, chunks));
  if (jobs == 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::size_t j = 0; j < jobs; ++j)
      pool.emplace_back([&, j] {
        try {
          work(j, jobs);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return out;
}

template <typename T>
double predict_score(ImportanceModel<T>& model, const ScoreTarget& target) {
  Tape<T> tape(false);
  return model.forward(tape, {&target}).value()[0];
}

}  // namespace prism::importance
