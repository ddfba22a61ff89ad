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
#include <cstdio>
#include <exception>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "prism/error.hpp"
#include "prism/numerics/tensor.hpp"

namespace prism::eval {

// DCG@k / IDCG@k with discount 1/log2(rank + 1); 0 when IDCG is 0.
inline double ndcg_at_k(std::span<const double> ranked_gains, std::span<const double> ideal_gains,
                        std::size_t k) {
  require(k >= 1, ErrorKind::kInvalidArgument, "ndcg cutoff must be >= 1");
  auto dcg = [k](std::span<const double> g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < std::min(k, g.size()); ++i) acc += g[i] / std::log2(static_cast<double>(i) + 2.0);
    return acc;
  };
  const double ideal = dcg(ideal_gains);
  return ideal > 0.0 ? dcg(ranked_gains) / ideal : 0.0;
}

// Mean of precision@i over the relevant positions i <= k; 0 without hits.
inline double average_precision_at_k(std::span<const char> relevant, std::size_t k) {
  require(k >= 1, ErrorKind::kInvalidArgument, "average precision cutoff must be >= 1");
  double acc = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < std::min(k, relevant.size()); ++i) {
    if (!relevant[i]) continue;
    ++hits;
    acc += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return hits ? acc / static_cast<double>(hits) : 0.0;
}

inline double reciprocal_rank(std::span<const char> relevant) {
  for (std::size_t i = 0; i < relevant.size(); ++i)
    if (relevant[i]) return 1.0 / static_cast<double>(i + 1);
  return 0.0;
}

inline double map_at_k(const std::vector<std::vector<char>>& relevance, std::size_t k) {
  if (relevance.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : relevance) acc += average_precision_at_k(r, k);
  return acc / static_cast<double>(relevance.size());
}

inline double mrr(const std::vector<std::vector<char>>& relevance) {
  if (relevance.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : relevance) acc += reciprocal_rank(r);
  return acc / static_cast<double>(relevance.size());
}

// Binarizes graded similarity: a candidate is relevant when it is among the
// query's `top_n` candidates by similarity, or reaches `max_fraction` of the
// best candidate's similarity (only when that is positive).
struct RelevanceRule {
  std::size_t top_n = 5;
  double max_fraction = 0.8;
};

// `similarity` is indexed by candidate; returns labels in the same order.
// Ties at the top_n boundary go to the lower candidate index.
inline std::vector<char> relevance_labels(std::span<const double> similarity, const RelevanceRule& rule = {}) {
  const std::size_t n = similarity.size();
  std::vector<char> out(n, 0);
  if (n == 0) return out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return similarity[a] > similarity[b]; });
  for (std::size_t r = 0; r < std::min(rule.top_n, n); ++r) out[order[r]] = 1;
  const double best = similarity[order.front()];
  if (best > 0.0)
    for (std::size_t i = 0; i < n; ++i)
      if (similarity[i] >= rule.max_fraction * best) out[i] = 1;
  return out;
}

// One query of the leave-one-out protocol, candidates in system order.
struct QueryEvaluation {
  std::size_t query = 0;
  std::vector<std::size_t> ranked;        // candidate indices, best first
  std::vector<double> ranked_similarity;  // ground truth, parallel to `ranked`
  std::vector<char> ranked_relevance;     // parallel to `ranked`
};

struct MetricsTable {
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> ndcg;
  std::map<std::size_t, double> map;
  double mrr = 0.0;
  std::size_t queries = 0;
  RelevanceRule rule;
};

inline MetricsTable summarize(const std::vector<QueryEvaluation>& evals, const std::vector<std::size_t>& ks,
                              const RelevanceRule& rule) {
  MetricsTable t;
  t.ks = ks;
  t.rule = rule;
  t.queries = evals.size();
  std::vector<std::vector<char>> rel;
  for (const auto& q : evals) rel.push_back(q.ranked_relevance);
  for (std::size_t k : ks) {
    double acc = 0.0;
    for (const auto& q : evals) {
      std::vector<double> gains, ideal;
      for (double s : q.ranked_similarity) gains.push_back(std::max(s, 0.0));
      ideal = gains;
      std::sort(ideal.begin(), ideal.end(), std::greater<>());
      acc += ndcg_at_k(gains, ideal, k);
    }
    t.ndcg[k] = evals.empty() ? 0.0 : acc / static_cast<double>(evals.size());
    t.map[k] = map_at_k(rel, k);
  }
  t.mrr = mrr(rel);
  return t;
}

// Leave-one-out over a test set: each row of `embeddings` queries all other
// rows, ranked by inner product (ties by ascending id). `similarity` is the
// N x N ground-truth matrix over the same rows.
inline std::vector<QueryEvaluation> leave_one_out(const numerics::Tensor& embeddings,
                                                  const std::vector<std::string>& ids,
                                                  const std::vector<double>& similarity,
                                                  const RelevanceRule& rule = {}, std::size_t jobs = 1) {
  const std::size_t n = embeddings.rows();
  require(n >= 2, ErrorKind::kInsufficientData, "evaluation needs at least two test images");
  require(ids.size() == n && similarity.size() == n * n, ErrorKind::kLengthMismatch,
          "ids and similarity matrix must match the embedding rows");
  std::vector<QueryEvaluation> out(n);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t q = first; q < n; q += stride) {
      std::vector<std::size_t> cand;
      std::vector<double> score(n, 0.0);
      for (std::size_t c = 0; c < n; ++c) {
        if (c == q) continue;
        cand.push_back(c);
        double acc = 0.0;
        for (std::size_t d = 0; d < embeddings.cols(); ++d)
          acc += static_cast<double>(embeddings(q, d)) * static_cast<double>(embeddings(c, d));
        score[c] = acc;
      }
      std::vector<double> sim;
      for (std::size_t c : cand) sim.push_back(similarity[q * n + c]);
      const std::vector<char> labels = relevance_labels(sim, rule);
      std::map<std::size_t, std::size_t> pos;
      for (std::size_t i = 0; i < cand.size(); ++i) pos[cand[i]] = i;

      QueryEvaluation e;
      e.query = q;
      e.ranked = cand;
      std::sort(e.ranked.begin(), e.ranked.end(), [&](std::size_t a, std::size_t b) {
        if (score[a] != score[b]) return score[a] > score[b];
        return ids[a] < ids[b];
      });
      for (std::size_t c : e.ranked) {
        e.ranked_similarity.push_back(similarity[q * n + c]);
        e.ranked_relevance.push_back(labels[pos[c]]);
      }
      out[q] = std::move(e);
    }
  };
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    work(0, 1);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&, t] {
      try {
        work(t, jobs);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

inline MetricsTable evaluate_testset(const numerics::Tensor& embeddings, const std::vector<std::string>& ids,
                                     const std::vector<double>& similarity,
                                     const std::vector<std::size_t>& ks = {1, 3, 5},
                                     const RelevanceRule& rule = {}, std::size_t jobs = 1) {
  return summarize(leave_one_out(embeddings, ids, similarity, rule, jobs), ks, rule);
}

inline std::string format_metrics_table(const MetricsTable& t) {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "# queries=%zu relevance: top-%zu or >= %.2f x max\n", t.queries,
                t.rule.top_n, t.rule.max_fraction);
  out += buf;
  std::string head, row;
  for (std::size_t k : t.ks) {
    std::snprintf(buf, sizeof buf, "%9s", ("NDCG@" + std::to_string(k)).c_str());
    head += buf;
    std::snprintf(buf, sizeof buf, "%9.4f", t.ndcg.at(k));
    row += buf;
  }
  for (std::size_t k : t.ks) {
    std::snprintf(buf, sizeof buf, "%9s", ("MAP@" + std::to_string(k)).c_str());
    head += buf;
    std::snprintf(buf, sizeof buf, "%9.4f", t.map.at(k));
    row += buf;
  }
  std::snprintf(buf, sizeof buf, "%9s", "MRR");
  head += buf;
  std::snprintf(buf, sizeof buf, "%9.4f", t.mrr);
  row += buf;
  return out + head + "\n" + row + "\n";
}

inline nlohmann::json metrics_json(const MetricsTable& t) {
  nlohmann::json j;
  j["queries"] = t.queries;
  j["relevance"] = {{"top_n", t.rule.top_n}, {"max_fraction", t.rule.max_fraction}};
  for (std::size_t k : t.ks) {
    j["ndcg@" + std::to_string(k)] = t.ndcg.at(k);
    j["map@" + std::to_string(k)] = t.map.at(k);
  }
  j["mrr"] = t.mrr;
  return j;
}

}  // namespace prism::eval
