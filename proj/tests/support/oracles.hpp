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

// Naive reference implementations. Written directly from the definitions,
// sharing no code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "prism/graphcore/types.hpp"
#include "prism/pruner/prune.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix rows_of(const prism::graphcore::Tensor& t) {
  Matrix m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t(r, c);
  return m;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Mean over captions of <item, caption>.
inline double item_score(const std::vector<double>& item, const Matrix& captions) {
  double total = 0.0;
  for (const auto& c : captions) total += dot(item, c);
  return total / static_cast<double>(captions.size());
}

// Mean over all caption pairs of <c_i, c_j>.
inline double image_similarity(const Matrix& a, const Matrix& b) {
  double total = 0.0;
  for (const auto& x : a)
    for (const auto& y : b) total += dot(x, y);
  return total / static_cast<double>(a.size() * b.size());
}

inline double ssd(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  long double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<long double>(v.size());
  long double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return static_cast<double>(s);
}

// Exhaustive two-class split of the sorted values; returns the number of
// values in the lower class. Costs within a relative 1e-12 count as equal,
// and equal costs prefer the smaller upper class.
inline std::size_t jenks_lower_size(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::size_t best_k = 0;
  double best = std::numeric_limits<double>::infinity();
  const double scale = std::max(1e-300, ssd(values));
  for (std::size_t k = 1; k < values.size(); ++k) {
    const std::vector<double> lo(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k));
    const std::vector<double> hi(values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
    const double cost = ssd(lo) + ssd(hi);
    if (cost < best - 1e-12 * scale || std::abs(cost - best) <= 1e-12 * scale) {
      best = std::min(best, cost);
      best_k = k;
    }
  }
  return best_k;
}

inline double ndcg(const std::vector<double>& gains, std::size_t k) {
  std::vector<double> ideal = gains;
  std::sort(ideal.rbegin(), ideal.rend());
  double dcg = 0.0, idcg = 0.0;
  for (std::size_t rank = 1; rank <= k && rank <= gains.size(); ++rank) {
    dcg += gains[rank - 1] / (std::log(rank + 1.0) / std::log(2.0));
    idcg += ideal[rank - 1] / (std::log(rank + 1.0) / std::log(2.0));
  }
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

inline double average_precision(const std::vector<char>& rel, std::size_t k) {
  std::vector<double> precisions;
  for (std::size_t rank = 1; rank <= k && rank <= rel.size(); ++rank) {
    if (!rel[rank - 1]) continue;
    std::size_t hits = 0;
    for (std::size_t j = 0; j < rank; ++j) hits += rel[j] ? 1 : 0;
    precisions.push_back(static_cast<double>(hits) / static_cast<double>(rank));
  }
  if (precisions.empty()) return 0.0;
  double s = 0.0;
  for (double p : precisions) s += p;
  return s / static_cast<double>(precisions.size());
}

inline double reciprocal_rank(const std::vector<char>& rel) {
  for (std::size_t rank = 1; rank <= rel.size(); ++rank)
    if (rel[rank - 1]) return 1.0 / static_cast<double>(rank);
  return 0.0;
}

// Candidate indices by descending inner product with row q, ties by id;
// the candidate at index `skip` is left out.
inline std::vector<std::size_t> brute_force_rank(const Matrix& emb, const std::vector<double>& query,
                                                 const std::vector<std::string>& ids, long skip = -1) {
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t c = 0; c < emb.size(); ++c)
    if (static_cast<long>(c) != skip) scored.push_back({dot(emb[c], query), c});
  std::vector<std::size_t> order;
  while (!scored.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scored.size(); ++i) {
      const auto& a = scored[i];
      const auto& b = scored[best];
      if (a.first > b.first || (a.first == b.first && ids[a.second] < ids[b.second])) best = i;
    }
    order.push_back(scored[best].second);
    scored.erase(scored.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return order;
}

// Relevant: among the top_n by similarity (ties to the lower index) or at
// least max_fraction of a positive best similarity.
inline std::vector<char> relevance(const std::vector<double>& sim, std::size_t top_n, double max_fraction) {
  std::vector<char> rel(sim.size(), 0);
  std::vector<char> taken(sim.size(), 0);
  for (std::size_t r = 0; r < top_n && r < sim.size(); ++r) {
    long best = -1;
    for (std::size_t i = 0; i < sim.size(); ++i)
      if (!taken[i] && (best < 0 || sim[i] > sim[static_cast<std::size_t>(best)])) best = static_cast<long>(i);
    taken[static_cast<std::size_t>(best)] = 1;
    rel[static_cast<std::size_t>(best)] = 1;
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (double s : sim) mx = std::max(mx, s);
  if (mx > 0)
    for (std::size_t i = 0; i < sim.size(); ++i)
      if (sim[i] >= max_fraction * mx) rel[i] = 1;
  return rel;
}

struct Metrics {
  std::map<std::size_t, double> ndcg, map;
  double mrr = 0.0;
};

// Leave-one-out evaluation, recomputed from scratch.
inline Metrics leave_one_out(const Matrix& emb, const std::vector<std::string>& ids, const Matrix& sim,
                             const std::vector<std::size_t>& ks, std::size_t top_n, double max_fraction) {
  Metrics m;
  const std::size_t n = emb.size();
  for (std::size_t q = 0; q < n; ++q) {
    const auto order = brute_force_rank(emb, emb[q], ids, static_cast<long>(q));
    std::vector<double> cand_sim;
    for (std::size_t c = 0; c < n; ++c)
      if (c != q) cand_sim.push_back(sim[q][c]);
    const auto rel_by_cand = relevance(cand_sim, top_n, max_fraction);
    std::vector<double> gains;
    std::vector<char> rel;
    for (std::size_t c : order) {
      gains.push_back(std::max(0.0, sim[q][c]));
      rel.push_back(rel_by_cand[c < q ? c : c - 1]);
    }
    for (std::size_t k : ks) {
      m.ndcg[k] += ndcg(gains, k) / static_cast<double>(n);
      m.map[k] += average_precision(rel, k) / static_cast<double>(n);
    }
    m.mrr += reciprocal_rank(rel) / static_cast<double>(n);
  }
  return m;
}

// Every kept triplet has both endpoints kept, and the pruned graph holds
// exactly the kept items with consistent renumbering.
inline bool closure_holds(const prism::graphcore::SceneGraph& original, const prism::pruner::PruneResult& r) {
  const auto& d = r.decision;
  std::set<int> kept;
  for (const auto& [id, reason] : d.objects) kept.insert(id);
  for (const auto& [e, reason] : d.triplets) {
    if (!kept.count(original.edges[e].src) || !kept.count(original.edges[e].dst)) return false;
  }
  if (r.graph.nodes.size() != kept.size() || r.graph.edges.size() != d.triplets.size()) return false;
  std::size_t i = 0;
  for (int id : kept) {
    if (r.graph.nodes[i].label != original.nodes[static_cast<std::size_t>(id)].label) return false;
    if (r.graph.nodes[i].id != static_cast<int>(i)) return false;
    ++i;
  }
  std::size_t k = 0;
  for (const auto& [e, reason] : d.triplets) {
    const auto& before = original.edges[e];
    const auto& after = r.graph.edges[k++];
    if (after.label != before.label) return false;
    const auto new_src = static_cast<std::size_t>(after.src), new_dst = static_cast<std::size_t>(after.dst);
    if (new_src >= r.graph.nodes.size() || new_dst >= r.graph.nodes.size()) return false;
    if (r.graph.nodes[new_src].label != original.nodes[static_cast<std::size_t>(before.src)].label) return false;
    if (r.graph.nodes[new_dst].label != original.nodes[static_cast<std::size_t>(before.dst)].label) return false;
  }
  return true;
}

}  // namespace oracle
