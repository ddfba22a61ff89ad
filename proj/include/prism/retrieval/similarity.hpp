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

#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include "prism/graphcore/blob.hpp"
#include "prism/graphcore/types.hpp"
#include "prism/numerics/random.hpp"

namespace prism::retrieval {

using graphcore::EmbeddingBundle;
using graphcore::Tensor;

// Mean pairwise inner product between two caption sets.
inline double surrogate_similarity(const Tensor& caps_i, const Tensor& caps_j) {
  require(caps_i.rows() > 0 && caps_j.rows() > 0, ErrorKind::kEmptyCaptions,
          "surrogate similarity needs at least one caption per image");
  require(caps_i.cols() == caps_j.cols(), ErrorKind::kDimMismatch, "caption widths differ");
  const std::size_t d = caps_i.cols();
  double acc = 0.0;
  for (std::size_t n = 0; n < caps_i.rows(); ++n)
    for (std::size_t m = 0; m < caps_j.rows(); ++m) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c)
        dot += static_cast<double>(caps_i(n, c)) * static_cast<double>(caps_j(m, c));
      acc += dot;
    }
  return acc / static_cast<double>(caps_i.rows() * caps_j.rows());
}

// Mean caption vector; the surrogate similarity equals the inner product of
// two of these.
inline std::vector<double> mean_caption(const Tensor& caps) {
  require(caps.rows() > 0, ErrorKind::kEmptyCaptions, "image has no captions");
  std::vector<double> out(caps.cols(), 0.0);
  for (std::size_t n = 0; n < caps.rows(); ++n)
    for (std::size_t c = 0; c < caps.cols(); ++c) out[c] += caps(n, c);
  for (double& v : out) v /= static_cast<double>(caps.rows());
  return out;
}

// Symmetric N x N matrix of surrogate similarities, rows split over `jobs`
// threads.
inline std::vector<double> pair_similarities(const std::vector<EmbeddingBundle>& bundles,
                                             std::size_t jobs = 1) {
  const std::size_t n = bundles.size();
  std::vector<double> out(n * n, 0.0);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride)
      for (std::size_t j = i; j < n; ++j) {
        const double s = surrogate_similarity(bundles[i].caption_embs, bundles[j].caption_embs);
        out[i * n + j] = s;
        out[j * n + i] = s;
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

// Content key of a bundle set for the on-disk pair cache: ids and caption
// bytes in order.
inline std::uint64_t similarity_key(const std::vector<EmbeddingBundle>& bundles) {
  std::uint64_t h = numerics::fnv1a64("prism-pairs");
  for (const auto& b : bundles) {
    h = numerics::fnv1a64(b.image_id, h);
    const auto& v = b.caption_embs.values();
    h = numerics::fnv1a64(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(float)), h);
    h = numerics::fnv1a64(std::to_string(b.caption_embs.rows()), h);
  }
  return h;
}

// Loads the pair matrix from `cache_dir` when present, otherwise computes and
// stores it there. An empty `cache_dir` disables caching.
inline std::vector<double> cached_pair_similarities(const std::vector<EmbeddingBundle>& bundles,
                                                    const std::filesystem::path& cache_dir,
                                                    std::size_t jobs = 1) {
  if (cache_dir.empty()) return pair_similarities(bundles, jobs);
  char name[64];
  std::snprintf(name, sizeof name, "pairs-%016llx.prsm",
                static_cast<unsigned long long>(similarity_key(bundles)));
  const auto path = cache_dir / name;
  const std::size_t n = bundles.size();
  if (std::filesystem::exists(path)) {
    const Tensor t = graphcore::read_blob_file(path);
    if (t.rows() == n && t.cols() == n) return {t.values().begin(), t.values().end()};
  }
  std::vector<double> s = pair_similarities(bundles, jobs);
  Tensor t(n, n);
  for (std::size_t i = 0; i < s.size(); ++i) t[i] = static_cast<float>(s[i]);
  std::filesystem::create_directories(cache_dir);
  graphcore::write_blob_file(path, t);
  // Round through float so fresh and cached runs see identical values.
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = t[i];
  return s;
}

}  // namespace prism::retrieval
