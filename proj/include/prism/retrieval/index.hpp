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
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "prism/graphcore/blob.hpp"

namespace prism::retrieval {

inline constexpr const char* kIndexFormat = "prism-index";
inline constexpr int kIndexVersion = 1;

struct Hit {
  std::size_t rank = 0;  // 1-based
  std::string image_id;
  double score = 0.0;
};

// Frozen table of image ids and their E^M rows.
class RetrievalIndex {
 public:
  RetrievalIndex() = default;
  RetrievalIndex(std::vector<std::string> ids, graphcore::Tensor embeddings, std::string config_hash = {})
      : ids_(std::move(ids)), embeddings_(std::move(embeddings)), config_hash_(std::move(config_hash)) {
    require(ids_.size() == embeddings_.rows(), ErrorKind::kLengthMismatch, "one embedding row per image id");
    require(embeddings_.all_finite(), ErrorKind::kInvariantViolation, "index embeddings must be finite");
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t width() const { return embeddings_.cols(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const graphcore::Tensor& embeddings() const { return embeddings_; }
  const std::string& config_hash() const { return config_hash_; }

  // Every candidate ranked by inner product with `q`, highest first, ties by
  // ascending image id.
  std::vector<Hit> rank_all(std::span<const float> q) const {
    require(!ids_.empty(), ErrorKind::kEmptyIndex, "query against an empty index");
    require(q.size() == width(), ErrorKind::kDimMismatch, "query width differs from index width");
    std::vector<double> score(size());
    for (std::size_t k = 0; k < size(); ++k) {
      double acc = 0.0;
      for (std::size_t c = 0; c < width(); ++c)
        acc += static_cast<double>(q[c]) * static_cast<double>(embeddings_(k, c));
      score[k] = acc;
    }
    std::vector<std::size_t> order(size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (score[a] != score[b]) return score[a] > score[b];
      return ids_[a] < ids_[b];
    });
    std::vector<Hit> out;
    for (std::size_t r = 0; r < order.size(); ++r) out.push_back({r + 1, ids_[order[r]], score[order[r]]});
    return out;
  }

  std::vector<Hit> query(std::span<const float> q, std::size_t top_k) const {
    require(!ids_.empty(), ErrorKind::kEmptyIndex, "query against an empty index");
    require(top_k >= 1 && top_k <= size(), ErrorKind::kInvalidArgument,
            "top_k must be between 1 and the index size (" + std::to_string(size()) + ")");
    std::vector<Hit> all = rank_all(q);
    all.resize(top_k);
    return all;
  }

  // Writes `<path>` (JSON) and `<path>.prsm` (embedding blob).
  void save(const std::filesystem::path& path) const {
    const std::filesystem::path blob = path.string() + ".prsm";
    graphcore::write_blob_file(blob, embeddings_);
    nlohmann::json meta = {{"format", kIndexFormat},       {"version", kIndexVersion},
                           {"config_hash", config_hash_},  {"ids", ids_},
                           {"blob", blob.filename().string()}};
    std::ofstream out(path);
    require(static_cast<bool>(out), ErrorKind::kIoFailure, "cannot write index " + path.string());
    out << meta.dump(2) << "\n";
    require(static_cast<bool>(out), ErrorKind::kIoFailure, "failed writing index " + path.string());
  }

  static RetrievalIndex load(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::kIoFailure, "cannot open index " + path.string());
    nlohmann::json meta;
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kInvalidManifest, path.string() + ": " + e.what());
    }
    require(meta.value("format", "") == kIndexFormat && meta.value("version", 0) == kIndexVersion,
            ErrorKind::kInvalidManifest, path.string() + ": not a version 1 index file");
    try {
      auto ids = meta.at("ids").get<std::vector<std::string>>();
      const auto blob = path.parent_path() / meta.at("blob").get<std::string>();
      return RetrievalIndex(std::move(ids), graphcore::read_blob_file(blob),
                            meta.value("config_hash", std::string{}));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kInvalidManifest, path.string() + ": " + e.what());
    }
  }

 private:
  std::vector<std::string> ids_;
  graphcore::Tensor embeddings_;
  std::string config_hash_;
};

}  // namespace prism::retrieval
