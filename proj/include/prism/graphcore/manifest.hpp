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

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prism/graphcore/blob.hpp"
#include "prism/graphcore/types.hpp"

// Line-delimited manifest. The first line is a header
//
//   {"format":"prism-manifest","version":1,"d_text":32,"d_vis":32,"d_g":16,"meta":{...}}
//
// and every following line describes one image:
//
//   {"image_id":"img0001","split":"train",
//    "nodes":[{"label":"dog","bbox":[x,y,w,h],"area":a},...],
//    "edges":[{"src":0,"dst":1,"label":"biting"},...],
//    "captions":REF,"global_vis":REF,"graph_emb":REF,
//    "node_text":REF,"node_vis":REF,"edge_rel":REF,"edge_phrase":REF}
//
// where REF = {"blob":"<file relative to the manifest>","row":r,"rows":k}
// selects k consecutive rows of a PRSM blob. "edge_phrase" is optional.
namespace prism::graphcore {

using json = nlohmann::json;

inline constexpr const char* kManifestFormat = "prism-manifest";
inline constexpr int kManifestVersion = 1;

struct Manifest {
  Dims dims;
  json meta = json::object();
  std::vector<EmbeddingBundle> bundles;
};

namespace detail {

class BlobWriter {
 public:
  explicit BlobWriter(std::size_t cols) : cols_(cols) {}

  json append(const std::vector<const Embedding*>& rows, const std::string& file) {
    json ref = {{"blob", file}, {"row", data_.size() / (cols_ ? cols_ : 1)}, {"rows", rows.size()}};
    for (const Embedding* r : rows) data_.insert(data_.end(), r->begin(), r->end());
    return ref;
  }

  json append(const Tensor& rows, const std::string& file) {
    json ref = {{"blob", file}, {"row", data_.size() / (cols_ ? cols_ : 1)}, {"rows", rows.rows()}};
    data_.insert(data_.end(), rows.values().begin(), rows.values().end());
    return ref;
  }

  Tensor tensor() const { return Tensor(data_.size() / (cols_ ? cols_ : 1), cols_, data_); }

 private:
  std::size_t cols_;
  std::vector<float> data_;
};

class BlobCache {
 public:
  explicit BlobCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const Tensor& get(const std::string& file) {
    auto it = cache_.find(file);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(file, read_blob_file(dir_ / file)).first->second;
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, Tensor> cache_;
};

inline Tensor slice_ref(BlobCache& cache, const json& ref, std::size_t expect_cols,
                        const std::string& where) {
  if (!ref.is_object() || !ref.contains("blob") || !ref.contains("row") || !ref.contains("rows"))
    fail(ErrorKind::kInvalidManifest, where + ": malformed blob reference");
  const Tensor& blob = cache.get(ref.at("blob").get<std::string>());
  const auto row = ref.at("row").get<std::size_t>();
  const auto rows = ref.at("rows").get<std::size_t>();
  if (rows > 0 && blob.cols() != expect_cols)
    fail(ErrorKind::kDimMismatch, where + ": blob '" + ref.at("blob").get<std::string>() +
                                      "' has " + std::to_string(blob.cols()) +
                                      " columns, manifest declares " + std::to_string(expect_cols));
  if (row + rows > blob.rows())
    fail(ErrorKind::kInvalidManifest, where + ": blob reference exceeds blob rows");
  Tensor out(rows, expect_cols);
  if (rows > 0)
    std::copy(blob.data() + row * expect_cols, blob.data() + (row + rows) * expect_cols, out.data());
  return out;
}

inline Embedding row_of(const Tensor& t, std::size_t r) {
  auto s = t.row_span(r);
  return Embedding(s.begin(), s.end());
}

}  // namespace detail

inline void save_manifest(const std::vector<EmbeddingBundle>& bundles,
                          const std::filesystem::path& path, const Dims& dims,
                          const json& meta = json::object()) {
  for (const auto& b : bundles) validate_bundle(b, dims);

  const std::string stem = path.stem().string();
  const auto file = [&](const char* field) { return stem + "." + field + ".prsm"; };
  detail::BlobWriter captions(dims.d_text), global_vis(dims.d_vis), graph_emb(dims.d_g),
      node_text(dims.d_text), node_vis(dims.d_vis), edge_rel(dims.d_text), edge_phrase(dims.d_text);

  std::ostringstream lines;
  json header = {{"format", kManifestFormat}, {"version", kManifestVersion},
                 {"d_text", dims.d_text},     {"d_vis", dims.d_vis},
                 {"d_g", dims.d_g},           {"meta", meta}};
  lines << header.dump() << "\n";

  for (const auto& b : bundles) {
    json rec;
    rec["image_id"] = b.image_id;
    rec["split"] = b.split;
    json nodes = json::array();
    std::vector<const Embedding*> texts, viss;
    for (const auto& n : b.graph.nodes) {
      nodes.push_back({{"label", n.label},
                       {"bbox", {n.bbox.x, n.bbox.y, n.bbox.w, n.bbox.h}},
                       {"area", n.area}});
      texts.push_back(&n.text_emb);
      viss.push_back(&n.vis_emb);
    }
    json edges = json::array();
    std::vector<const Embedding*> rels, phrases;
    for (const auto& e : b.graph.edges) {
      edges.push_back({{"src", e.src}, {"dst", e.dst}, {"label", e.label}});
      rels.push_back(&e.rel_emb);
      if (!e.phrase_emb.empty()) phrases.push_back(&e.phrase_emb);
    }
    if (!phrases.empty() && phrases.size() != rels.size())
      fail(ErrorKind::kInvariantViolation,
           "image '" + b.image_id + "': phrase embeddings must be given for all edges or none");
    rec["nodes"] = std::move(nodes);
    rec["edges"] = std::move(edges);
    rec["captions"] = captions.append(b.caption_embs, file("captions"));
    rec["global_vis"] = global_vis.append({&b.global_vis}, file("global_vis"));
    rec["graph_emb"] = graph_emb.append({&b.graph_emb}, file("graph_emb"));
    rec["node_text"] = node_text.append(texts, file("node_text"));
    rec["node_vis"] = node_vis.append(viss, file("node_vis"));
    rec["edge_rel"] = edge_rel.append(rels, file("edge_rel"));
    if (!phrases.empty() || b.graph.edges.empty())
      rec["edge_phrase"] = edge_phrase.append(phrases, file("edge_phrase"));
    lines << rec.dump() << "\n";
  }

  const auto dir = path.parent_path();
  write_blob_file(dir / file("captions"), captions.tensor());
  write_blob_file(dir / file("global_vis"), global_vis.tensor());
  write_blob_file(dir / file("graph_emb"), graph_emb.tensor());
  write_blob_file(dir / file("node_text"), node_text.tensor());
  write_blob_file(dir / file("node_vis"), node_vis.tensor());
  write_blob_file(dir / file("edge_rel"), edge_rel.tensor());
  write_blob_file(dir / file("edge_phrase"), edge_phrase.tensor());

  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::kIoFailure, "cannot open " + path.string() + " for writing");
  out << lines.str();
  if (!out) fail(ErrorKind::kIoFailure, "failed writing " + path.string());
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIoFailure, "cannot open manifest " + path.string());
  detail::BlobCache cache(path.parent_path());
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::kInvalidManifest, where + ": " + e.what());
    }
    try {
      if (!have_header) {
        if (rec.value("format", "") != kManifestFormat)
          fail(ErrorKind::kInvalidManifest, where + ": missing manifest header");
        if (rec.value("version", 0) != kManifestVersion)
          fail(ErrorKind::kInvalidManifest, where + ": unsupported manifest version");
        m.dims.d_text = rec.at("d_text").get<std::size_t>();
        m.dims.d_vis = rec.at("d_vis").get<std::size_t>();
        m.dims.d_g = rec.at("d_g").get<std::size_t>();
        m.meta = rec.value("meta", json::object());
        have_header = true;
        continue;
      }
      EmbeddingBundle b;
      b.image_id = rec.at("image_id").get<std::string>();
      b.split = rec.value("split", "");
      const std::string ctx = where + " (image '" + b.image_id + "')";
      b.caption_embs = detail::slice_ref(cache, rec.at("captions"), m.dims.d_text, ctx);
      b.global_vis = detail::row_of(detail::slice_ref(cache, rec.at("global_vis"), m.dims.d_vis, ctx), 0);
      b.graph_emb = detail::row_of(detail::slice_ref(cache, rec.at("graph_emb"), m.dims.d_g, ctx), 0);

      const json& nodes = rec.at("nodes");
      const json& edges = rec.at("edges");
      const Tensor node_text = detail::slice_ref(cache, rec.at("node_text"), m.dims.d_text, ctx);
      const Tensor node_vis = detail::slice_ref(cache, rec.at("node_vis"), m.dims.d_vis, ctx);
      const Tensor edge_rel = detail::slice_ref(cache, rec.at("edge_rel"), m.dims.d_text, ctx);
      Tensor edge_phrase;
      if (rec.contains("edge_phrase"))
        edge_phrase = detail::slice_ref(cache, rec.at("edge_phrase"), m.dims.d_text, ctx);
      if (node_text.rows() != nodes.size() || node_vis.rows() != nodes.size())
        fail(ErrorKind::kInvalidManifest, ctx + ": node embedding rows differ from node count");
      if (edge_rel.rows() != edges.size())
        fail(ErrorKind::kInvalidManifest, ctx + ": relation embedding rows differ from edge count");
      if (edge_phrase.rows() != 0 && edge_phrase.rows() != edges.size())
        fail(ErrorKind::kInvalidManifest, ctx + ": phrase embedding rows differ from edge count");

      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const json& jn = nodes[i];
        ObjectNode n;
        n.id = static_cast<int>(i);
        n.label = jn.at("label").get<std::string>();
        const auto box = jn.at("bbox").get<std::vector<double>>();
        if (box.size() != 4) fail(ErrorKind::kInvalidManifest, ctx + ": bbox needs 4 values");
        n.bbox = {static_cast<float>(box[0]), static_cast<float>(box[1]),
                  static_cast<float>(box[2]), static_cast<float>(box[3])};
        n.area = static_cast<float>(jn.at("area").get<double>());
        n.text_emb = detail::row_of(node_text, i);
        n.vis_emb = detail::row_of(node_vis, i);
        b.graph.nodes.push_back(std::move(n));
      }
      for (std::size_t e = 0; e < edges.size(); ++e) {
        const json& je = edges[e];
        RelationEdge r;
        r.src = je.at("src").get<int>();
        r.dst = je.at("dst").get<int>();
        r.label = je.at("label").get<std::string>();
        r.rel_emb = detail::row_of(edge_rel, e);
        if (edge_phrase.rows() > 0) r.phrase_emb = detail::row_of(edge_phrase, e);
        b.graph.edges.push_back(std::move(r));
      }
      try {
        validate_bundle(b, m.dims);
      } catch (const Error& e) {
        fail(e.kind(), where + ": " + e.what());
      }
      m.bundles.push_back(std::move(b));
    } catch (const json::exception& e) {
      fail(ErrorKind::kInvalidManifest, where + ": " + e.what());
    }
  }
  if (!have_header) fail(ErrorKind::kInvalidManifest, path.string() + ": empty manifest");
  return m;
}

}  // namespace prism::graphcore
