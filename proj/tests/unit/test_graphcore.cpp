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

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "prism/graphcore/manifest.hpp"
#include "prism/synth.hpp"
#include "test_util.hpp"

using namespace prism;
using namespace prism::graphcore;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / name) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

const Dims kDims{8, 6, 4};

ObjectNode node(int id, const std::string& label) {
  ObjectNode n;
  n.id = id;
  n.label = label;
  n.text_emb = synth::label_embedding(label, kDims.d_text);
  n.vis_emb = Embedding(kDims.d_vis, 0.25f);
  n.bbox = {0.1f, 0.2f, 0.3f, 0.4f};
  n.area = 0.12f;
  return n;
}

RelationEdge edge(int src, int dst, const std::string& label) {
  RelationEdge e;
  e.src = src;
  e.dst = dst;
  e.label = label;
  e.rel_emb = synth::label_embedding(label, kDims.d_text);
  e.phrase_emb = synth::label_embedding("phrase " + label, kDims.d_text);
  return e;
}

// One image, two captions, three nodes, two edges.
EmbeddingBundle toy_bundle(const std::string& id = "img0") {
  EmbeddingBundle b;
  b.image_id = id;
  b.split = "train";
  b.caption_embs = Tensor(2, kDims.d_text);
  const auto c0 = synth::label_embedding("a dog on grass", kDims.d_text);
  const auto c1 = synth::label_embedding("a dog biting a frisbee", kDims.d_text);
  for (std::size_t j = 0; j < kDims.d_text; ++j) {
    b.caption_embs(0, j) = c0[j];
    b.caption_embs(1, j) = c1[j];
  }
  b.global_vis = Embedding(kDims.d_vis, 0.5f);
  b.graph_emb = Embedding(kDims.d_g, -0.5f);
  b.graph.nodes = {node(0, "dog"), node(1, "grass"), node(2, "frisbee")};
  b.graph.edges = {edge(0, 1, "on"), edge(0, 2, "biting")};
  return b;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST(Triplets, OnePerEdgeInOrder) {
  SceneGraph g;
  g.nodes = {node(0, "a"), node(1, "b"), node(2, "c")};
  g.edges = {edge(0, 1, "r0"), edge(1, 2, "r1")};
  const auto t = extract_triplets(g);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t[0], (Triplet{0, 0, 1}));
  EXPECT_EQ(t[1], (Triplet{1, 1, 2}));
}

TEST(Triplets, NoEdgesNoTriplets) {
  SceneGraph g;
  g.nodes = {node(0, "a")};
  EXPECT_TRUE(extract_triplets(g).empty());
}

TEST(Triplets, ParallelEdgesStayDistinct) {
  SceneGraph g;
  g.nodes = {node(0, "a"), node(1, "b")};
  g.edges = {edge(0, 1, "on"), edge(0, 1, "near")};
  const auto t = extract_triplets(g);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_NE(t[0], t[1]);
}

TEST(Triplets, PhraseIsSpaceJoined) { EXPECT_EQ(phrase_string("dog", "biting", "frisbee"), "dog biting frisbee"); }

TEST(Blob, RoundTripIsExact) {
  Tensor t(3, 5);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i) * 0.37f - 1.0f;
  std::stringstream ss;
  write_blob(ss, t);
  EXPECT_EQ(ss.str().size(), kBlobHeaderBytes + 4 * t.size());
  EXPECT_EQ(read_blob(ss), t);
}

TEST(Blob, BadMagicAndTruncation) {
  std::stringstream bad("XXXX0000000000000000");
  EXPECT_PRISM_ERROR(read_blob(bad), ErrorKind::kIoFailure);
  Tensor t(2, 2, 1.0f);
  std::stringstream ss;
  write_blob(ss, t);
  std::stringstream cut(ss.str().substr(0, ss.str().size() - 3));
  EXPECT_PRISM_ERROR(read_blob(cut), ErrorKind::kIoFailure);
}

TEST(Blob, MissingFile) {
  EXPECT_PRISM_ERROR(read_blob_file("/nonexistent/prism/blob.prsm"), ErrorKind::kMissingBlob);
}

TEST(Manifest, SingleImageRoundTrip) {
  TempDir dir("prism_manifest_single");
  const auto b = toy_bundle();
  save_manifest({b}, dir.path() / "m.jsonl", kDims);
  const Manifest m = load_manifest(dir.path() / "m.jsonl");
  EXPECT_EQ(m.dims, kDims);
  ASSERT_EQ(m.bundles.size(), 1u);
  EXPECT_EQ(m.bundles[0].num_captions(), 2u);
  EXPECT_EQ(m.bundles[0].graph.num_nodes(), 3u);
  EXPECT_EQ(m.bundles[0], b);
}

TEST(Manifest, FixtureSetRoundTrip) {
  TempDir dir("prism_manifest_fixtures");
  synth::SynthOptions o;
  o.images = 12;
  o.clusters = 3;
  const auto bundles = synth::make_fixtures(o);
  save_manifest(bundles, dir.path() / "m.jsonl", o.dims, {{"source", "synth"}});
  const Manifest m = load_manifest(dir.path() / "m.jsonl");
  EXPECT_EQ(m.bundles, bundles);
  EXPECT_EQ(m.meta.at("source"), "synth");
}

TEST(Manifest, EmptyBundleList) {
  TempDir dir("prism_manifest_empty");
  save_manifest({}, dir.path() / "m.jsonl", kDims);
  const Manifest m = load_manifest(dir.path() / "m.jsonl");
  EXPECT_TRUE(m.bundles.empty());
  EXPECT_EQ(m.dims, kDims);
}

TEST(Manifest, ZeroCaptionsRoundTrip) {
  TempDir dir("prism_manifest_nocaps");
  auto b = toy_bundle();
  b.caption_embs = Tensor(0, kDims.d_text);
  save_manifest({b}, dir.path() / "m.jsonl", kDims);
  const Manifest m = load_manifest(dir.path() / "m.jsonl");
  EXPECT_EQ(m.bundles[0].num_captions(), 0u);
}

TEST(Manifest, MissingBlob) {
  TempDir dir("prism_manifest_missing");
  save_manifest({toy_bundle()}, dir.path() / "m.jsonl", kDims);
  fs::remove(dir.path() / "m.node_vis.prsm");
  EXPECT_PRISM_ERROR(load_manifest(dir.path() / "m.jsonl"), ErrorKind::kMissingBlob);
}

TEST(Manifest, DeclaredWidthDiffersFromBlob) {
  TempDir dir("prism_manifest_width");
  const Dims wide{16, 6, 4};
  save_manifest({toy_bundle()}, dir.path() / "m.jsonl", kDims);
  std::string text = read_text(dir.path() / "m.jsonl");
  const auto pos = text.find("\"d_text\":8");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 10, "\"d_text\":" + std::to_string(wide.d_text));
  write_text(dir.path() / "m.jsonl", text);
  EXPECT_PRISM_ERROR(load_manifest(dir.path() / "m.jsonl"), ErrorKind::kDimMismatch);
}

TEST(Manifest, MalformedLinesAndHeader) {
  TempDir dir("prism_manifest_bad");
  write_text(dir.path() / "a.jsonl", "{not json\n");
  EXPECT_PRISM_ERROR(load_manifest(dir.path() / "a.jsonl"), ErrorKind::kInvalidManifest);
  write_text(dir.path() / "b.jsonl", "{\"format\":\"something-else\",\"version\":1}\n");
  EXPECT_PRISM_ERROR(load_manifest(dir.path() / "b.jsonl"), ErrorKind::kInvalidManifest);
  EXPECT_PRISM_ERROR(load_manifest(dir.path() / "absent.jsonl"), ErrorKind::kIoFailure);
}

TEST(Validation, Invariants) {
  auto b = toy_bundle();
  EXPECT_NO_THROW(validate_bundle(b, kDims));

  auto loop = b;
  loop.graph.edges.push_back(edge(1, 1, "self"));
  EXPECT_PRISM_ERROR(validate_bundle(loop, kDims), ErrorKind::kInvariantViolation);

  auto dup = b;
  dup.graph.edges.push_back(edge(0, 1, "on"));
  EXPECT_PRISM_ERROR(validate_bundle(dup, kDims), ErrorKind::kInvariantViolation);

  auto dangling = b;
  dangling.graph.edges.push_back(edge(0, 7, "near"));
  EXPECT_PRISM_ERROR(validate_bundle(dangling, kDims), ErrorKind::kInvariantViolation);

  auto box = b;
  box.graph.nodes[1].bbox = {0.8f, 0.1f, 0.5f, 0.2f};
  EXPECT_PRISM_ERROR(validate_bundle(box, kDims), ErrorKind::kInvariantViolation);

  auto norm = b;
  norm.graph.nodes[0].text_emb[0] += 0.5f;
  EXPECT_PRISM_ERROR(validate_bundle(norm, kDims), ErrorKind::kInvariantViolation);

  auto width = b;
  width.global_vis.pop_back();
  EXPECT_PRISM_ERROR(validate_bundle(width, kDims), ErrorKind::kDimMismatch);

  auto ids = b;
  ids.graph.nodes[2].id = 5;
  EXPECT_PRISM_ERROR(validate_bundle(ids, kDims), ErrorKind::kInvariantViolation);
}
