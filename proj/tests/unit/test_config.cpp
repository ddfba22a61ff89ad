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

#include <gtest/gtest.h>

#include "prism/config.hpp"
#include "test_util.hpp"

using namespace prism;
namespace fs = std::filesystem;

TEST(Config, FullScaleDefaults) {
  const RunConfig c;
  EXPECT_EQ(c.imp_hidden, 1536u);
  EXPECT_EQ(c.imp_heads, 32u);
  EXPECT_DOUBLE_EQ(c.imp_lr, 1e-4);
  EXPECT_EQ(c.imp_epochs, 60u);
  EXPECT_DOUBLE_EQ(c.prune_threshold, 0.4);
  EXPECT_DOUBLE_EQ(c.alpha, 0.7);
  EXPECT_EQ(c.gnn_layers, 3u);
  EXPECT_NO_THROW(c.validate());
  EXPECT_NO_THROW(RunConfig::desk().validate());
}

TEST(Config, DerivedOptionsFollowFields) {
  RunConfig c = RunConfig::desk();
  c.prune_threshold = 0.25;
  c.prune_jenks = false;
  c.alpha = 0.5;
  c.gnn_layers = 2;
  EXPECT_DOUBLE_EQ(c.pruning().threshold, 0.25);
  EXPECT_FALSE(c.pruning().use_jenks);
  EXPECT_DOUBLE_EQ(c.retrieval().alpha, 0.5);
  EXPECT_EQ(c.retrieval().gnn.layers, 2u);
  EXPECT_EQ(c.retrieval_training().pairs_per_image, c.pairs_per_image);
  EXPECT_NE(c.importance_training().seed, c.retrieval_training().train.seed);
}

TEST(Config, SetParsesEachType) {
  RunConfig c;
  c.set("seed", "42");
  c.set("importance.lr", "0.002");
  c.set("gnn.edge_aware", "false");
  c.set("retrieval.warmup", "3");
  EXPECT_EQ(c.seed, 42u);
  EXPECT_DOUBLE_EQ(c.imp_lr, 0.002);
  EXPECT_FALSE(c.gnn_edge_aware);
  EXPECT_EQ(c.ret_warmup, 3);
}

TEST(Config, SetRejectsBadInput) {
  RunConfig c;
  EXPECT_PRISM_ERROR(c.set("no.such.key", "1"), ErrorKind::kConfigInvalid);
  EXPECT_PRISM_ERROR(c.set("seed", "-1"), ErrorKind::kConfigInvalid);
  EXPECT_PRISM_ERROR(c.set("seed", "12abc"), ErrorKind::kConfigInvalid);
  EXPECT_PRISM_ERROR(c.set("importance.lr", "nan"), ErrorKind::kConfigInvalid);
  EXPECT_PRISM_ERROR(c.set("gnn.edge_aware", "maybe"), ErrorKind::kConfigInvalid);
}

TEST(Config, ValidationCatchesBadValues) {
  RunConfig c = RunConfig::desk();
  c.imp_heads = 3;
  EXPECT_THROW(c.validate(), Error);
  c = RunConfig::desk();
  c.ret_gamma = 1.5;
  EXPECT_PRISM_ERROR(c.validate(), ErrorKind::kConfigInvalid);
  c = RunConfig::desk();
  c.rel_max_fraction = 0.0;
  EXPECT_PRISM_ERROR(c.validate(), ErrorKind::kConfigInvalid);
  c = RunConfig::desk();
  c.jobs = 0;
  EXPECT_PRISM_ERROR(c.validate(), ErrorKind::kConfigInvalid);
}

TEST(Config, HashTracksEveryField) {
  const RunConfig a;
  RunConfig b;
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  b.rel_top_n = 6;
  EXPECT_NE(a.hash(), b.hash());
  EXPECT_NE(a.hash(), RunConfig::desk().hash());
  EXPECT_NE(a.canonical().find("alpha=0.69999999999999996\n"), std::string::npos);
}

TEST(Config, JsonHasEveryKey) {
  const auto j = RunConfig::desk().to_json();
  EXPECT_EQ(j.at("importance.hidden").get<std::size_t>(), RunConfig::desk().imp_hidden);
  std::size_t lines = 0;
  for (char ch : RunConfig{}.canonical()) lines += ch == '\n';
  EXPECT_EQ(j.size(), lines);
}

TEST(Config, LoadFile) {
  const fs::path p = fs::temp_directory_path() / "prism_config_test.cfg";
  std::ofstream(p) << "# desk overrides\n\nseed = 11\n  prune.threshold=0.3   # inline comment\n";
  RunConfig c;
  c.load_file(p);
  EXPECT_EQ(c.seed, 11u);
  EXPECT_DOUBLE_EQ(c.prune_threshold, 0.3);

  std::ofstream(p) << "seed = 1\nthis line has no separator\n";
  try {
    RunConfig().load_file(p);
    ADD_FAILURE() << "expected a config error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfigInvalid);
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  fs::remove(p);
  EXPECT_PRISM_ERROR(RunConfig().load_file(p), ErrorKind::kConfigInvalid);
}
