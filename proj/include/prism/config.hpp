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

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "prism/error.hpp"
#include "prism/eval/metrics.hpp"
#include "prism/importance/model.hpp"
#include "prism/numerics/random.hpp"
#include "prism/numerics/training.hpp"
#include "prism/pruner/prune.hpp"
#include "prism/retrieval/model.hpp"
#include "prism/retrieval/train.hpp"

namespace prism {

// Environment variable naming a default config file.
inline constexpr const char* kConfigEnv = "PRISM_CONFIG";

// Every tunable of a run. Defaults are the full-scale values; desk() gives
// the small configuration used on synthetic fixtures.
struct RunConfig {
  std::uint64_t seed = 7;
  std::size_t jobs = 1;

  std::size_t imp_hidden = 1536;
  std::size_t imp_heads = 32;
  std::size_t imp_layers = 3;
  std::size_t imp_queries = 4;
  double imp_dropout = 0.1;
  std::size_t imp_epochs = 60;
  std::size_t imp_batch = 32;
  double imp_lr = 1e-4;
  double imp_gamma = 0.9;
  int imp_warmup = 20;

  double prune_threshold = 0.4;
  bool prune_jenks = true;

  std::size_t gnn_layers = 3;
  std::size_t gnn_hidden = 64;
  std::size_t gnn_heads = 4;
  std::size_t gnn_out = 32;
  double gnn_dropout = 0.1;
  bool gnn_bidirectional = false;
  bool gnn_edge_aware = true;
  std::size_t vis_hidden = 64;
  std::size_t vis_out = 32;
  double alpha = 0.7;
  std::size_t ret_epochs = 60;
  std::size_t ret_batch = 32;
  double ret_lr = 1e-4;
  double ret_gamma = 0.9;
  int ret_warmup = 20;
  std::size_t pairs_per_image = 64;

  std::size_t rel_top_n = 5;
  double rel_max_fraction = 0.8;

  // Calls f(name, field&) for every field in canonical order.
  template <typename F>
  void visit(F&& f) {
    f("seed", seed);
    f("jobs", jobs);
    f("importance.hidden", imp_hidden);
    f("importance.heads", imp_heads);
    f("importance.layers", imp_layers);
    f("importance.queries", imp_queries);
    f("importance.dropout", imp_dropout);
    f("importance.epochs", imp_epochs);
    f("importance.batch", imp_batch);
    f("importance.lr", imp_lr);
    f("importance.gamma", imp_gamma);
    f("importance.warmup", imp_warmup);
    f("prune.threshold", prune_threshold);
    f("prune.jenks", prune_jenks);
    f("gnn.layers", gnn_layers);
    f("gnn.hidden", gnn_hidden);
    f("gnn.heads", gnn_heads);
    f("gnn.out", gnn_out);
    f("gnn.dropout", gnn_dropout);
    f("gnn.bidirectional", gnn_bidirectional);
    f("gnn.edge_aware", gnn_edge_aware);
    f("visual.hidden", vis_hidden);
    f("visual.out", vis_out);
    f("visual.alpha", alpha);
    f("retrieval.epochs", ret_epochs);
    f("retrieval.batch", ret_batch);
    f("retrieval.lr", ret_lr);
    f("retrieval.gamma", ret_gamma);
    f("retrieval.warmup", ret_warmup);
    f("retrieval.pairs_per_image", pairs_per_image);
    f("eval.top_n", rel_top_n);
    f("eval.max_fraction", rel_max_fraction);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<RunConfig*>(this)->visit([&](const char* k, auto& v) { f(k, std::as_const(v)); });
  }

  static RunConfig full() { return {}; }

  static RunConfig desk() {
    RunConfig c;
    c.imp_hidden = 64;
    c.imp_heads = 4;
    c.imp_layers = 2;
    c.imp_queries = 4;
    c.imp_dropout = 0.0;
    c.imp_lr = 2e-3;
    c.imp_gamma = 0.95;
    c.imp_warmup = 20;
    c.imp_epochs = 60;
    c.gnn_dropout = 0.0;
    c.ret_epochs = 200;
    c.ret_lr = 1e-3;
    c.ret_gamma = 0.98;
    c.ret_warmup = 20;
    c.pairs_per_image = 8;
    return c;
  }

  importance::ImportanceConfig importance() const {
    return {imp_hidden, imp_heads, imp_layers, imp_queries, imp_dropout};
  }
  numerics::TrainOptions importance_training() const {
    return {imp_epochs, imp_batch, {imp_lr, imp_gamma, imp_warmup}, numerics::mix_seed(seed, "importance.train")};
  }
  pruner::PruneOptions pruning() const {
    pruner::PruneOptions o;
    o.threshold = prune_threshold;
    o.use_jenks = prune_jenks;
    return o;
  }
  retrieval::RetrievalConfig retrieval() const {
    retrieval::RetrievalConfig r;
    r.vis_hidden = vis_hidden;
    r.d_vis_out = vis_out;
    r.alpha = alpha;
    r.gnn = {gnn_layers, gnn_hidden, gnn_heads, gnn_out, gnn_dropout, gnn_bidirectional, gnn_edge_aware};
    return r;
  }
  retrieval::RetrievalTrainOptions retrieval_training() const {
    return {{ret_epochs, ret_batch, {ret_lr, ret_gamma, ret_warmup}, numerics::mix_seed(seed, "retrieval.train")},
            pairs_per_image};
  }
  eval::RelevanceRule relevance() const { return {rel_top_n, rel_max_fraction}; }

  void validate() const {
    importance().validate();
    retrieval().validate();
    require(imp_batch > 0 && ret_batch > 0 && pairs_per_image > 0 && jobs > 0, ErrorKind::kConfigInvalid,
            "batch sizes, pairs per image and jobs must be positive");
    require(imp_lr > 0 && ret_lr > 0 && imp_gamma > 0 && imp_gamma <= 1 && ret_gamma > 0 && ret_gamma <= 1,
            ErrorKind::kConfigInvalid, "learning rates must be positive and decay factors in (0, 1]");
    require(imp_warmup >= 0 && ret_warmup >= 0, ErrorKind::kConfigInvalid, "warmup must be non-negative");
    require(std::isfinite(prune_threshold), ErrorKind::kConfigInvalid, "prune threshold must be finite");
    require(rel_top_n > 0 && rel_max_fraction > 0 && rel_max_fraction <= 1, ErrorKind::kConfigInvalid,
            "relevance rule needs top_n > 0 and max_fraction in (0, 1]");
  }

  // Sets one field from its textual value.
  void set(const std::string& key, const std::string& value) {
    bool found = false;
    visit([&](const char* k, auto& field) {
      if (key != k) return;
      found = true;
      if (!parse_value(value, field))
        fail(ErrorKind::kConfigInvalid, "bad value '" + value + "' for config key " + key);
    });
    require(found, ErrorKind::kConfigInvalid, "unknown config key " + key);
  }

  // Canonical "key=value" lines; the config hash is taken over this text.
  std::string canonical() const {
    std::string out;
    visit([&](const char* k, const auto& v) { out += std::string(k) + "=" + format_value(v) + "\n"; });
    return out;
  }

  std::string hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(numerics::fnv1a64(canonical())));
    return buf;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    visit([&](const char* k, const auto& v) { j[k] = v; });
    return j;
  }

  // Reads "key = value" lines; '#' starts a comment.
  void load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::kConfigInvalid, "cannot open config " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      const auto eq = trimmed.find('=');
      const std::string where = path.string() + ":" + std::to_string(lineno);
      require(eq != std::string::npos, ErrorKind::kConfigInvalid, where + ": expected key = value");
      try {
        set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
      } catch (const Error& e) {
        fail(ErrorKind::kConfigInvalid, where + ": " + e.what());
      }
    }
  }

 private:
  static std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return {};
    return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
  }

  template <typename V>
  static bool parse_value(const std::string& s, V& out) {
    if constexpr (std::is_same_v<V, bool>) {
      if (s == "true" || s == "1") return out = true, true;
      if (s == "false" || s == "0") return out = false, true;
      return false;
    } else if constexpr (std::is_floating_point_v<V>) {
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (s.empty() || *end != '\0' || !std::isfinite(v)) return false;
      out = v;
      return true;
    } else {
      V v{};
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) return false;
      out = v;
      return true;
    }
  }

  template <typename V>
  static std::string format_value(const V& v) {
    if constexpr (std::is_same_v<V, bool>) {
      return v ? "true" : "false";
    } else if constexpr (std::is_floating_point_v<V>) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      return buf;
    } else {
      return std::to_string(v);
    }
  }
};

}  // namespace prism
