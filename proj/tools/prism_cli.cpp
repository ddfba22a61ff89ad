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

// prism: command-line driver for fixture generation, training, pruning,
// indexing, querying and evaluation.
//
// Exit codes: 0 on success, the numeric ErrorKind value for engine errors,
// CLI11's own codes (>= 100) for argument errors, 125 for anything else.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "prism/prism.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace prism;

namespace {

constexpr int kUnexpectedFailure = 125;

// Options shared by every subcommand.
struct Globals {
  std::string profile = "full";
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool quiet = false;
};

void log_line(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << "[prism] " << msg << "\n";
}

// Profile defaults, then the config file (--config or PRISM_CONFIG), then
// --set overrides, then --seed / --jobs.
RunConfig resolve_config(const Globals& g) {
  RunConfig cfg;
  if (g.profile == "desk")
    cfg = RunConfig::desk();
  else
    require(g.profile == "full", ErrorKind::kConfigInvalid, "unknown profile '" + g.profile + "'");
  std::string path = g.config_path;
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnv)) path = env;
  if (!path.empty()) cfg.load_file(path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    require(eq != std::string::npos, ErrorKind::kConfigInvalid, "--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (g.seed) cfg.seed = *g.seed;
  if (g.jobs) cfg.jobs = *g.jobs;
  cfg.validate();
  return cfg;
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  for (const auto& [key, value] : j.items()) cfg.set(key, value.dump());
  cfg.validate();
  return cfg;
}

json dims_json(const graphcore::Dims& d) { return {{"d_text", d.d_text}, {"d_vis", d.d_vis}, {"d_g", d.d_g}}; }

graphcore::Dims dims_from_json(const json& j) {
  try {
    return {j.at("d_text").get<std::size_t>(), j.at("d_vis").get<std::size_t>(), j.at("d_g").get<std::size_t>()};
  } catch (const json::exception& e) {
    fail(ErrorKind::kCheckpointMismatch, std::string("checkpoint dims: ") + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIoFailure, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  require(static_cast<bool>(out), ErrorKind::kIoFailure, "failed writing " + path.string());
}

json read_json(const fs::path& path, ErrorKind malformed) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIoFailure, "cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    fail(malformed, path.string() + ": " + e.what());
  }
}

void prepare_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

std::vector<graphcore::EmbeddingBundle> select_split(const std::vector<graphcore::EmbeddingBundle>& bundles,
                                                     const std::string& split) {
  if (split == "all") return bundles;
  std::vector<graphcore::EmbeddingBundle> out;
  for (const auto& b : bundles)
    if ((split == "test") == (b.split == "test")) out.push_back(b);
  return out;
}

// ---- checkpoints -----------------------------------------------------------

struct LoadedImportance {
  RunConfig cfg;
  graphcore::Dims dims;
  importance::ImportanceModel<float> model;
};

LoadedImportance load_importance(const fs::path& path) {
  const auto meta = numerics::read_checkpoint_meta(path);
  require(meta.kind == "importance", ErrorKind::kCheckpointMismatch,
          path.string() + " holds a " + meta.kind + " checkpoint, expected importance");
  RunConfig cfg = config_from_json(meta.config);
  const auto dims = dims_from_json(meta.extra.value("dims", json::object()));
  importance::ImportanceModel<float> model(dims, cfg.importance(), numerics::mix_seed(cfg.seed, "importance.init"));
  numerics::load_checkpoint(path, model.parameters());
  return {cfg, dims, std::move(model)};
}

struct LoadedRetrieval {
  RunConfig cfg;
  graphcore::Dims dims;
  std::string config_hash;
  retrieval::DualStreamModel<float> model;
};

LoadedRetrieval load_retrieval(const fs::path& path) {
  const auto meta = numerics::read_checkpoint_meta(path);
  require(meta.kind == "retrieval", ErrorKind::kCheckpointMismatch,
          path.string() + " holds a " + meta.kind + " checkpoint, expected retrieval");
  RunConfig cfg = config_from_json(meta.config);
  const auto dims = dims_from_json(meta.extra.value("dims", json::object()));
  retrieval::DualStreamModel<float> model(dims, cfg.retrieval(), numerics::mix_seed(cfg.seed, "retrieval.init"));
  numerics::load_checkpoint(path, model.parameters());
  return {cfg, dims, meta.config_hash, std::move(model)};
}

// ---- score files -------------------------------------------------------------

json scores_json(const std::vector<graphcore::EmbeddingBundle>& bundles,
                 const std::vector<importance::GraphScores>& scores, const std::string& source,
                 const std::string& config_hash) {
  json images = json::array();
  for (std::size_t i = 0; i < bundles.size(); ++i)
    images.push_back({{"image_id", bundles[i].image_id},
                      {"objects", scores[i].objects},
                      {"triplets", scores[i].triplets}});
  return {{"source", source}, {"config_hash", config_hash}, {"images", images}};
}

std::map<std::string, importance::GraphScores> read_scores(const fs::path& path) {
  const json j = read_json(path, ErrorKind::kInvalidArgument);
  std::map<std::string, importance::GraphScores> out;
  try {
    for (const auto& img : j.at("images"))
      out[img.at("image_id").get<std::string>()] = {img.at("objects").get<std::vector<double>>(),
                                                    img.at("triplets").get<std::vector<double>>()};
  } catch (const json::exception& e) {
    fail(ErrorKind::kInvalidArgument, path.string() + ": " + e.what());
  }
  return out;
}

// Scores for every bundle: from a score file, or ground truth when `path` is
// empty.
std::vector<importance::GraphScores> scores_for(const std::vector<graphcore::EmbeddingBundle>& bundles,
                                                const std::string& path) {
  std::vector<importance::GraphScores> out;
  if (path.empty()) {
    for (const auto& b : bundles) out.push_back(importance::ground_truth_scores(b));
    return out;
  }
  const auto table = read_scores(path);
  for (const auto& b : bundles) {
    auto it = table.find(b.image_id);
    require(it != table.end(), ErrorKind::kScoreCoverageIncomplete, path + " has no scores for " + b.image_id);
    out.push_back(it->second);
  }
  return out;
}

json decision_json(const std::string& id, const pruner::RetentionDecision& d) {
  json objects = json::object(), triplets = json::object();
  for (const auto& [node, reason] : d.objects) objects[std::to_string(node)] = std::string(pruner::to_string(reason));
  for (const auto& [edge, reason] : d.triplets) triplets[std::to_string(edge)] = std::string(pruner::to_string(reason));
  return {{"image_id", id},
          {"original_objects", d.original_objects},
          {"original_triplets", d.original_triplets},
          {"objects", objects},
          {"triplets", triplets},
          {"old_to_new", d.old_to_new}};
}

std::string format_hits(const std::vector<retrieval::Hit>& hits) {
  std::string out;
  char line[256];
  for (const auto& h : hits) {
    std::snprintf(line, sizeof line, "%zu\t%s\t%.6f\n", h.rank, h.image_id.c_str(), h.score);
    out += line;
  }
  return out;
}

// ---- subcommands -------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::size_t images = 50, clusters = 5;
  std::uint64_t seed = 7;
  std::string mode = "clusters";
  double test_fraction = 0.3;
  std::size_t d_text = 32, d_vis = 32, d_g = 16;
};

void cmd_synth(const SynthArgs& a) {
  synth::SynthOptions o;
  o.images = a.images;
  o.clusters = a.clusters;
  o.seed = a.seed;
  o.mode = synth::parse_mode(a.mode);
  o.test_fraction = a.test_fraction;
  o.dims = {a.d_text, a.d_vis, a.d_g};
  const auto bundles = synth::make_fixtures(o);
  prepare_output(a.out);
  graphcore::save_manifest(bundles, a.out, o.dims,
                           {{"source", "synth"},
                            {"mode", std::string(synth::to_string(o.mode))},
                            {"seed", o.seed},
                            {"clusters", o.clusters}});
  std::cout << "wrote " << bundles.size() << " images to " << a.out << "\n";
}

struct TrainImportanceArgs {
  std::string manifest, out, split = "train";
};

void cmd_train_importance(const Globals& g, const TrainImportanceArgs& a) {
  const RunConfig cfg = resolve_config(g);
  const auto m = graphcore::load_manifest(a.manifest);
  const auto bundles = select_split(m.bundles, a.split);
  const auto targets = importance::build_targets(bundles, true);
  log_line(g, "importance: " + std::to_string(targets.size()) + " targets from " + std::to_string(bundles.size()) +
                  " images");
  importance::ImportanceModel<float> model(m.dims, cfg.importance(), numerics::mix_seed(cfg.seed, "importance.init"));
  const auto opts = cfg.importance_training();
  const auto report = importance::train_importance(model, targets, opts, [&](std::size_t e, double loss, double lr) {
    log_line(g, "epoch " + std::to_string(e + 1) + " mse " + std::to_string(loss) + " lr " + std::to_string(lr));
  });
  prepare_output(a.out);
  numerics::save_checkpoint(a.out, model.parameters(),
                            {"importance", cfg.to_json(), cfg.hash(), opts.epochs, opts.schedule,
                             {{"dims", dims_json(m.dims)}, {"epoch_loss", report.epoch_loss}}});
  std::cout << "final mse " << report.epoch_loss.back() << "; checkpoint " << a.out << "\n";
}

struct ScoreArgs {
  std::string manifest, checkpoint, out, split = "all";
  bool ground_truth = false;
};

void cmd_score(const Globals& g, const ScoreArgs& a) {
  const auto m = graphcore::load_manifest(a.manifest);
  const auto bundles = select_split(m.bundles, a.split);
  if (a.ground_truth) {
    write_json(a.out, scores_json(bundles, scores_for(bundles, {}), "ground_truth", {}));
  } else {
    require(!a.checkpoint.empty(), ErrorKind::kInvalidArgument, "score needs --checkpoint or --ground-truth");
    auto loaded = load_importance(a.checkpoint);
    require(loaded.dims == m.dims, ErrorKind::kDimMismatch, "checkpoint dims differ from the manifest");
    const std::size_t jobs = g.jobs.value_or(loaded.cfg.jobs);
    const auto scores = predict_graph_scores(loaded.model, bundles, jobs);
    write_json(a.out, scores_json(bundles, scores, "model", loaded.cfg.hash()));
  }
  std::cout << "scored " << bundles.size() << " images; wrote " << a.out << "\n";
}

struct PruneArgs {
  std::string manifest, scores, out, decisions;
};

void cmd_prune(const Globals& g, const PruneArgs& a) {
  const RunConfig cfg = resolve_config(g);
  auto m = graphcore::load_manifest(a.manifest);
  const auto scores = scores_for(m.bundles, a.scores);
  json decisions = json::array();
  std::size_t before = 0, after = 0;
  for (std::size_t i = 0; i < m.bundles.size(); ++i) {
    auto r = pruner::prune(m.bundles[i].graph, scores[i], cfg.pruning());
    before += m.bundles[i].graph.nodes.size();
    after += r.graph.nodes.size();
    decisions.push_back(decision_json(m.bundles[i].image_id, r.decision));
    m.bundles[i].graph = std::move(r.graph);
  }
  json meta = m.meta;
  meta["pruned"] = {{"scores", a.scores.empty() ? "ground_truth" : a.scores},
                    {"threshold", cfg.prune_threshold},
                    {"jenks", cfg.prune_jenks},
                    {"config_hash", cfg.hash()}};
  prepare_output(a.out);
  graphcore::save_manifest(m.bundles, a.out, m.dims, meta);
  if (!a.decisions.empty()) write_json(a.decisions, decisions);
  std::cout << "kept " << after << " of " << before << " objects; wrote " << a.out << "\n";
}

struct TrainRetrievalArgs {
  std::string manifest, out, split = "train", cache;
};

void cmd_train_retrieval(const Globals& g, const TrainRetrievalArgs& a) {
  const RunConfig cfg = resolve_config(g);
  const auto m = graphcore::load_manifest(a.manifest);
  const auto bundles = select_split(m.bundles, a.split);
  std::vector<graphcore::SceneGraph> graphs;
  for (const auto& b : bundles) graphs.push_back(b.graph);
  const auto sims = retrieval::cached_pair_similarities(bundles, a.cache, cfg.jobs);
  retrieval::DualStreamModel<float> model(m.dims, cfg.retrieval(), numerics::mix_seed(cfg.seed, "retrieval.init"));
  const auto opts = cfg.retrieval_training();
  log_line(g, "retrieval: " + std::to_string(bundles.size()) + " images");
  const auto report =
      retrieval::train_retrieval(model, bundles, graphs, sims, opts, [&](std::size_t e, double loss, double lr) {
        log_line(g, "epoch " + std::to_string(e + 1) + " loss " + std::to_string(loss) + " lr " + std::to_string(lr));
      });
  prepare_output(a.out);
  numerics::save_checkpoint(a.out, model.parameters(),
                            {"retrieval", cfg.to_json(), cfg.hash(), opts.train.epochs, opts.train.schedule,
                             {{"dims", dims_json(m.dims)}, {"epoch_loss", report.epoch_loss}}});
  std::cout << "final loss " << report.epoch_loss.back() << "; checkpoint " << a.out << "\n";
}

struct IndexArgs {
  std::string manifest, checkpoint, out, split = "test";
};

void cmd_index(const Globals& g, const IndexArgs& a) {
  auto loaded = load_retrieval(a.checkpoint);
  const auto m = graphcore::load_manifest(a.manifest);
  require(loaded.dims == m.dims, ErrorKind::kDimMismatch, "checkpoint dims differ from the manifest");
  const auto bundles = select_split(m.bundles, a.split);
  std::vector<graphcore::SceneGraph> graphs;
  for (const auto& b : bundles) graphs.push_back(b.graph);
  const auto emb = loaded.model.embed_all(bundles, graphs, g.jobs.value_or(loaded.cfg.jobs));
  const retrieval::RetrievalIndex index(ids_of(bundles), emb, loaded.config_hash);
  prepare_output(a.out);
  index.save(a.out);
  std::cout << "indexed " << index.size() << " images; wrote " << a.out << "\n";
}

struct QueryArgs {
  std::string index, id, manifest, checkpoint;
  std::size_t top_k = 5;
  bool include_self = false;
};

void cmd_query(const QueryArgs& a) {
  const auto index = retrieval::RetrievalIndex::load(a.index);
  std::vector<float> q;
  if (!a.manifest.empty()) {
    require(!a.checkpoint.empty(), ErrorKind::kInvalidArgument, "--manifest needs --checkpoint to embed the query");
    auto loaded = load_retrieval(a.checkpoint);
    const auto m = graphcore::load_manifest(a.manifest);
    const auto it = std::find_if(m.bundles.begin(), m.bundles.end(),
                                 [&](const auto& b) { return b.image_id == a.id; });
    require(it != m.bundles.end(), ErrorKind::kInvalidArgument, "no image '" + a.id + "' in " + a.manifest);
    const auto e = loaded.model.embed_image(*it, it->graph);
    q.assign(e.values().begin(), e.values().end());
  } else {
    const auto& ids = index.ids();
    const auto it = std::find(ids.begin(), ids.end(), a.id);
    require(it != ids.end(), ErrorKind::kInvalidArgument, "no image '" + a.id + "' in " + a.index);
    const auto row = static_cast<std::size_t>(it - ids.begin());
    const auto& e = index.embeddings();
    q.assign(e.data() + row * e.cols(), e.data() + (row + 1) * e.cols());
  }
  std::vector<retrieval::Hit> hits;
  if (a.include_self) {
    hits = index.query(q, a.top_k);
  } else {
    const std::size_t others = index.size() - (std::count(index.ids().begin(), index.ids().end(), a.id) ? 1 : 0);
    require(a.top_k >= 1 && a.top_k <= others, ErrorKind::kInvalidArgument,
            "top_k must be between 1 and the number of other candidates (" + std::to_string(others) + ")");
    for (auto& h : index.rank_all(q))
      if (h.image_id != a.id && hits.size() < a.top_k) hits.push_back(h);
    for (std::size_t r = 0; r < hits.size(); ++r) hits[r].rank = r + 1;
  }
  std::cout << format_hits(hits);
}

struct EvaluateArgs {
  std::string index, manifest, out;
  std::vector<std::size_t> ks{1, 3, 5};
};

void cmd_evaluate(const Globals& g, const EvaluateArgs& a) {
  const RunConfig cfg = resolve_config(g);
  const auto index = retrieval::RetrievalIndex::load(a.index);
  const auto m = graphcore::load_manifest(a.manifest);
  std::map<std::string, const graphcore::EmbeddingBundle*> by_id;
  for (const auto& b : m.bundles) by_id[b.image_id] = &b;
  std::vector<graphcore::EmbeddingBundle> ordered;
  for (const auto& id : index.ids()) {
    auto it = by_id.find(id);
    require(it != by_id.end(), ErrorKind::kInvalidArgument, "indexed image " + id + " is not in " + a.manifest);
    ordered.push_back(*it->second);
  }
  const auto sims = retrieval::pair_similarities(ordered, cfg.jobs);
  const auto table = eval::evaluate_testset(index.embeddings(), index.ids(), sims, a.ks, cfg.relevance(), cfg.jobs);
  std::cout << eval::format_metrics_table(table);
  if (!a.out.empty()) {
    json j = eval::metrics_json(table);
    j["index_config_hash"] = index.config_hash();
    write_json(a.out, j);
  }
}

struct GradcheckArgs {
  std::size_t seeds = 20;
  std::uint64_t first_seed = 1;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  const auto report = gradcheck::run_all(a.seeds, a.first_seed);
  char line[256];
  for (const auto& s : report.suites) {
    std::snprintf(line, sizeof line, "%-22s runs=%-3zu max_rel_err=%.3e worst=%s (seed %llu)\n", s.name.c_str(),
                  s.runs, s.max_relative_error, s.worst_parameter.c_str(),
                  static_cast<unsigned long long>(s.worst_seed));
    std::cout << line;
  }
  const bool ok = report.max_relative_error < gradcheck::kTolerance;
  std::snprintf(line, sizeof line, "%s max_rel_err=%.3e tolerance=%.0e seconds=%.1f\n", ok ? "PASS" : "FAIL",
                report.max_relative_error, gradcheck::kTolerance, report.seconds);
  std::cout << line;
  return ok ? 0 : static_cast<int>(ErrorKind::kInvariantViolation);
}

struct RetentionArgs {
  std::string manifest, scores, split = "all", out;
};

void cmd_report_retention(const Globals& g, const RetentionArgs& a) {
  const RunConfig cfg = resolve_config(g);
  const auto m = graphcore::load_manifest(a.manifest);
  const auto bundles = select_split(m.bundles, a.split);
  const auto scores = scores_for(bundles, a.scores);
  std::vector<pruner::RetentionDecision> decisions;
  for (std::size_t i = 0; i < bundles.size(); ++i)
    decisions.push_back(pruner::prune(bundles[i].graph, scores[i], cfg.pruning()).decision);
  const auto report = pruner::retention_report(decisions);
  std::cout << pruner::format_retention_table(report);
  if (!a.out.empty()) {
    json rows = json::array();
    for (const auto& b : report)
      rows.push_back({{"objects", b.label()},
                      {"graphs", b.graphs},
                      {"objects_retained", b.objects_retained},
                      {"directly_important", b.directly_important},
                      {"indirectly_important", b.indirectly_important},
                      {"triplets_retained", b.triplets_retained}});
    write_json(a.out, rows);
  }
}

struct PipelineArgs {
  std::string manifest, out, cache;
};

void cmd_pipeline(const Globals& g, const PipelineArgs& a) {
  const RunConfig cfg = resolve_config(g);
  const auto m = graphcore::load_manifest(a.manifest);
  const auto r = run_pipeline(m.bundles, m.dims, cfg, a.cache, [&](const std::string& s) { log_line(g, s); });
  std::cout << eval::format_metrics_table(r.metrics);
  char line[160];
  std::snprintf(line, sizeof line, "importance on test items: recall=%.4f f1=%.4f\n", r.importance_test.recall,
                r.importance_test.f1);
  std::cout << line << pruner::format_retention_table(pruner::retention_report(r.test_decisions));
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    json j = eval::metrics_json(r.metrics);
    j["config_hash"] = cfg.hash();
    j["importance_test"] = {{"recall", r.importance_test.recall}, {"f1", r.importance_test.f1}};
    j["importance_loss"] = r.importance_report.epoch_loss;
    j["retrieval_loss"] = r.retrieval_report.epoch_loss;
    write_json(fs::path(a.out) / "metrics.json", j);
    r.index.save(fs::path(a.out) / "index.json");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"prism: scene-graph image-to-image retrieval"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--profile", g.profile, "Base configuration: full (full scale) or desk")
      ->check(CLI::IsMember({"full", "desk"}));
  app.add_option("--config", g.config_path, std::string("Config file (key = value lines); default $") + kConfigEnv);
  app.add_option("--set", g.overrides, "Override one config key, key=value (repeatable)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--jobs", g.jobs, "Worker threads for scoring, embedding and evaluation")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", g.quiet, "Suppress progress on stderr");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("synth-fixtures", "Write a seeded synthetic manifest");
  synth_cmd->add_option("--out", synth_args.out, "Manifest path")->required();
  synth_cmd->add_option("--images", synth_args.images, "Number of images");
  synth_cmd->add_option("--clusters", synth_args.clusters, "Number of planted clusters");
  synth_cmd->add_option("--seed", synth_args.seed, "Fixture seed");
  synth_cmd->add_option("--mode", synth_args.mode, "clusters, relation_only or retention");
  synth_cmd->add_option("--test-fraction", synth_args.test_fraction, "Share of each cluster in the test split");
  synth_cmd->add_option("--d-text", synth_args.d_text, "Text embedding width");
  synth_cmd->add_option("--d-vis", synth_args.d_vis, "Visual embedding width");
  synth_cmd->add_option("--d-g", synth_args.d_g, "Graph embedding width");

  TrainImportanceArgs ti_args;
  auto* ti_cmd = app.add_subcommand("train-importance", "Train the importance scorer on ground-truth scores");
  ti_cmd->add_option("--manifest", ti_args.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  ti_cmd->add_option("--out", ti_args.out, "Checkpoint path")->required();
  ti_cmd->add_option("--split", ti_args.split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Write per-item importance scores");
  score_cmd->add_option("--manifest", score_args.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--checkpoint", score_args.checkpoint, "Importance checkpoint");
  score_cmd->add_flag("--ground-truth", score_args.ground_truth, "Use caption-derived scores instead of a model");
  score_cmd->add_option("--out", score_args.out, "Score file (JSON)")->required();
  score_cmd->add_option("--split", score_args.split, "train, test or all")
      ->check(CLI::IsMember({"train", "test", "all"}));

  PruneArgs prune_args;
  auto* prune_cmd = app.add_subcommand("prune", "Prune every graph of a manifest");
  prune_cmd->add_option("--manifest", prune_args.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  prune_cmd->add_option("--scores", prune_args.scores, "Score file; ground truth when omitted")
      ->check(CLI::ExistingFile);
  prune_cmd->add_option("--out", prune_args.out, "Pruned manifest path")->required();
  prune_cmd->add_option("--decisions", prune_args.decisions, "Optional per-image retention decisions (JSON)");

  TrainRetrievalArgs tr_args;
  auto* tr_cmd = app.add_subcommand("train-retrieval", "Train the dual-stream model on a (pruned) manifest");
  tr_cmd->add_option("--manifest", tr_args.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  tr_cmd->add_option("--out", tr_args.out, "Checkpoint path")->required();
  tr_cmd->add_option("--split", tr_args.split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  tr_cmd->add_option("--cache", tr_args.cache, "Directory for the pair-similarity cache");

  IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "Embed images and write a retrieval index");
  index_cmd->add_option("--manifest", index_args.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  index_cmd->add_option("--checkpoint", index_args.checkpoint, "Retrieval checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  index_cmd->add_option("--out", index_args.out, "Index path")->required();
  index_cmd->add_option("--split", index_args.split, "train, test or all")
      ->check(CLI::IsMember({"train", "test", "all"}));

  QueryArgs query_args;
  auto* query_cmd = app.add_subcommand("query", "Rank indexed images against one query image");
  query_cmd->add_option("--index", query_args.index, "Index path")->required()->check(CLI::ExistingFile);
  query_cmd->add_option("--id", query_args.id, "Query image id")->required();
  query_cmd->add_option("--top-k", query_args.top_k, "Number of results");
  query_cmd->add_option("--manifest", query_args.manifest, "Embed the query from this manifest");
  query_cmd->add_option("--checkpoint", query_args.checkpoint, "Retrieval checkpoint for --manifest");
  query_cmd->add_flag("--include-self", query_args.include_self, "Keep the query image among the results");

  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "Leave-one-out NDCG, MAP and MRR over an index");
  eval_cmd->add_option("--index", eval_args.index, "Index path")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--manifest", eval_args.manifest, "Manifest holding the indexed images' captions")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--ks", eval_args.ks, "Cutoffs")->delimiter(',');
  eval_cmd->add_option("--out", eval_args.out, "Metrics file (JSON)");

  GradcheckArgs gc_args;
  auto* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable component");
  gc_cmd->add_option("--seeds", gc_args.seeds, "Seeds per suite");
  gc_cmd->add_option("--first-seed", gc_args.first_seed, "First seed");

  RetentionArgs ret_args;
  auto* ret_cmd = app.add_subcommand("report-retention", "Retention rates by graph size");
  ret_cmd->add_option("--manifest", ret_args.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  ret_cmd->add_option("--scores", ret_args.scores, "Score file; ground truth when omitted")->check(CLI::ExistingFile);
  ret_cmd->add_option("--split", ret_args.split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  ret_cmd->add_option("--out", ret_args.out, "Report file (JSON)");

  PipelineArgs pipe_args;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Train, prune, index and evaluate in one run");
  pipe_cmd->add_option("--manifest", pipe_args.manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  pipe_cmd->add_option("--out", pipe_args.out, "Output directory for metrics.json and index.json");
  pipe_cmd->add_option("--cache", pipe_args.cache, "Directory for the pair-similarity cache");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*synth_cmd) cmd_synth(synth_args);
    else if (*ti_cmd) cmd_train_importance(g, ti_args);
    else if (*score_cmd) cmd_score(g, score_args);
    else if (*prune_cmd) cmd_prune(g, prune_args);
    else if (*tr_cmd) cmd_train_retrieval(g, tr_args);
    else if (*index_cmd) cmd_index(g, index_args);
    else if (*query_cmd) cmd_query(query_args);
    else if (*eval_cmd) cmd_evaluate(g, eval_args);
    else if (*gc_cmd) return cmd_gradcheck(gc_args);
    else if (*ret_cmd) cmd_report_retention(g, ret_args);
    else if (*pipe_cmd) cmd_pipeline(g, pipe_args);
  } catch (const Error& e) {
    std::cerr << "prism: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "prism: unexpected failure: " << e.what() << "\n";
    return kUnexpectedFailure;
  }
  return 0;
}
