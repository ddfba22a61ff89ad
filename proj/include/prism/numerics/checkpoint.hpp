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

#include <json.hpp>

#include "prism/graphcore/blob.hpp"
#include "prism/numerics/optim.hpp"
#include "prism/numerics/tape.hpp"

namespace prism::numerics {

inline constexpr const char* kCheckpointFormat = "prism-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  std::string kind;         // "importance" or "retrieval"
  nlohmann::json config;    // full run configuration
  std::string config_hash;
  std::size_t epoch = 0;
  LrSchedule schedule;
  nlohmann::json extra;     // model-specific notes
};

// Writes `<path>` (JSON metadata plus parameter table) and `<path>.bin`
// (concatenated parameter blobs in table order).
inline void save_checkpoint(const std::filesystem::path& path, const ParameterList<float>& params,
                            const CheckpointMeta& meta) {
  const std::filesystem::path data = path.string() + ".bin";
  std::ofstream bin(data, std::ios::binary);
  require(static_cast<bool>(bin), ErrorKind::kIoFailure, "cannot write " + data.string());
  nlohmann::json table = nlohmann::json::array();
  std::size_t offset = 0;
  for (const Parameter<float>* p : params) {
    std::ostringstream blob;
    graphcore::write_blob(blob, p->value);
    const std::string bytes = blob.str();
    bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    table.push_back({{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()},
                     {"offset", offset}});
    offset += bytes.size();
  }
  require(static_cast<bool>(bin), ErrorKind::kIoFailure, "failed writing " + data.string());

  nlohmann::json j = {{"format", kCheckpointFormat},
                      {"version", kCheckpointVersion},
                      {"kind", meta.kind},
                      {"config", meta.config},
                      {"config_hash", meta.config_hash},
                      {"epoch", meta.epoch},
                      {"schedule",
                       {{"base_lr", meta.schedule.base_lr},
                        {"gamma", meta.schedule.gamma},
                        {"warmup_epochs", meta.schedule.warmup_epochs}}},
                      {"extra", meta.extra},
                      {"params", table},
                      {"data", data.filename().string()}};
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::kIoFailure, "cannot write " + path.string());
  out << j.dump(2) << "\n";
  require(static_cast<bool>(out), ErrorKind::kIoFailure, "failed writing " + path.string());
}

inline CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path, nlohmann::json* raw = nullptr) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::kIoFailure, "cannot open checkpoint " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kCheckpointMismatch, path.string() + ": " + e.what());
  }
  require(j.value("format", "") == kCheckpointFormat && j.value("version", 0) == kCheckpointVersion,
          ErrorKind::kCheckpointMismatch, path.string() + ": not a version 1 checkpoint");
  CheckpointMeta m;
  try {
    m.kind = j.at("kind").get<std::string>();
    m.config = j.at("config");
    m.config_hash = j.value("config_hash", std::string{});
    m.epoch = j.value("epoch", std::size_t{0});
    const auto& s = j.at("schedule");
    m.schedule = {s.at("base_lr").get<double>(), s.at("gamma").get<double>(), s.at("warmup_epochs").get<int>()};
    m.extra = j.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kCheckpointMismatch, path.string() + ": " + e.what());
  }
  if (raw) *raw = std::move(j);
  return m;
}

// Restores parameter values by name. Every parameter must be present with
// the same shape.
inline CheckpointMeta load_checkpoint(const std::filesystem::path& path, const ParameterList<float>& params) {
  nlohmann::json j;
  CheckpointMeta meta = read_checkpoint_meta(path, &j);
  std::map<std::string, std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> table;
  try {
    for (const auto& e : j.at("params"))
      table[e.at("name").get<std::string>()] = {
          e.at("offset").get<std::size_t>(), {e.at("rows").get<std::size_t>(), e.at("cols").get<std::size_t>()}};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kCheckpointMismatch, path.string() + ": " + e.what());
  }
  require(table.size() == params.size(), ErrorKind::kCheckpointMismatch,
          path.string() + ": parameter count differs from the model");
  const auto data = path.parent_path() / j.at("data").get<std::string>();
  std::ifstream bin(data, std::ios::binary);
  require(static_cast<bool>(bin), ErrorKind::kMissingBlob, "cannot open " + data.string());
  for (Parameter<float>* p : params) {
    auto it = table.find(p->name);
    require(it != table.end(), ErrorKind::kCheckpointMismatch,
            path.string() + ": no stored value for parameter " + p->name);
    const auto [offset, shape] = it->second;
    require(shape.first == p->value.rows() && shape.second == p->value.cols(), ErrorKind::kCheckpointMismatch,
            path.string() + ": shape mismatch for parameter " + p->name);
    bin.seekg(static_cast<std::streamoff>(offset));
    p->value = graphcore::read_blob(bin, data.string() + ":" + p->name);
  }
  return meta;
}

}  // namespace prism::numerics
