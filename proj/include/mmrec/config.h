// Copyright 2026 The mmrec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmrec/dataset.h"
#include "mmrec/encoder.h"
#include "mmrec/losses.h"
#include "mmrec/trainer.h"

namespace mmrec {

/// Invalid configuration. `key_path()` is the dotted path of the offending
/// key, e.g. "train.learning_rate".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key_path, const std::string& what);
  const std::string& key_path() const { return key_path_; }

 private:
  std::string key_path_;
};

struct DatasetSource {
  enum class Kind { kAdjacency, kSynthetic };
  Kind kind = Kind::kSynthetic;
  std::filesystem::path train;
  std::filesystem::path test;
  std::size_t num_users = 200;
  std::size_t num_items = 100;
  std::size_t num_clusters = 2;
  double noise = 0.0;
  std::uint64_t seed = 7;
};

struct RunConfig {
  std::string name = "run";
  std::uint64_t seed = 0;
  DatasetSource dataset;
  EncoderConfig encoder;
  LossSpec loss = Ccl{};
  TrainConfig train;
  std::size_t eval_k = 20;
  std::filesystem::path output_dir = "out";
  // Sweep axes: dotted key path -> list of values. Absent for single runs.
  std::optional<nlohmann::json> grid;
};

/// Parses and validates a config document, filling defaults. TrainConfig's
/// seed is taken from the top-level "seed".
RunConfig parse_config(const nlohmann::json& doc);

/// Fully-resolved document; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& cfg);

RunConfig load_config(const std::filesystem::path& path);

nlohmann::json loss_to_json(const LossSpec& spec);
LossSpec loss_from_json(const nlohmann::json& doc,
                        const std::string& key_path = "loss");

struct GridCell {
  std::string label;
  RunConfig config;
};

/// Cartesian product of the grid axes applied to the resolved base config,
/// axes in key order, last axis varying fastest.
std::vector<GridCell> expand_grid(const RunConfig& base);

InteractionDataset load_dataset(const DatasetSource& source);

std::string_view encoder_kind_name(EncoderKind kind);

}  // namespace mmrec
