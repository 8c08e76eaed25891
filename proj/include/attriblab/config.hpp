/*
 * Copyright 2026 The attriblab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "attriblab/attribution.hpp"
#include "attriblab/preprocess.hpp"
#include "attriblab/training.hpp"
#include "attriblab/zoo.hpp"

namespace attriblab {

struct PathsConfig {
  std::string manifest;
  std::string hierarchy;  // empty selects the built-in pneumonia hierarchy
  std::string output_dir = "out";
};

/// Everything a CLI run needs. `arch.num_classes` is filled from the label space at run time.
struct RunConfig {
  PreprocessConfig preprocess;
  ArchSpec arch;
  TrainConfig train;
  OcclusionConfig occlusion;
  std::vector<Method> methods{std::begin(kAllMethods), std::end(kAllMethods)};
  std::size_t ig_steps = 64;
  std::size_t folds = 5;
  double train_fraction = 0.6;
  std::uint64_t seed = 0;
  PathsConfig paths;

  /// Throws Error("invalid_config").
  void validate() const;
};

/// Reads the JSON run config. Unknown keys are rejected with Error("invalid_config").
/// Relative paths are resolved against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const PreprocessConfig& cfg);
nlohmann::json to_json(const ArchSpec& spec);
nlohmann::json to_json(const TrainConfig& cfg);
nlohmann::json to_json(const RunConfig& cfg);

PreprocessConfig preprocess_from_json(const nlohmann::json& doc);

/// "all" expands to every method; otherwise comma-separated method names.
std::vector<Method> parse_method_list(const std::string& text);

}  // namespace attriblab
