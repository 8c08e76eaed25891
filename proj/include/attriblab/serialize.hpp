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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "attriblab/graph.hpp"

namespace attriblab {

inline constexpr int kModelFormatVersion = 1;

/// Everything needed to reuse a trained model: topology, parameters, the label list
/// (with each label's parent, "" for roots) and free-form metadata such as the
/// preprocessing settings it was trained with.
struct ModelFile {
  ModelGraph graph;
  std::vector<std::string> labels;
  std::vector<std::string> parents;
  nlohmann::json metadata = nlohmann::json::object();
};

/// JSON text container. Parameter values are stored as hex of their IEEE-754 bit
/// patterns, so decode(encode(m)) reproduces every parameter bit for bit.
std::string encode_model(const ModelFile& model);
ModelFile decode_model(std::string_view text);

void save_model(const ModelFile& model, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

std::string encode_tensor_hex(const Tensor& t);
Tensor decode_tensor_hex(const Shape& shape, std::string_view hex);

}  // namespace attriblab
