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

#include "attriblab/serialize.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>

#include "attriblab/error.hpp"

namespace attriblab {

using nlohmann::json;

namespace {

constexpr std::string_view kFormatName = "attriblab-model";
constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

std::string encode_tensor_hex(const Tensor& t) {
  std::string out;
  out.reserve(t.size() * 16);
  for (double v : t.values()) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int shift = 60; shift >= 0; shift -= 4) out.push_back(kHexDigits[(bits >> shift) & 0xf]);
  }
  return out;
}

Tensor decode_tensor_hex(const Shape& shape, std::string_view hex) {
  const std::size_t n = shape_size(shape);
  if (hex.size() != n * 16) {
    throw Error("bad_model_file", "parameter payload length does not match shape " + shape_string(shape));
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t bits = 0;
    for (std::size_t j = 0; j < 16; ++j) {
      const int d = hex_value(hex[i * 16 + j]);
      if (d < 0) throw Error("bad_model_file", "invalid hex digit in parameter payload");
      bits = (bits << 4) | static_cast<std::uint64_t>(d);
    }
    data[i] = std::bit_cast<double>(bits);
  }
  return Tensor(shape, std::move(data));
}

std::string encode_model(const ModelFile& model) {
  json nodes = json::array();
  for (const auto& node : model.graph.nodes()) {
    json n = {{"kind", layer_kind_name(node.kind)}, {"name", node.name}, {"inputs", node.inputs}};
    if (node.kind == LayerKind::Input) n["shape"] = node.output_shape;
    if (node.kind == LayerKind::Conv2d) {
      n["stride"] = node.stride;
      n["padding"] = node.padding;
    }
    if (!node.params.empty()) {
      json params = json::array();
      for (const auto& p : node.params) {
        params.push_back({{"name", p.name}, {"shape", p.value.shape()}, {"data", encode_tensor_hex(p.value)}});
      }
      n["params"] = std::move(params);
    }
    nodes.push_back(std::move(n));
  }
  json doc = {{"format", kFormatName},   {"version", kModelFormatVersion},
              {"labels", model.labels},  {"parents", model.parents},
              {"metadata", model.metadata}, {"nodes", std::move(nodes)}};
  return doc.dump(1) + "\n";
}

ModelFile decode_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error("bad_model_file", std::string("not a JSON document: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormatName) {
      throw Error("bad_model_file", "unrecognized container format");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error("bad_model_file", "unsupported model format version " + std::to_string(version));
    }
    std::vector<LayerNode> nodes;
    for (const auto& n : doc.at("nodes")) {
      LayerNode node;
      const auto kind_name = n.at("kind").get<std::string>();
      const auto kind = parse_layer_kind(kind_name);
      if (!kind) throw Error("bad_model_file", "unknown layer kind '" + kind_name + "'");
      node.kind = *kind;
      node.name = n.at("name").get<std::string>();
      node.inputs = n.at("inputs").get<std::vector<std::size_t>>();
      if (node.kind == LayerKind::Input) node.output_shape = n.at("shape").get<Shape>();
      if (node.kind == LayerKind::Conv2d) {
        node.stride = n.at("stride").get<std::size_t>();
        node.padding = n.at("padding").get<std::size_t>();
      }
      if (n.contains("params")) {
        for (const auto& p : n.at("params")) {
          const auto shape = p.at("shape").get<Shape>();
          node.params.push_back(
              {p.at("name").get<std::string>(), decode_tensor_hex(shape, p.at("data").get<std::string>())});
        }
      }
      nodes.push_back(std::move(node));
    }
    ModelFile model;
    model.graph = ModelGraph(std::move(nodes));
    model.labels = doc.at("labels").get<std::vector<std::string>>();
    model.parents = doc.at("parents").get<std::vector<std::string>>();
    model.metadata = doc.at("metadata");
    if (model.parents.size() != model.labels.size()) {
      throw Error("bad_model_file", "labels and parents differ in length");
    }
    if (!model.labels.empty() && model.labels.size() != model.graph.num_outputs()) {
      throw Error("bad_model_file", "label count does not match model outputs");
    }
    return model;
  } catch (const json::exception& e) {
    throw Error("bad_model_file", std::string("malformed model container: ") + e.what());
  }
}

void save_model(const ModelFile& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << encode_model(model);
  if (!out) throw Error("io_error", "failed writing " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return decode_model(buf.str());
}

}  // namespace attriblab
