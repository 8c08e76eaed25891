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

#include "attriblab/zoo.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "attriblab/error.hpp"
#include "attriblab/rng.hpp"

namespace attriblab {

namespace {

constexpr std::pair<ArchId, std::string_view> kArchNames[] = {
    {ArchId::PlainCNN, "PlainCNN"},
    {ArchId::MiniRes, "MiniRes"},
    {ArchId::MiniInception, "MiniInception"},
    {ArchId::MiniInceptionRes, "MiniInceptionRes"},
    {ArchId::MiniDense, "MiniDense"},
};

constexpr double kBiasRange = 0.05;

std::size_t conv_relu(GraphBuilder& b, std::size_t from, std::size_t channels, std::size_t kernel,
                      std::size_t stride, const std::string& name) {
  const auto c = b.conv2d(from, channels, kernel, stride, std::nullopt, name);
  return b.relu(c, name + ".relu");
}

std::size_t head(GraphBuilder& b, std::size_t from, std::size_t classes) {
  const auto pooled = b.global_avg_pool(from, "gap");
  return b.dense(pooled, classes, "head");
}

ModelGraph plain_cnn(const ArchSpec& s, const std::vector<std::size_t>& w) {
  GraphBuilder b({1, s.input_side, s.input_side});
  auto x = conv_relu(b, GraphBuilder::input(), w[0], 3, 1, "conv1");
  x = conv_relu(b, x, w[1], 3, 2, "conv2");
  x = conv_relu(b, x, w[2], 3, 2, "conv3");
  head(b, x, s.num_classes);
  return std::move(b).finish();
}

std::size_t residual_block(GraphBuilder& b, std::size_t from, std::size_t channels, const std::string& name) {
  const auto h = conv_relu(b, from, channels, 3, 1, name + ".conv1");
  const auto branch = b.conv2d(h, channels, 3, 1, std::nullopt, name + ".conv2");
  const auto sum = b.add({from, branch}, name + ".add");
  return b.relu(sum, name + ".out");
}

ModelGraph mini_res(const ArchSpec& s, const std::vector<std::size_t>& w) {
  GraphBuilder b({1, s.input_side, s.input_side});
  auto x = conv_relu(b, GraphBuilder::input(), w[0], 3, 2, "stem");
  x = residual_block(b, x, w[0], "res1");
  x = conv_relu(b, x, w[1], 3, 2, "down");
  x = residual_block(b, x, w[1], "res2");
  head(b, x, s.num_classes);
  return std::move(b).finish();
}

std::vector<std::size_t> inception_branches(GraphBuilder& b, std::size_t from,
                                            const std::vector<std::size_t>& w, const std::string& name) {
  return {conv_relu(b, from, w[1], 1, 1, name + ".b1x1"), conv_relu(b, from, w[2], 3, 1, name + ".b3x3"),
          conv_relu(b, from, w[3], 5, 1, name + ".b5x5")};
}

ModelGraph mini_inception(const ArchSpec& s, const std::vector<std::size_t>& w) {
  GraphBuilder b({1, s.input_side, s.input_side});
  auto x = conv_relu(b, GraphBuilder::input(), w[0], 3, 2, "stem");
  x = b.concat(inception_branches(b, x, w, "inc1"), "inc1.concat");
  x = b.concat(inception_branches(b, x, w, "inc2"), "inc2.concat");
  head(b, x, s.num_classes);
  return std::move(b).finish();
}

ModelGraph mini_inception_res(const ArchSpec& s, const std::vector<std::size_t>& w) {
  if (w[1] + w[2] + w[3] != w[0]) {
    throw Error("shape_mismatch", "MiniInceptionRes branch widths sum to " + std::to_string(w[1] + w[2] + w[3]) +
                                      " but the residual add needs " + std::to_string(w[0]));
  }
  GraphBuilder b({1, s.input_side, s.input_side});
  auto x = conv_relu(b, GraphBuilder::input(), w[0], 3, 2, "stem");
  for (const std::string name : {"ir1", "ir2"}) {
    const auto mixed = b.concat(inception_branches(b, x, w, name), name + ".concat");
    const auto sum = b.add({x, mixed}, name + ".add");
    x = b.relu(sum, name + ".out");
  }
  head(b, x, s.num_classes);
  return std::move(b).finish();
}

ModelGraph mini_dense(const ArchSpec& s, const std::vector<std::size_t>& w) {
  constexpr int kBlocks = 3;
  GraphBuilder b({1, s.input_side, s.input_side});
  std::vector<std::size_t> features{conv_relu(b, GraphBuilder::input(), w[0], 3, 2, "stem")};
  for (int k = 1; k <= kBlocks; ++k) {
    const std::string name = "dense" + std::to_string(k);
    const auto in = features.size() == 1 ? features.front() : b.concat(features, name + ".in");
    features.push_back(conv_relu(b, in, w[1], 3, 1, name));
  }
  const auto all = b.concat(features, "dense.out");
  head(b, all, s.num_classes);
  return std::move(b).finish();
}

}  // namespace

std::string_view arch_name(ArchId id) {
  for (const auto& [a, name] : kArchNames) {
    if (a == id) return name;
  }
  return "?";
}

std::optional<ArchId> parse_arch(std::string_view name) {
  for (const auto& [a, n] : kArchNames) {
    if (n == name) return a;
  }
  return std::nullopt;
}

std::vector<std::size_t> default_widths(ArchId arch) {
  switch (arch) {
    case ArchId::PlainCNN: return {8, 16, 16};
    case ArchId::MiniRes: return {8, 16};
    case ArchId::MiniInception: return {8, 4, 8, 4};
    case ArchId::MiniInceptionRes: return {12, 4, 4, 4};
    case ArchId::MiniDense: return {8, 4};
  }
  return {};
}

void initialize_parameters(ModelGraph& graph, std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t id = 0; id < graph.size(); ++id) {
    const LayerNode& node = graph.node(id);
    if (node.params.empty()) continue;
    Tensor& weight = graph.parameter(id, 0);
    const std::size_t fan_in = weight.size() / weight.extent(0);
    const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (auto& v : weight.values()) v = std_dev * rng.normal();
    for (auto& v : graph.parameter(id, 1).values()) v = rng.uniform(-kBiasRange, kBiasRange);
  }
}

ModelGraph build(const ArchSpec& spec, std::uint64_t seed) {
  const auto widths = spec.widths.empty() ? default_widths(spec.arch) : spec.widths;
  if (widths.size() != default_widths(spec.arch).size()) {
    throw Error("invalid_config", std::string(arch_name(spec.arch)) + " expects " +
                                      std::to_string(default_widths(spec.arch).size()) + " channel widths");
  }
  for (auto c : widths) {
    if (c == 0) throw Error("invalid_config", "channel widths must be positive");
  }
  if (spec.num_classes == 0) throw Error("invalid_config", "num_classes must be positive");
  if (spec.input_side < 8) throw Error("invalid_config", "input_side must be at least 8");

  ModelGraph graph;
  switch (spec.arch) {
    case ArchId::PlainCNN: graph = plain_cnn(spec, widths); break;
    case ArchId::MiniRes: graph = mini_res(spec, widths); break;
    case ArchId::MiniInception: graph = mini_inception(spec, widths); break;
    case ArchId::MiniInceptionRes: graph = mini_inception_res(spec, widths); break;
    case ArchId::MiniDense: graph = mini_dense(spec, widths); break;
  }
  initialize_parameters(graph, seed);
  return graph;
}

}  // namespace attriblab
