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

#include "attriblab/graph.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "attriblab/error.hpp"

namespace attriblab {

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 9> kKindNames{{
    {LayerKind::Input, "Input"},
    {LayerKind::Conv2d, "Conv2d"},
    {LayerKind::Dense, "Dense"},
    {LayerKind::ReLU, "ReLU"},
    {LayerKind::MaxPool2x2, "MaxPool2x2"},
    {LayerKind::GlobalAvgPool, "GlobalAvgPool"},
    {LayerKind::Add, "Add"},
    {LayerKind::Concat, "Concat"},
    {LayerKind::Flatten, "Flatten"},
}};

std::string describe(const LayerNode& node, std::size_t id) {
  return "node " + std::to_string(id) + " '" + node.name + "' (" +
         std::string(layer_kind_name(node.kind)) + ")";
}

[[noreturn]] void fail(const char* code, const LayerNode& node, std::size_t id,
                       const std::string& what) {
  throw Error(code, describe(node, id) + ": " + what);
}

void expect_params(const LayerNode& node, std::size_t id, const Shape& weight, const Shape& bias) {
  if (node.params.size() != 2) fail("invalid_graph", node, id, "expects weight and bias");
  if (node.params[0].value.shape() != weight) {
    fail("shape_mismatch", node, id,
         "weight shape " + shape_string(node.params[0].value.shape()) + ", expected " +
             shape_string(weight));
  }
  if (node.params[1].value.shape() != bias) {
    fail("shape_mismatch", node, id,
         "bias shape " + shape_string(node.params[1].value.shape()) + ", expected " +
             shape_string(bias));
  }
}

// Output shape of `node` given the (already inferred) shapes of earlier nodes.
Shape infer_shape(const LayerNode& node, std::size_t id, const std::vector<LayerNode>& nodes) {
  for (auto in : node.inputs) {
    if (in >= id) fail("invalid_graph", node, id, "input refers to a later node");
  }
  auto input_shape = [&](std::size_t i) -> const Shape& { return nodes[node.inputs[i]].output_shape; };
  auto expect_inputs = [&](std::size_t n) {
    if (node.inputs.size() != n) {
      fail("invalid_graph", node, id, "expects " + std::to_string(n) + " input(s)");
    }
  };
  auto expect_rank = [&](const Shape& s, std::size_t rank) {
    if (s.size() != rank) {
      fail("shape_mismatch", node, id,
           "expects rank " + std::to_string(rank) + " input, got " + shape_string(s));
    }
  };

  switch (node.kind) {
    case LayerKind::Input:
      if (id != 0 || !node.inputs.empty()) fail("invalid_graph", node, id, "input must be node 0");
      if (node.output_shape.empty()) fail("invalid_graph", node, id, "input shape missing");
      return node.output_shape;
    case LayerKind::Conv2d: {
      expect_inputs(1);
      const Shape& in = input_shape(0);
      expect_rank(in, 3);
      if (node.params.empty() || node.params[0].value.rank() != 4) {
        fail("invalid_graph", node, id, "missing 4-d weight");
      }
      const auto& w = node.params[0].value.shape();
      const std::size_t k = w[2];
      if (w[3] != k) fail("invalid_graph", node, id, "kernel must be square");
      if (node.stride != 1 && node.stride != 2) fail("invalid_graph", node, id, "stride must be 1 or 2");
      expect_params(node, id, {w[0], in[0], k, k}, {w[0]});
      if (in[1] + 2 * node.padding < k || in[2] + 2 * node.padding < k) {
        fail("shape_mismatch", node, id, "kernel larger than padded input " + shape_string(in));
      }
      return {w[0], (in[1] + 2 * node.padding - k) / node.stride + 1,
              (in[2] + 2 * node.padding - k) / node.stride + 1};
    }
    case LayerKind::Dense: {
      expect_inputs(1);
      const Shape& in = input_shape(0);
      expect_rank(in, 1);
      if (node.params.empty() || node.params[0].value.rank() != 2) {
        fail("invalid_graph", node, id, "missing 2-d weight");
      }
      const std::size_t out = node.params[0].value.extent(0);
      expect_params(node, id, {out, in[0]}, {out});
      return {out};
    }
    case LayerKind::ReLU:
      expect_inputs(1);
      return input_shape(0);
    case LayerKind::MaxPool2x2: {
      expect_inputs(1);
      const Shape& in = input_shape(0);
      expect_rank(in, 3);
      if (in[1] < 2 || in[2] < 2) fail("shape_mismatch", node, id, "spatial extent below 2");
      return {in[0], in[1] / 2, in[2] / 2};
    }
    case LayerKind::GlobalAvgPool: {
      expect_inputs(1);
      const Shape& in = input_shape(0);
      expect_rank(in, 3);
      return {in[0]};
    }
    case LayerKind::Flatten:
      expect_inputs(1);
      return {shape_size(input_shape(0))};
    case LayerKind::Add: {
      if (node.inputs.size() < 2) fail("invalid_graph", node, id, "expects at least 2 inputs");
      for (std::size_t i = 1; i < node.inputs.size(); ++i) {
        if (input_shape(i) != input_shape(0)) {
          fail("shape_mismatch", node, id,
               "summands differ: " + shape_string(input_shape(0)) + " vs " +
                   shape_string(input_shape(i)));
        }
      }
      return input_shape(0);
    }
    case LayerKind::Concat: {
      if (node.inputs.empty()) fail("invalid_graph", node, id, "expects at least 1 input");
      Shape out = input_shape(0);
      for (std::size_t i = 1; i < node.inputs.size(); ++i) {
        const Shape& s = input_shape(i);
        if (s.size() != out.size() || !std::equal(s.begin() + 1, s.end(), out.begin() + 1)) {
          fail("shape_mismatch", node, id,
               "inputs disagree off the channel axis: " + shape_string(out) + " vs " +
                   shape_string(s));
        }
        out[0] += s[0];
      }
      return out;
    }
  }
  fail("invalid_graph", node, id, "unknown layer kind");
}

}  // namespace

std::string_view layer_kind_name(LayerKind kind) {
  for (const auto& [k, name] : kKindNames) {
    if (k == kind) return name;
  }
  return "?";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  for (const auto& [k, n] : kKindNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

ModelGraph::ModelGraph(std::vector<LayerNode> nodes) : nodes_(std::move(nodes)) { validate(); }

std::optional<std::size_t> ModelGraph::find(std::string_view name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return i;
  }
  return std::nullopt;
}

Tensor& ModelGraph::parameter(std::size_t node_id, std::size_t param_index) {
  return nodes_.at(node_id).params.at(param_index).value;
}

void ModelGraph::validate() {
  if (nodes_.empty()) throw Error("invalid_graph", "graph has no nodes");
  std::vector<bool> consumed(nodes_.size(), false);
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    LayerNode& node = nodes_[id];
    node.output_shape = infer_shape(node, id, nodes_);
    for (auto in : node.inputs) consumed[in] = true;
  }
  for (std::size_t id = 0; id + 1 < nodes_.size(); ++id) {
    if (!consumed[id]) {
      fail("invalid_graph", nodes_[id], id, "output is never consumed (graph must have one output)");
    }
  }
}

std::size_t count_parameters(const ModelGraph& graph) {
  std::size_t total = 0;
  for (const auto& node : graph.nodes()) {
    for (const auto& p : node.params) total += p.value.size();
  }
  return total;
}

GraphBuilder::GraphBuilder(Shape input_shape) {
  LayerNode in;
  in.kind = LayerKind::Input;
  in.name = "input";
  in.output_shape = std::move(input_shape);
  for (auto e : in.output_shape) {
    if (e == 0) throw Error("invalid_shape", "zero extent in input shape");
  }
  nodes_.push_back(std::move(in));
}

std::size_t GraphBuilder::push(LayerNode node) {
  const std::size_t id = nodes_.size();
  if (node.name.empty()) {
    node.name = std::string(layer_kind_name(node.kind)) + "_" + std::to_string(id);
  }
  node.output_shape = infer_shape(node, id, nodes_);
  nodes_.push_back(std::move(node));
  return id;
}

std::size_t GraphBuilder::conv2d(std::size_t from, std::size_t out_channels, std::size_t kernel,
                                 std::size_t stride, std::optional<std::size_t> padding,
                                 std::string name) {
  const Shape& in = shape_of(from);
  if (in.size() != 3) throw Error("shape_mismatch", "conv2d expects a C x H x W input");
  LayerNode node;
  node.kind = LayerKind::Conv2d;
  node.name = std::move(name);
  node.inputs = {from};
  node.stride = stride;
  node.padding = padding.value_or(kernel / 2);
  node.params = {{"weight", Tensor({out_channels, in[0], kernel, kernel})},
                 {"bias", Tensor({out_channels})}};
  return push(std::move(node));
}

std::size_t GraphBuilder::dense(std::size_t from, std::size_t out_features, std::string name) {
  const Shape& in = shape_of(from);
  if (in.size() != 1) throw Error("shape_mismatch", "dense expects a rank-1 input");
  LayerNode node;
  node.kind = LayerKind::Dense;
  node.name = std::move(name);
  node.inputs = {from};
  node.params = {{"weight", Tensor({out_features, in[0]})}, {"bias", Tensor({out_features})}};
  return push(std::move(node));
}

namespace {
LayerNode simple(LayerKind kind, std::vector<std::size_t> inputs, std::string name) {
  LayerNode node;
  node.kind = kind;
  node.name = std::move(name);
  node.inputs = std::move(inputs);
  return node;
}
}  // namespace

std::size_t GraphBuilder::relu(std::size_t from, std::string name) {
  return push(simple(LayerKind::ReLU, {from}, std::move(name)));
}
std::size_t GraphBuilder::max_pool(std::size_t from, std::string name) {
  return push(simple(LayerKind::MaxPool2x2, {from}, std::move(name)));
}
std::size_t GraphBuilder::global_avg_pool(std::size_t from, std::string name) {
  return push(simple(LayerKind::GlobalAvgPool, {from}, std::move(name)));
}
std::size_t GraphBuilder::flatten(std::size_t from, std::string name) {
  return push(simple(LayerKind::Flatten, {from}, std::move(name)));
}
std::size_t GraphBuilder::add(std::vector<std::size_t> from, std::string name) {
  return push(simple(LayerKind::Add, std::move(from), std::move(name)));
}
std::size_t GraphBuilder::concat(std::vector<std::size_t> from, std::string name) {
  return push(simple(LayerKind::Concat, std::move(from), std::move(name)));
}

ModelGraph GraphBuilder::finish() && { return ModelGraph(std::move(nodes_)); }

}  // namespace attriblab
