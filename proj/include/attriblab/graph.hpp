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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "attriblab/tensor.hpp"

namespace attriblab {

enum class LayerKind { Input, Conv2d, Dense, ReLU, MaxPool2x2, GlobalAvgPool, Add, Concat, Flatten };

std::string_view layer_kind_name(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// One node of a model DAG. Inputs always refer to earlier nodes, so node order
/// is a topological order.
///
/// Conv2d params: weight [out, in, k, k], bias [out]. Dense params: weight [out, in],
/// bias [out]. Every other kind is parameter-free. Image tensors are C x H x W; Dense
/// consumes rank-1 tensors.
struct LayerNode {
  LayerKind kind = LayerKind::Input;
  std::string name;
  std::vector<std::size_t> inputs;
  std::vector<NamedTensor> params;
  std::size_t stride = 1;   // Conv2d only
  std::size_t padding = 0;  // Conv2d only
  Shape output_shape;

  std::size_t kernel() const { return params.at(0).value.extent(2); }
};

/// Immutable-after-build layer graph. Node 0 is the input; the last node is the
/// single output (pre-sigmoid logits).
class ModelGraph {
 public:
  ModelGraph() = default;
  explicit ModelGraph(std::vector<LayerNode> nodes);

  const std::vector<LayerNode>& nodes() const noexcept { return nodes_; }
  const LayerNode& node(std::size_t id) const { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }

  const Shape& input_shape() const { return nodes_.front().output_shape; }
  std::size_t output_id() const { return nodes_.size() - 1; }
  std::size_t num_outputs() const { return shape_size(nodes_.back().output_shape); }

  std::optional<std::size_t> find(std::string_view name) const;

  /// Mutable parameter access for optimizers and initializers. Shapes must not change.
  Tensor& parameter(std::size_t node_id, std::size_t param_index);

  /// Re-infers every output shape and checks parameter shapes and topology.
  /// Throws Error("invalid_graph" | "shape_mismatch") naming the offending node.
  void validate();

 private:
  std::vector<LayerNode> nodes_;
};

/// Exact number of scalar parameters.
std::size_t count_parameters(const ModelGraph& graph);

/// Incremental graph construction with shape inference at every step.
class GraphBuilder {
 public:
  explicit GraphBuilder(Shape input_shape);

  std::size_t conv2d(std::size_t from, std::size_t out_channels, std::size_t kernel,
                     std::size_t stride = 1, std::optional<std::size_t> padding = std::nullopt,
                     std::string name = {});
  std::size_t dense(std::size_t from, std::size_t out_features, std::string name = {});
  std::size_t relu(std::size_t from, std::string name = {});
  std::size_t max_pool(std::size_t from, std::string name = {});
  std::size_t global_avg_pool(std::size_t from, std::string name = {});
  std::size_t flatten(std::size_t from, std::string name = {});
  std::size_t add(std::vector<std::size_t> from, std::string name = {});
  std::size_t concat(std::vector<std::size_t> from, std::string name = {});

  const Shape& shape_of(std::size_t id) const { return nodes_.at(id).output_shape; }
  static constexpr std::size_t input() { return 0; }

  /// Validates and returns the graph; the most recently added node is the output.
  ModelGraph finish() &&;

 private:
  std::size_t push(LayerNode node);

  std::vector<LayerNode> nodes_;
};

}  // namespace attriblab
