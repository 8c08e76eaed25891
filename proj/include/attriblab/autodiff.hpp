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
#include <vector>

#include "attriblab/graph.hpp"
#include "attriblab/tensor.hpp"

namespace attriblab {

/// Output of every node for one forward pass. Private to the caller, so one graph
/// can serve any number of concurrent passes.
struct ActivationRecord {
  std::vector<Tensor> outputs;

  const Tensor& input() const { return outputs.front(); }
  const Tensor& logits() const { return outputs.back(); }
};

/// Runs the graph on `x`. Throws Error("shape_mismatch") if `x` does not match the
/// graph's input shape.
ActivationRecord forward(const ModelGraph& graph, const Tensor& x);

/// Convenience: forward pass returning only the logits.
Tensor predict_logits(const ModelGraph& graph, const Tensor& x);

enum class ReluRule {
  Vanilla,  // exact chain rule; subgradient 0 at a zero pre-activation
  Guided,   // additionally drops negative upstream signals at each ReLU
};

struct BackwardMode {
  ReluRule relu_rule = ReluRule::Vanilla;
};

/// d logit[class_index] / d input.
Tensor backward(const ModelGraph& graph, const ActivationRecord& record, std::size_t class_index,
                BackwardMode mode = {});

/// Input gradient for an arbitrary seed on the output (vector-Jacobian product).
Tensor backward(const ModelGraph& graph, const ActivationRecord& record, const Tensor& output_grad,
                BackwardMode mode = {});

struct Gradients {
  Tensor input;
  /// params[node][k] matches graph.node(node).params[k].
  std::vector<std::vector<Tensor>> params;
};

/// Vanilla reverse pass that also accumulates parameter gradients.
Gradients backward_with_parameters(const ModelGraph& graph, const ActivationRecord& record,
                                   const Tensor& output_grad);

/// Actual and reference activations side by side, for difference-from-reference
/// propagation.
struct PairedRecord {
  ActivationRecord actual;
  ActivationRecord reference;

  /// actual - reference at `node`.
  Tensor delta(std::size_t node) const;
};

PairedRecord forward_pair(const ModelGraph& graph, const Tensor& x, const Tensor& x_ref);

/// Below this |delta-in| the rescale rule falls back to the local gradient.
inline constexpr double kRescaleEpsilon = 1e-9;

/// Multipliers m = d(delta logit[class_index]) / d(delta input) using the rescale
/// rule (delta-out / delta-in) at every ReLU and the chain rule at linear nodes.
/// Max pooling routes multipliers through the actual input's argmax.
Tensor rescale_multipliers(const ModelGraph& graph, const PairedRecord& paired,
                           std::size_t class_index);

}  // namespace attriblab
