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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "attriblab/graph.hpp"
#include "attriblab/tensor.hpp"

namespace attriblab {

enum class Method { Occlusion, Saliency, InputXGradient, GuidedBackprop, IntegratedGradients, DeepLift };

inline constexpr Method kAllMethods[] = {Method::Occlusion,      Method::Saliency,
                                         Method::InputXGradient, Method::GuidedBackprop,
                                         Method::IntegratedGradients, Method::DeepLift};

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);

/// Per-input-element relevance for one (input, class) pair.
struct AttributionMap {
  Tensor values;  // same shape as the input
  Method method = Method::Saliency;
  std::size_t class_index = 0;
  nlohmann::json metadata = nlohmann::json::object();
};

struct OcclusionConfig {
  std::size_t window = 16;
  std::size_t stride = 8;
  double fill_value = 0.5;
  std::size_t threads = 1;  // 0 = hardware concurrency; results do not depend on it

  /// Throws Error("invalid_config") unless 1 <= stride <= window <= min(height, width).
  void validate(std::size_t height, std::size_t width) const;
};

/// Window start offsets along one axis: 0, stride, ... up to the first window that
/// reaches the border, which is clipped to it.
std::vector<std::size_t> occlusion_starts(std::size_t extent, std::size_t window, std::size_t stride);

/// Probability drop sigmoid(F_c(x)) - sigmoid(F_c(x_occluded)) per window, averaged
/// over the windows covering each pixel. The window covers every channel.
AttributionMap occlusion(const ModelGraph& model, const Tensor& x, std::size_t class_index,
                         const OcclusionConfig& cfg = {});

/// Vanilla gradient of the class logit.
AttributionMap saliency(const ModelGraph& model, const Tensor& x, std::size_t class_index);

/// x (elementwise) saliency.
AttributionMap input_x_gradient(const ModelGraph& model, const Tensor& x, std::size_t class_index);

/// Gradient with negative signals dropped at every ReLU.
AttributionMap guided_backprop(const ModelGraph& model, const Tensor& x, std::size_t class_index);

/// (x - x') * mean_k grad F(x' + (k - 1/2)/steps * (x - x')), k = 1..steps.
/// Metadata records delta = F(x) - F(x') and the completeness residual sum(map) - delta.
AttributionMap integrated_gradients(const ModelGraph& model, const Tensor& x, const Tensor& baseline,
                                    std::size_t class_index, std::size_t steps = 64);

/// Rescale-rule multipliers times (x - x'). Metadata as for integrated gradients.
AttributionMap deeplift_rescale(const ModelGraph& model, const Tensor& x, const Tensor& baseline,
                                std::size_t class_index);

struct AttributionSettings {
  OcclusionConfig occlusion;
  std::size_t ig_steps = 64;
  std::optional<Tensor> baseline;  // all zeros when unset
};

/// One map per (label, method) pair, ordered label-major in the given orders.
std::vector<AttributionMap> attribute_all(const ModelGraph& model, const Tensor& x,
                                          const std::vector<std::size_t>& labels,
                                          const std::vector<Method>& methods,
                                          const AttributionSettings& settings = {});

/// Rows of comma-separated values (one row per image row; channels stacked).
std::string map_to_csv(const AttributionMap& map);

struct Heatmap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
  bool all_zero = false;  // exported as uniform mid-grey
};

/// Symmetric max-abs scaling: pixel = round(127.5 + 127.5 * v / max|v|).
Heatmap to_heatmap(const Tensor& values);

}  // namespace attriblab
