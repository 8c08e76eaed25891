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

#include "attriblab/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

#include "attriblab/autodiff.hpp"
#include "attriblab/error.hpp"

namespace attriblab {

using nlohmann::json;

namespace {

constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::Occlusion, "occlusion"},
    {Method::Saliency, "saliency"},
    {Method::InputXGradient, "input_x_gradient"},
    {Method::GuidedBackprop, "guided_backprop"},
    {Method::IntegratedGradients, "integrated_gradients"},
    {Method::DeepLift, "deeplift"},
};

double probability(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

double class_logit(const ModelGraph& model, const Tensor& x, std::size_t class_index) {
  const Tensor z = predict_logits(model, x);
  if (class_index >= z.size()) {
    throw Error("class_out_of_range", "class index " + std::to_string(class_index) + " out of range for " +
                                          std::to_string(z.size()) + " outputs");
  }
  return z[class_index];
}

void require_spatial(const Tensor& x) {
  if (x.rank() != 3) throw Error("shape_mismatch", "attribution expects a C x H x W input, got " + shape_string(x.shape()));
}

AttributionMap gradient_map(const ModelGraph& model, const Tensor& x, std::size_t class_index, Method method,
                            ReluRule rule) {
  const auto record = forward(model, x);
  AttributionMap map{backward(model, record, class_index, {rule}), method, class_index, json::object()};
  map.metadata["target"] = "logit";
  return map;
}

void record_completeness(AttributionMap& map, double f_x, double f_ref) {
  const double delta = f_x - f_ref;
  map.metadata["target"] = "logit";
  map.metadata["delta"] = delta;
  map.metadata["completeness_residual"] = sum(map.values) - delta;
}

Tensor zero_like(const Tensor& x) { return Tensor(x.shape()); }

}  // namespace

std::string_view method_name(Method m) {
  for (const auto& [k, name] : kMethodNames) {
    if (k == m) return name;
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (const auto& [k, n] : kMethodNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

void OcclusionConfig::validate(std::size_t height, std::size_t width) const {
  if (stride < 1 || stride > window) throw Error("invalid_config", "occlusion stride must satisfy 1 <= stride <= window");
  if (window > std::min(height, width)) {
    throw Error("invalid_config", "occlusion window " + std::to_string(window) + " larger than image " +
                                      std::to_string(height) + "x" + std::to_string(width));
  }
}

std::vector<std::size_t> occlusion_starts(std::size_t extent, std::size_t window, std::size_t stride) {
  std::vector<std::size_t> starts;
  for (std::size_t p = 0;; p += stride) {
    starts.push_back(p);
    if (p + window >= extent) break;
  }
  return starts;
}

AttributionMap occlusion(const ModelGraph& model, const Tensor& x, std::size_t class_index,
                         const OcclusionConfig& cfg) {
  require_spatial(x);
  const std::size_t channels = x.extent(0), h = x.extent(1), w = x.extent(2);
  cfg.validate(h, w);
  const double p_original = probability(class_logit(model, x, class_index));

  struct Window {
    std::size_t y0, y1, x0, x1;
  };
  std::vector<Window> windows;
  for (auto ys : occlusion_starts(h, cfg.window, cfg.stride)) {
    for (auto xs : occlusion_starts(w, cfg.window, cfg.stride)) {
      windows.push_back({ys, std::min(h, ys + cfg.window), xs, std::min(w, xs + cfg.window)});
    }
  }

  // Each worker owns a scratch copy of x and restores the patch after every window.
  std::vector<double> scores(windows.size());
  auto evaluate_range = [&](std::size_t begin, std::size_t step) {
    Tensor scratch = x;
    std::vector<double> saved;
    for (std::size_t i = begin; i < windows.size(); i += step) {
      const Window& win = windows[i];
      saved.clear();
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t y = win.y0; y < win.y1; ++y) {
          for (std::size_t xx = win.x0; xx < win.x1; ++xx) {
            saved.push_back(scratch.at(c, y, xx));
            scratch.at(c, y, xx) = cfg.fill_value;
          }
        }
      }
      scores[i] = p_original - probability(predict_logits(model, scratch)[class_index]);
      std::size_t k = 0;
      for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t y = win.y0; y < win.y1; ++y) {
          for (std::size_t xx = win.x0; xx < win.x1; ++xx) scratch.at(c, y, xx) = saved[k++];
        }
      }
    }
  };

  std::size_t threads = cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;
  threads = std::min(threads, windows.size());
  if (threads <= 1) {
    evaluate_range(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(evaluate_range, t, threads);
  }

  // Fixed window order keeps the reduction independent of scheduling.
  Tensor total({h, w});
  std::vector<std::size_t> covered(h * w, 0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const Window& win = windows[i];
    for (std::size_t y = win.y0; y < win.y1; ++y) {
      for (std::size_t xx = win.x0; xx < win.x1; ++xx) {
        total.at(y, xx) += scores[i];
        ++covered[y * w + xx];
      }
    }
  }
  AttributionMap map{Tensor(x.shape()), Method::Occlusion, class_index, json::object()};
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t xx = 0; xx < w; ++xx) {
        map.values.at(c, y, xx) = total.at(y, xx) / static_cast<double>(covered[y * w + xx]);
      }
    }
  }
  map.metadata = {{"target", "probability"},
                  {"window", cfg.window},
                  {"stride", cfg.stride},
                  {"fill_value", cfg.fill_value},
                  {"windows", windows.size()}};
  return map;
}

AttributionMap saliency(const ModelGraph& model, const Tensor& x, std::size_t class_index) {
  return gradient_map(model, x, class_index, Method::Saliency, ReluRule::Vanilla);
}

AttributionMap input_x_gradient(const ModelGraph& model, const Tensor& x, std::size_t class_index) {
  AttributionMap map = saliency(model, x, class_index);
  map.values = hadamard(x, map.values);
  map.method = Method::InputXGradient;
  return map;
}

AttributionMap guided_backprop(const ModelGraph& model, const Tensor& x, std::size_t class_index) {
  return gradient_map(model, x, class_index, Method::GuidedBackprop, ReluRule::Guided);
}

AttributionMap integrated_gradients(const ModelGraph& model, const Tensor& x, const Tensor& baseline,
                                    std::size_t class_index, std::size_t steps) {
  if (steps < 1) throw Error("invalid_config", "integrated gradients needs at least one step");
  if (baseline.shape() != x.shape()) {
    throw Error("shape_mismatch", "baseline " + shape_string(baseline.shape()) + " vs input " + shape_string(x.shape()));
  }
  const Tensor path = x - baseline;
  Tensor grad_sum(x.shape());
  Tensor point(x.shape());
  for (std::size_t k = 1; k <= steps; ++k) {
    const double alpha = (static_cast<double>(k) - 0.5) / static_cast<double>(steps);
    for (std::size_t i = 0; i < point.size(); ++i) point[i] = baseline[i] + alpha * path[i];
    grad_sum += backward(model, forward(model, point), class_index);
  }
  grad_sum *= 1.0 / static_cast<double>(steps);
  AttributionMap map{hadamard(path, grad_sum), Method::IntegratedGradients, class_index, json::object()};
  map.metadata["steps"] = steps;
  map.metadata["rule"] = "midpoint";
  record_completeness(map, class_logit(model, x, class_index), class_logit(model, baseline, class_index));
  return map;
}

AttributionMap deeplift_rescale(const ModelGraph& model, const Tensor& x, const Tensor& baseline,
                                std::size_t class_index) {
  const PairedRecord paired = forward_pair(model, x, baseline);
  const Tensor multipliers = rescale_multipliers(model, paired, class_index);
  AttributionMap map{hadamard(multipliers, x - baseline), Method::DeepLift, class_index, json::object()};
  map.metadata["rule"] = "rescale";
  record_completeness(map, paired.actual.logits()[class_index], paired.reference.logits()[class_index]);
  return map;
}

std::vector<AttributionMap> attribute_all(const ModelGraph& model, const Tensor& x,
                                          const std::vector<std::size_t>& labels,
                                          const std::vector<Method>& methods,
                                          const AttributionSettings& settings) {
  const Tensor baseline = settings.baseline ? *settings.baseline : zero_like(x);
  std::vector<AttributionMap> maps;
  maps.reserve(labels.size() * methods.size());
  for (auto label : labels) {
    for (auto method : methods) {
      switch (method) {
        case Method::Occlusion: maps.push_back(occlusion(model, x, label, settings.occlusion)); break;
        case Method::Saliency: maps.push_back(saliency(model, x, label)); break;
        case Method::InputXGradient: maps.push_back(input_x_gradient(model, x, label)); break;
        case Method::GuidedBackprop: maps.push_back(guided_backprop(model, x, label)); break;
        case Method::IntegratedGradients:
          maps.push_back(integrated_gradients(model, x, baseline, label, settings.ig_steps));
          break;
        case Method::DeepLift: maps.push_back(deeplift_rescale(model, x, baseline, label)); break;
      }
    }
  }
  return maps;
}

std::string map_to_csv(const AttributionMap& map) {
  const Tensor& v = map.values;
  const std::size_t w = v.extent(v.rank() - 1);
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    out += buf;
    out += (i + 1) % w == 0 ? '\n' : ',';
  }
  return out;
}

Heatmap to_heatmap(const Tensor& values) {
  if (values.rank() != 2 && !(values.rank() == 3 && values.extent(0) == 1)) {
    throw Error("shape_mismatch", "heatmap export needs a single-channel map, got " + shape_string(values.shape()));
  }
  Heatmap hm;
  hm.height = values.extent(values.rank() - 2);
  hm.width = values.extent(values.rank() - 1);
  const double scale = max_abs(values);
  hm.all_zero = scale == 0.0;
  hm.pixels.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double level = hm.all_zero ? 127.5 : 127.5 + 127.5 * values[i] / scale;
    hm.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(level), 0L, 255L));
  }
  return hm;
}

}  // namespace attriblab
