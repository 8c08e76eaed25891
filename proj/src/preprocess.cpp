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

#include "attriblab/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "attriblab/error.hpp"

namespace attriblab {

namespace {

constexpr double kCubicA = -0.5;

void require_image(const Tensor& img, const char* op) {
  if (img.rank() != 2) {
    throw Error("shape_mismatch", std::string(op) + " expects an H x W image, got " + shape_string(img.shape()));
  }
}

struct Taps {
  std::size_t index[4];
  double weight[4];
};

// Source taps for every destination index along one axis.
std::vector<Taps> axis_taps(std::size_t in, std::size_t out) {
  std::vector<Taps> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t d = 0; d < out; ++d) {
    const double src = (static_cast<double>(d) + 0.5) * scale - 0.5;
    const double base = std::floor(src);
    for (int j = 0; j < 4; ++j) {
      const double pos = base - 1.0 + j;
      const long clamped = std::clamp(static_cast<long>(pos), 0L, static_cast<long>(in) - 1);
      taps[d].index[j] = static_cast<std::size_t>(clamped);
      taps[d].weight[j] = bicubic_kernel(src - pos);
    }
  }
  return taps;
}

}  // namespace

void PreprocessConfig::validate() const {
  if (target_side < 8) throw Error("invalid_config", "target_side must be at least 8");
  if (!(clip_low_pct >= 0.0 && clip_low_pct < clip_high_pct && clip_high_pct <= 100.0)) {
    throw Error("invalid_config", "percentiles must satisfy 0 <= low < high <= 100");
  }
}

double bicubic_kernel(double t) {
  const double x = std::abs(t);
  if (x <= 1.0) return ((kCubicA + 2.0) * x - (kCubicA + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((kCubicA * x - 5.0 * kCubicA) * x + 8.0 * kCubicA) * x - 4.0 * kCubicA;
  return 0.0;
}

Tensor resize_bicubic_to(const Tensor& img, std::size_t rows, std::size_t cols) {
  require_image(img, "resize");
  if (rows == 0 || cols == 0) throw Error("invalid_shape", "resize target has a zero extent");
  const std::size_t h = img.extent(0), w = img.extent(1);
  const auto xt = axis_taps(w, cols);
  const auto yt = axis_taps(h, rows);

  Tensor horizontal({h, cols});
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) acc += xt[x].weight[j] * img.at(y, xt[x].index[j]);
      horizontal.at(y, x) = acc;
    }
  }
  Tensor out({rows, cols});
  for (std::size_t y = 0; y < rows; ++y) {
    for (std::size_t x = 0; x < cols; ++x) {
      double acc = 0.0;
      for (int j = 0; j < 4; ++j) acc += yt[y].weight[j] * horizontal.at(yt[y].index[j], x);
      out.at(y, x) = acc;
    }
  }
  return out;
}

Tensor resize_bicubic(const Tensor& img, std::size_t target_side) {
  require_image(img, "resize");
  if (target_side == 0) throw Error("invalid_shape", "target side must be positive");
  const std::size_t h = img.extent(0), w = img.extent(1);
  const std::size_t longer = std::max(h, w), shorter = std::min(h, w);
  const auto scaled = static_cast<std::size_t>(
      std::llround(static_cast<double>(shorter) * static_cast<double>(target_side) / static_cast<double>(longer)));
  const std::size_t short_out = std::max<std::size_t>(1, scaled);
  return h >= w ? resize_bicubic_to(img, target_side, short_out)
                : resize_bicubic_to(img, short_out, target_side);
}

PaddedImage pad_to_square(const Tensor& img, std::size_t target_side) {
  require_image(img, "pad_to_square");
  const std::size_t h = img.extent(0), w = img.extent(1);
  if (h > target_side || w > target_side) {
    throw Error("shape_mismatch", "image " + shape_string(img.shape()) + " larger than target side " +
                                      std::to_string(target_side));
  }
  PaddedImage out{Tensor({target_side, target_side}), std::vector<bool>(target_side * target_side, false),
                  (target_side - h) / 2, (target_side - w) / 2};
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      out.image.at(out.top + y, out.left + x) = img.at(y, x);
      out.foreground[(out.top + y) * target_side + out.left + x] = true;
    }
  }
  return out;
}

double percentile(std::vector<double> values, double pct) {
  if (values.empty()) throw Error("empty_input", "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double rank = std::clamp(pct, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

NormalizedImage clip_normalize(const Tensor& img, const PreprocessConfig& cfg,
                               const std::vector<bool>& foreground) {
  if (!foreground.empty() && foreground.size() != img.size()) {
    throw Error("shape_mismatch", "foreground mask does not match image size");
  }
  if (!all_finite(img)) throw Error("non_finite", "image contains non-finite values");
  auto is_fg = [&](std::size_t i) { return foreground.empty() || foreground[i]; };

  std::vector<double> fg;
  fg.reserve(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (is_fg(i)) fg.push_back(img[i]);
  }
  NormalizedImage out{Tensor(img.shape()), 0.0, 0.0, false};
  if (fg.empty()) {
    out.degenerate = true;
    return out;
  }
  out.low = percentile(fg, cfg.clip_low_pct);
  out.high = percentile(std::move(fg), cfg.clip_high_pct);
  if (!(out.high > out.low)) {
    out.degenerate = true;
    return out;
  }
  const double range = out.high - out.low;
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!is_fg(i)) continue;
    out.image[i] = std::clamp((std::clamp(img[i], out.low, out.high) - out.low) / range, 0.0, 1.0);
  }
  return out;
}

PreprocessedImage preprocess(const Tensor& img, const PreprocessConfig& cfg) {
  cfg.validate();
  require_image(img, "preprocess");
  if (img.extent(0) < 2 || img.extent(1) < 2) {
    throw Error("invalid_shape", "image " + shape_string(img.shape()) + " is too small to resample");
  }
  const Tensor resized = resize_bicubic(img, cfg.target_side);
  const PaddedImage padded = pad_to_square(resized, cfg.target_side);
  NormalizedImage norm = clip_normalize(padded.image, cfg, padded.foreground);
  PreprocessedImage out{std::move(norm.image), {}};
  if (norm.degenerate) out.warnings.push_back("constant_image: percentile range is empty, output is all zeros");
  return out;
}

Tensor to_model_input(const Tensor& square, std::size_t side) {
  require_image(square, "to_model_input");
  Tensor resized = (square.extent(0) == side && square.extent(1) == side)
                       ? square
                       : resize_bicubic_to(square, side, side);
  for (auto& v : resized.values()) v = std::clamp(v, 0.0, 1.0);
  return resized.reshaped({1, side, side});
}

}  // namespace attriblab
