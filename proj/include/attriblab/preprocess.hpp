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
#include <string>
#include <vector>

#include "attriblab/tensor.hpp"

namespace attriblab {

struct PreprocessConfig {
  std::size_t target_side = 512;
  double clip_low_pct = 1.0;
  double clip_high_pct = 95.0;

  /// Throws Error("invalid_config") unless target_side >= 8 and
  /// 0 <= clip_low_pct < clip_high_pct <= 100.
  void validate() const;
};

/// Keys cubic convolution kernel with a = -0.5.
double bicubic_kernel(double t);

/// Resamples an H x W image to rows x cols (half-pixel centres, clamped edges).
Tensor resize_bicubic_to(const Tensor& img, std::size_t rows, std::size_t cols);

/// Aspect-preserving bicubic resize so the longer side equals `target_side`; the
/// shorter side becomes round(shorter * target / longer), at least 1.
Tensor resize_bicubic(const Tensor& img, std::size_t target_side);

struct PaddedImage {
  Tensor image;                 // target_side x target_side
  std::vector<bool> foreground; // true where a source pixel landed
  std::size_t top = 0;
  std::size_t left = 0;
};

/// Zero-pads symmetrically to a square; an odd remainder goes to the bottom/right.
PaddedImage pad_to_square(const Tensor& img, std::size_t target_side);

/// Linear-interpolation percentile (pct in [0, 100]) of a non-empty sample.
double percentile(std::vector<double> values, double pct);

struct NormalizedImage {
  Tensor image;
  double low = 0.0;
  double high = 0.0;
  bool degenerate = false;  // low == high; image is all zeros
};

/// Clamps foreground pixels to their [clip_low_pct, clip_high_pct] percentiles and
/// maps that interval onto [0, 1]. Background pixels become 0. An empty mask means
/// every pixel is foreground.
NormalizedImage clip_normalize(const Tensor& img, const PreprocessConfig& cfg,
                               const std::vector<bool>& foreground = {});

struct PreprocessedImage {
  Tensor image;  // target_side x target_side, values in [0, 1]
  std::vector<std::string> warnings;
};

/// resize -> pad -> percentile clip -> normalize.
PreprocessedImage preprocess(const Tensor& img, const PreprocessConfig& cfg);

/// Bicubic adapter from a preprocessed square image to a 1 x side x side model
/// input, clamped back into [0, 1].
Tensor to_model_input(const Tensor& square, std::size_t side);

}  // namespace attriblab
