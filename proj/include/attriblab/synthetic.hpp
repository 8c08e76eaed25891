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
#include <filesystem>

#include "attriblab/labels.hpp"
#include "attriblab/manifest.hpp"
#include "attriblab/rng.hpp"
#include "attriblab/tensor.hpp"

namespace attriblab {

/// Texture task with three root labels: Stripes (children HStripes, VStripes),
/// Checker and Dots. Each image shows one to four leaf textures, one per quadrant.
struct SyntheticConfig {
  std::size_t images = 600;
  std::size_t subjects = 100;
  std::size_t side = 32;
  std::uint64_t seed = 0;
};

LabelGraph synthetic_hierarchy();

/// Renders an 8-bit-range side x side image containing the given leaf textures.
/// `subject_offset` shifts the background level.
Tensor render_synthetic(LabelSet leaves, const LabelGraph& labels, std::size_t side, double subject_offset, Rng& rng);

/// Writes images/*.pgm, manifest.csv and hierarchy.txt under `dir` and returns the manifest.
Manifest write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticConfig& cfg);

}  // namespace attriblab
