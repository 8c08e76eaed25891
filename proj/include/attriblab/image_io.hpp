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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "attriblab/tensor.hpp"

namespace attriblab {

/// Grayscale image as an H x W tensor of raw sample values (0..maxval). Colour
/// inputs are reduced to luminance (0.299 R + 0.587 G + 0.114 B).
///
/// Supported: PGM/PPM (P2, P3, P5, P6; 8 or 16 bit) and PNG (any bit depth / colour type).
Tensor read_image(const std::filesystem::path& path);

Tensor read_pnm(const std::filesystem::path& path);
Tensor read_png(const std::filesystem::path& path);

/// Writes an 8-bit binary PGM. Values are rounded and clamped to [0, 255].
void write_pgm(const std::filesystem::path& path, const Tensor& image);

/// Writes a 16-bit binary PGM (big-endian samples), rounded and clamped to [0, 65535].
void write_pgm16(const std::filesystem::path& path, const Tensor& image);

/// Exact 8-bit PGM bytes for an H x W array of already-quantized samples.
std::string encode_pgm(std::size_t height, std::size_t width, std::span<const std::uint8_t> pixels);

}  // namespace attriblab
