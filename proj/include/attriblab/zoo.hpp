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
#include <string_view>
#include <vector>

#include "attriblab/graph.hpp"

namespace attriblab {

/// Toy architectures, one per connectivity mechanism.
enum class ArchId {
  PlainCNN,          // sequential conv stack
  MiniRes,           // identity skip + residual add
  MiniInception,     // parallel 1x1 / 3x3 / 5x5 branches, concatenated
  MiniInceptionRes,  // parallel branches added back onto the block input
  MiniDense,         // every block sees the concatenation of all earlier outputs
};

std::string_view arch_name(ArchId id);
std::optional<ArchId> parse_arch(std::string_view name);
inline constexpr ArchId kAllArchs[] = {ArchId::PlainCNN, ArchId::MiniRes, ArchId::MiniInception,
                                       ArchId::MiniInceptionRes, ArchId::MiniDense};

/// Channel widths per architecture:
///   PlainCNN          {stage1, stage2, stage3}
///   MiniRes           {stage1, stage2}
///   MiniInception     {stem, branch1x1, branch3x3, branch5x5}
///   MiniInceptionRes  {stem, branch1x1, branch3x3, branch5x5}; branches must sum to stem
///   MiniDense         {stem, growth}
struct ArchSpec {
  ArchId arch = ArchId::PlainCNN;
  std::size_t input_side = 64;
  std::size_t num_classes = 1;
  std::vector<std::size_t> widths;  // empty selects default_widths(arch)
};

std::vector<std::size_t> default_widths(ArchId arch);

/// Builds the graph with He-normal weights and small uniform biases drawn from `seed`.
/// Throws Error("invalid_config") for malformed specs and Error("shape_mismatch")
/// when the widths cannot feed a residual add.
ModelGraph build(const ArchSpec& spec, std::uint64_t seed);

/// Re-draws every parameter of `graph` from `seed`.
void initialize_parameters(ModelGraph& graph, std::uint64_t seed);

}  // namespace attriblab
