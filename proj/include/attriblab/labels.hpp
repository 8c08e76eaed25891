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
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace attriblab {

inline constexpr std::size_t kMaxLabels = 64;

/// Set of label indices into a LabelGraph.
class LabelSet {
 public:
  LabelSet() = default;
  static LabelSet of(std::initializer_list<std::size_t> indices);

  bool contains(std::size_t i) const { return (bits_ >> i) & 1u; }
  void insert(std::size_t i);
  void erase(std::size_t i) { bits_ &= ~(std::uint64_t{1} << i); }
  bool empty() const { return bits_ == 0; }
  std::size_t count() const;
  std::vector<std::size_t> indices() const;
  std::uint64_t bits() const { return bits_; }

  LabelSet operator|(LabelSet other) const { return from_bits(bits_ | other.bits_); }
  bool operator==(const LabelSet&) const = default;
  bool is_subset_of(LabelSet other) const { return (bits_ & ~other.bits_) == 0; }

  static LabelSet from_bits(std::uint64_t bits) {
    LabelSet s;
    s.bits_ = bits;
    return s;
  }

 private:
  std::uint64_t bits_ = 0;
};

struct Violation {
  enum class Kind { MissingAncestor, ExclusiveConflict };
  Kind kind;
  std::size_t label;     // the present label
  std::size_t other;     // missing parent, or the conflicting pathology
  std::string message;
};

/// Is-a forest over the label vocabulary. Each label has at most one parent.
/// An optional exclusive label (NoFinding by default) may not co-occur with any other.
class LabelGraph {
 public:
  /// `parents[i]` is the parent name of `labels[i]`, "" for roots.
  LabelGraph(std::vector<std::string> labels, const std::vector<std::string>& parents,
             std::optional<std::string> exclusive = std::string("NoFinding"));

  /// The built-in 13-label pneumonia hierarchy.
  static LabelGraph pneumonia();

  /// Parses `child,parent` lines; a line with a single name declares a root. Blank
  /// lines and '#' comments are ignored. Labels are ordered by first appearance.
  static LabelGraph parse_edge_list(std::string_view text);
  static LabelGraph load(const std::filesystem::path& path);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& name(std::size_t i) const { return labels_.at(i); }
  std::optional<std::size_t> index(std::string_view name) const;
  std::optional<std::size_t> parent(std::size_t i) const { return parents_.at(i); }
  std::vector<std::string> parent_names() const;
  std::optional<std::size_t> exclusive() const { return exclusive_; }

  /// Throws Error("unknown_label").
  LabelSet parse(const std::vector<std::string>& names) const;
  std::vector<std::string> names(LabelSet set) const;

  /// Ancestor closure. Throws Error("inconsistent_labels") if the exclusive label is
  /// combined with any other label, and Error("empty_labels") for an empty set.
  LabelSet expand(LabelSet raw) const;

  /// Every (present child, absent parent) pair and any exclusive-label conflict.
  std::vector<Violation> check_consistency(LabelSet pred) const;

  std::string to_edge_list() const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::optional<std::size_t>> parents_;
  std::optional<std::size_t> exclusive_;
};

}  // namespace attriblab
