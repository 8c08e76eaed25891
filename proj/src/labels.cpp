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

#include "attriblab/labels.hpp"

#include <bit>
#include <fstream>
#include <sstream>

#include "attriblab/error.hpp"

namespace attriblab {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

LabelSet LabelSet::of(std::initializer_list<std::size_t> indices) {
  LabelSet s;
  for (auto i : indices) s.insert(i);
  return s;
}

void LabelSet::insert(std::size_t i) {
  if (i >= kMaxLabels) throw Error("unknown_label", "label index " + std::to_string(i) + " out of range");
  bits_ |= std::uint64_t{1} << i;
}

std::size_t LabelSet::count() const { return static_cast<std::size_t>(std::popcount(bits_)); }

std::vector<std::size_t> LabelSet::indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < kMaxLabels; ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

LabelGraph::LabelGraph(std::vector<std::string> labels, const std::vector<std::string>& parents,
                       std::optional<std::string> exclusive)
    : labels_(std::move(labels)) {
  if (labels_.empty()) throw Error("invalid_hierarchy", "label list is empty");
  if (labels_.size() > kMaxLabels) throw Error("invalid_hierarchy", "more than 64 labels");
  if (parents.size() != labels_.size()) throw Error("invalid_hierarchy", "labels and parents differ in length");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw Error("invalid_hierarchy", "empty label name");
    for (std::size_t j = 0; j < i; ++j) {
      if (labels_[j] == labels_[i]) throw Error("invalid_hierarchy", "duplicate label '" + labels_[i] + "'");
    }
  }
  parents_.resize(labels_.size());
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (parents[i].empty()) continue;
    const auto p = index(parents[i]);
    if (!p) throw Error("invalid_hierarchy", "parent '" + parents[i] + "' of '" + labels_[i] + "' is not a label");
    parents_[i] = *p;
  }
  // Walking up from any label must terminate within size() steps.
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    auto cur = parents_[i];
    for (std::size_t steps = 0; cur; ++steps) {
      if (steps >= labels_.size() || *cur == i) {
        throw Error("invalid_hierarchy", "cycle through label '" + labels_[i] + "'");
      }
      cur = parents_[*cur];
    }
  }
  if (exclusive) {
    exclusive_ = index(*exclusive);
    if (exclusive_) {
      const std::size_t e = *exclusive_;
      if (parents_[e]) throw Error("invalid_hierarchy", "exclusive label '" + *exclusive + "' must be a root");
      for (const auto& p : parents_) {
        if (p && *p == e) throw Error("invalid_hierarchy", "exclusive label '" + *exclusive + "' cannot have children");
      }
    }
  }
}

LabelGraph LabelGraph::pneumonia() {
  return LabelGraph(
      {"Pneumonia", "ViralPneumonia", "BacterialPneumonia", "FungalPneumonia", "COVID19", "SARS",
       "Streptococcus", "Klebsiella", "Chlamydophila", "Legionella", "Pneumocystis", "ARDS", "NoFinding"},
      {"", "Pneumonia", "Pneumonia", "Pneumonia", "ViralPneumonia", "ViralPneumonia", "BacterialPneumonia",
       "BacterialPneumonia", "BacterialPneumonia", "BacterialPneumonia", "FungalPneumonia", "", ""});
}

LabelGraph LabelGraph::parse_edge_list(std::string_view text) {
  std::vector<std::string> labels;
  std::vector<std::string> parents;
  auto declare = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == name) return i;
    }
    labels.push_back(name);
    parents.emplace_back();
    return labels.size() - 1;
  };
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto comma = body.find(',');
    if (comma == std::string::npos) {
      declare(body);
      continue;
    }
    const std::string child = trim(std::string_view(body).substr(0, comma));
    const std::string parent = trim(std::string_view(body).substr(comma + 1));
    if (child.empty() || parent.empty() || parent.find(',') != std::string::npos) {
      throw Error("invalid_hierarchy", "line " + std::to_string(line_no) + ": expected 'child,parent'");
    }
    const std::size_t c = declare(child);
    declare(parent);
    if (!parents[c].empty() && parents[c] != parent) {
      throw Error("invalid_hierarchy", "label '" + child + "' has two parents");
    }
    parents[c] = parent;
  }
  return LabelGraph(std::move(labels), parents);
}

LabelGraph LabelGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot read hierarchy file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_edge_list(buf.str());
}

std::optional<std::size_t> LabelGraph::index(std::string_view name) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> LabelGraph::parent_names() const {
  std::vector<std::string> out;
  for (const auto& p : parents_) out.push_back(p ? labels_[*p] : std::string());
  return out;
}

LabelSet LabelGraph::parse(const std::vector<std::string>& names) const {
  LabelSet set;
  for (const auto& n : names) {
    const auto i = index(n);
    if (!i) throw Error("unknown_label", "unknown label '" + n + "'");
    set.insert(*i);
  }
  return set;
}

std::vector<std::string> LabelGraph::names(LabelSet set) const {
  std::vector<std::string> out;
  for (auto i : set.indices()) out.push_back(name(i));
  return out;
}

LabelSet LabelGraph::expand(LabelSet raw) const {
  if (raw.empty()) throw Error("empty_labels", "label set is empty");
  if (exclusive_ && raw.contains(*exclusive_) && raw.count() > 1) {
    throw Error("inconsistent_labels", labels_[*exclusive_] + " combined with a pathology label");
  }
  LabelSet out = raw;
  for (auto i : raw.indices()) {
    for (auto p = parents_.at(i); p; p = parents_[*p]) out.insert(*p);
  }
  return out;
}

std::vector<Violation> LabelGraph::check_consistency(LabelSet pred) const {
  std::vector<Violation> out;
  for (auto i : pred.indices()) {
    for (auto p = parents_.at(i); p; p = parents_[*p]) {
      if (!pred.contains(*p)) {
        out.push_back({Violation::Kind::MissingAncestor, i, *p,
                       labels_[i] + " present without ancestor " + labels_[*p]});
      }
    }
  }
  if (exclusive_ && pred.contains(*exclusive_)) {
    for (auto i : pred.indices()) {
      if (i == *exclusive_) continue;
      out.push_back({Violation::Kind::ExclusiveConflict, *exclusive_, i,
                     labels_[*exclusive_] + " co-occurs with " + labels_[i]});
    }
  }
  return out;
}

std::string LabelGraph::to_edge_list() const {
  std::string out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    out += labels_[i];
    if (parents_[i]) out += "," + labels_[*parents_[i]];
    out += "\n";
  }
  return out;
}

}  // namespace attriblab
