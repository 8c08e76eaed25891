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

#include "attriblab/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
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

std::string quote_if_needed(const std::string& field) {
  if (field.find_first_of(",\"") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::vector<std::string> split_csv_record(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else if (c != '\r') {
      fields.back() += c;
    }
  }
  return fields;
}

std::filesystem::path Manifest::resolve(const ManifestRow& row) const {
  const std::filesystem::path p(row.image_path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

Manifest Manifest::rebased(const std::filesystem::path& new_base) const {
  namespace fs = std::filesystem;
  Manifest out{rows, new_base};
  for (auto& r : out.rows) {
    if (fs::path(r.image_path).is_absolute()) continue;
    const fs::path from = fs::weakly_canonical(fs::absolute(new_base.empty() ? fs::path(".") : new_base));
    const fs::path target = fs::weakly_canonical(fs::absolute(resolve(r)));
    r.image_path = target.lexically_relative(from).generic_string();
  }
  return out;
}

std::vector<std::string> Manifest::subjects() const {
  std::set<std::string> ids;
  for (const auto& r : rows) ids.insert(r.subject_id);
  return {ids.begin(), ids.end()};
}

Manifest Manifest::subset(const std::vector<std::string>& subjects) const {
  Manifest out{{}, base_dir};
  for (const auto& r : rows) {
    if (std::binary_search(subjects.begin(), subjects.end(), r.subject_id)) out.rows.push_back(r);
  }
  return out;
}

Manifest parse_manifest(std::string_view csv, std::filesystem::path base_dir) {
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  Manifest manifest{{}, std::move(base_dir)};
  std::set<std::string> seen_paths;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_csv_record(line);
    for (auto& f : fields) f = trim(f);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"image_path", "subject_id", "labels"}) {
        throw Error("bad_manifest", "header must be 'image_path,subject_id,labels'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      throw Error("bad_manifest", "line " + std::to_string(line_no) + ": expected 3 fields, got " +
                                      std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw Error("bad_manifest", "line " + std::to_string(line_no) + ": empty image path or subject id");
    }
    ManifestRow row{fields[0], fields[1], {}};
    std::istringstream labels(fields[2]);
    std::string name;
    while (std::getline(labels, name, ';')) {
      name = trim(name);
      if (!name.empty()) row.labels.push_back(name);
    }
    if (row.labels.empty()) {
      throw Error("bad_manifest", "line " + std::to_string(line_no) + ": no labels");
    }
    if (!seen_paths.insert(row.image_path).second) {
      throw Error("duplicate_image", "line " + std::to_string(line_no) + ": duplicate image path '" +
                                         row.image_path + "'");
    }
    manifest.rows.push_back(std::move(row));
  }
  if (!header_seen) throw Error("empty_manifest", "manifest is empty");
  if (manifest.rows.empty()) throw Error("empty_manifest", "manifest has no rows");
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot read manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str(), path.parent_path());
}

std::string format_manifest(const Manifest& manifest) {
  std::string out = "image_path,subject_id,labels\n";
  for (const auto& r : manifest.rows) {
    std::string labels;
    for (std::size_t i = 0; i < r.labels.size(); ++i) labels += (i ? ";" : "") + r.labels[i];
    out += quote_if_needed(r.image_path) + "," + quote_if_needed(r.subject_id) + "," + quote_if_needed(labels) + "\n";
  }
  return out;
}

}  // namespace attriblab
