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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace attriblab {

struct ManifestRow {
  std::string image_path;  // as written; resolve with Manifest::resolve
  std::string subject_id;
  std::vector<std::string> labels;  // raw diagnosis names
};

/// CSV with header `image_path,subject_id,labels`; labels are ';'-separated.
struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;  // relative image paths are resolved against this

  std::filesystem::path resolve(const ManifestRow& row) const;

  /// Distinct subject ids, sorted.
  std::vector<std::string> subjects() const;

  /// Rows whose subject is in `subjects` (which must be sorted), in manifest order.
  Manifest subset(const std::vector<std::string>& subjects) const;

  /// Same rows with relative image paths rewritten to resolve from `new_base`.
  Manifest rebased(const std::filesystem::path& new_base) const;
};

/// Throws Error("bad_manifest") on a malformed header/row, Error("empty_manifest")
/// when there are no rows and Error("duplicate_image") on a repeated image path.
Manifest parse_manifest(std::string_view csv, std::filesystem::path base_dir = {});
Manifest load_manifest(const std::filesystem::path& path);

std::string format_manifest(const Manifest& manifest);

/// Splits one CSV record, honouring double-quoted fields.
std::vector<std::string> split_csv_record(std::string_view line);

}  // namespace attriblab
