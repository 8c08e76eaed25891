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

#include "attriblab/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>

#include "attriblab/error.hpp"
#include "attriblab/image_io.hpp"

namespace attriblab {

namespace {

constexpr double kBackground = 60.0;
constexpr double kForeground = 200.0;
constexpr double kNoise = 6.0;
constexpr std::array<const char*, 4> kLeaves = {"HStripes", "VStripes", "Checker", "Dots"};

bool texture_on(std::string_view leaf, std::size_t y, std::size_t x, std::size_t phase) {
  y += phase;
  x += phase;
  if (leaf == "HStripes") return (y / 2) % 2 == 0;
  if (leaf == "VStripes") return (x / 2) % 2 == 0;
  if (leaf == "Checker") return ((y / 2) + (x / 2)) % 2 == 0;
  return y % 4 == 1 && x % 4 == 1;  // Dots
}

}  // namespace

LabelGraph synthetic_hierarchy() {
  return LabelGraph({"Stripes", "HStripes", "VStripes", "Checker", "Dots"}, {"", "Stripes", "Stripes", "", ""});
}

Tensor render_synthetic(LabelSet leaves, const LabelGraph& labels, std::size_t side, double subject_offset, Rng& rng) {
  if (side < 8 || side % 2 != 0) throw Error("invalid_config", "synthetic side must be even and at least 8");
  Tensor img({side, side});
  for (auto& v : img.values()) v = kBackground + subject_offset + kNoise * rng.normal();

  std::array<std::size_t, 4> quadrants{0, 1, 2, 3};
  rng.shuffle(std::span<std::size_t>(quadrants));
  const std::size_t half = side / 2;
  const std::size_t margin = std::max<std::size_t>(1, side / 16);
  std::size_t q = 0;
  for (auto idx : leaves.indices()) {
    if (q == quadrants.size()) break;
    const std::string& leaf = labels.name(idx);
    const std::size_t oy = (quadrants[q] / 2) * half, ox = (quadrants[q] % 2) * half;
    const std::size_t phase = rng.below(4);
    ++q;
    for (std::size_t y = margin; y < half - margin; ++y) {
      for (std::size_t x = margin; x < half - margin; ++x) {
        if (texture_on(leaf, y, x, phase)) img.at(oy + y, ox + x) = kForeground + subject_offset + kNoise * rng.normal();
      }
    }
  }
  for (auto& v : img.values()) v = std::clamp(v, 0.0, 255.0);
  return img;
}

Manifest write_synthetic_dataset(const std::filesystem::path& dir, const SyntheticConfig& cfg) {
  if (cfg.images == 0 || cfg.subjects == 0 || cfg.subjects > cfg.images) {
    throw Error("invalid_config", "synthetic dataset needs 1 <= subjects <= images");
  }
  const LabelGraph labels = synthetic_hierarchy();
  std::filesystem::create_directories(dir / "images");
  Rng rng(cfg.seed);

  std::vector<double> subject_offset(cfg.subjects);
  for (auto& o : subject_offset) o = rng.uniform(-15.0, 15.0);

  Manifest manifest{{}, dir};
  char path[64];
  char subject_id[16];
  for (std::size_t i = 0; i < cfg.images; ++i) {
    const std::size_t subject = i * cfg.subjects / cfg.images;
    LabelSet leaves;
    for (const char* leaf : kLeaves) {
      if (rng.uniform() < 0.4) leaves.insert(*labels.index(leaf));
    }
    if (leaves.empty()) leaves.insert(*labels.index(kLeaves[rng.below(kLeaves.size())]));

    const Tensor img = render_synthetic(leaves, labels, cfg.side, subject_offset[subject], rng);
    std::snprintf(path, sizeof path, "images/s%03zu_i%04zu.pgm", subject, i);
    std::snprintf(subject_id, sizeof subject_id, "s%03zu", subject);
    write_pgm(dir / path, img);
    manifest.rows.push_back({path, subject_id, labels.names(leaves)});
  }

  {
    std::ofstream out(dir / "manifest.csv");
    out << format_manifest(manifest);
  }
  {
    std::ofstream out(dir / "hierarchy.txt");
    out << labels.to_edge_list();
  }
  return manifest;
}

}  // namespace attriblab
