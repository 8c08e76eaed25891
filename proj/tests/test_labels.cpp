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

#include <algorithm>

#include "doctest.h"

#include "attriblab/error.hpp"
#include "attriblab/labels.hpp"
#include "attriblab/rng.hpp"

using namespace attriblab;

namespace {

LabelSet named(const LabelGraph& g, std::vector<std::string> names) { return g.parse(names); }

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("expanding a leaf adds every ancestor") {
  const LabelGraph g = LabelGraph::pneumonia();
  CHECK(g.expand(named(g, {"COVID19"})) == named(g, {"COVID19", "ViralPneumonia", "Pneumonia"}));
  CHECK(g.expand(named(g, {"COVID19", "ARDS"})) == named(g, {"COVID19", "ViralPneumonia", "Pneumonia", "ARDS"}));
  CHECK(g.expand(named(g, {"NoFinding"})) == named(g, {"NoFinding"}));
  CHECK(g.expand(named(g, {"Pneumocystis"})) == named(g, {"Pneumocystis", "FungalPneumonia", "Pneumonia"}));
}

TEST_CASE("expansion errors") {
  const LabelGraph g = LabelGraph::pneumonia();
  CHECK(error_code([&] { g.expand(LabelSet{}); }) == "empty_labels");
  CHECK(error_code([&] { g.expand(named(g, {"NoFinding", "SARS"})); }) == "inconsistent_labels");
  CHECK(error_code([&] { g.parse({"Flu"}); }) == "unknown_label");
}

TEST_CASE("consistency violations") {
  const LabelGraph g = LabelGraph::pneumonia();
  const auto missing = g.check_consistency(named(g, {"COVID19"}));
  REQUIRE(missing.size() == 2);
  std::vector<std::string> parents;
  for (const auto& v : missing) {
    CHECK(v.kind == Violation::Kind::MissingAncestor);
    parents.push_back(g.name(v.other));
  }
  std::sort(parents.begin(), parents.end());
  CHECK(parents == std::vector<std::string>{"Pneumonia", "ViralPneumonia"});

  CHECK(g.check_consistency(named(g, {"ViralPneumonia", "BacterialPneumonia", "Pneumonia"})).empty());

  const auto conflict = g.check_consistency(named(g, {"NoFinding", "ARDS"}));
  REQUIRE(conflict.size() == 1);
  CHECK(conflict[0].kind == Violation::Kind::ExclusiveConflict);
}

TEST_CASE("expanded sets are consistent, closed and idempotent") {
  const LabelGraph g = LabelGraph::pneumonia();
  const auto nofinding = *g.index("NoFinding");
  Rng rng(21);
  for (int trial = 0; trial < 500; ++trial) {
    LabelSet s = LabelSet::from_bits(rng.next() & ((std::uint64_t{1} << g.size()) - 1));
    s.erase(nofinding);
    if (s.empty()) continue;
    const LabelSet e = g.expand(s);
    CHECK(s.is_subset_of(e));
    CHECK(g.check_consistency(e).empty());
    CHECK(g.expand(e) == e);
  }
}

TEST_CASE("hierarchy validation") {
  CHECK(error_code([] { LabelGraph({"A", "B"}, {"B", "A"}); }) == "invalid_hierarchy");
  CHECK(error_code([] { LabelGraph({"A", "A"}, {"", ""}); }) == "invalid_hierarchy");
  CHECK(error_code([] { LabelGraph({"A"}, {"Z"}); }) == "invalid_hierarchy");
  CHECK(error_code([] { LabelGraph({"A", "NoFinding"}, {"NoFinding", ""}); }) == "invalid_hierarchy");
  CHECK_NOTHROW(LabelGraph({"A", "B"}, {"", "A"}, std::nullopt));
}

TEST_CASE("edge list round trip") {
  const LabelGraph g = LabelGraph::pneumonia();
  const LabelGraph back = LabelGraph::parse_edge_list(g.to_edge_list());
  CHECK(back.labels() == g.labels());
  CHECK(back.parent_names() == g.parent_names());

  const LabelGraph parsed = LabelGraph::parse_edge_list("# textures\nStripes\n\nHStripes, Stripes\nDots\n");
  CHECK(parsed.labels() == std::vector<std::string>{"Stripes", "HStripes", "Dots"});
  CHECK(parsed.parent(1) == std::optional<std::size_t>{0});
}

TEST_CASE("label sets") {
  LabelSet s = LabelSet::of({1, 4});
  CHECK(s.count() == 2);
  CHECK(s.indices() == std::vector<std::size_t>{1, 4});
  s.insert(63);
  CHECK(s.contains(63));
  CHECK_THROWS_AS(s.insert(64), Error);
}
