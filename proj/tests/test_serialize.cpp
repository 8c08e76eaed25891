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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"

#include "attriblab/config.hpp"
#include "attriblab/error.hpp"
#include "attriblab/labels.hpp"
#include "attriblab/manifest.hpp"
#include "attriblab/serialize.hpp"
#include "attriblab/zoo.hpp"

using namespace attriblab;
using nlohmann::json;

namespace {

std::string error_code(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST_CASE("model container round trip is bit-exact for every architecture") {
  const LabelGraph labels = LabelGraph::pneumonia();
  Rng rng(12);
  for (ArchId arch : kAllArchs) {
    for (std::uint64_t seed : {0, 1, 99}) {
      ModelFile m{build({arch, 16, labels.size(), {}}, seed), labels.labels(), labels.parent_names(),
                  {{"seed", seed}}};
      // Values that do not survive a decimal round trip at default precision.
      m.graph.parameter(*m.graph.find("head"), 1)[0] = 0.1 + 0.2;
      m.graph.parameter(*m.graph.find("head"), 1)[1] = -0.0;
      m.graph.parameter(*m.graph.find("head"), 1)[2] = 5e-324;
      const std::string text = encode_model(m);
      const ModelFile back = decode_model(text);
      CAPTURE(arch_name(arch));
      REQUIRE(back.graph.size() == m.graph.size());
      for (std::size_t id = 0; id < m.graph.size(); ++id) {
        const auto& a = m.graph.node(id);
        const auto& b = back.graph.node(id);
        CHECK(a.kind == b.kind);
        CHECK(a.name == b.name);
        CHECK(a.inputs == b.inputs);
        CHECK(a.stride == b.stride);
        CHECK(a.padding == b.padding);
        for (std::size_t k = 0; k < a.params.size(); ++k) CHECK(bit_identical(a.params[k].value, b.params[k].value));
      }
      CHECK(back.labels == m.labels);
      CHECK(back.parents == m.parents);
      CHECK(back.metadata == m.metadata);
      CHECK(encode_model(back) == text);
      const Tensor x = oracle::random_tensor({1, 16, 16}, rng);
      CHECK(bit_identical(predict_logits(back.graph, x), predict_logits(m.graph, x)));
    }
  }
}

TEST_CASE("tensor hex payloads") {
  const Tensor t({3}, {1.0, -2.5, 0.1});
  CHECK(encode_tensor_hex(t).size() == 48);
  CHECK(bit_identical(decode_tensor_hex({3}, encode_tensor_hex(t)), t));
  CHECK(error_code([] { decode_tensor_hex({2}, "00"); }) == "bad_model_file");
  CHECK(error_code([] { decode_tensor_hex({1}, "zz00000000000000"); }) == "bad_model_file");
}

TEST_CASE("malformed containers are rejected") {
  CHECK(error_code([] { decode_model("not json"); }) == "bad_model_file");
  CHECK(error_code([] { decode_model(R"({"format":"other"})"); }) == "bad_model_file");
  const LabelGraph labels = LabelGraph::pneumonia();
  const ModelFile m{build({ArchId::PlainCNN, 16, labels.size(), {}}, 0), labels.labels(), labels.parent_names(), {}};
  json doc = json::parse(encode_model(m));
  doc["version"] = 99;
  CHECK(error_code([&] { decode_model(doc.dump()); }) == "bad_model_file");
  doc = json::parse(encode_model(m));
  doc["labels"].erase(0);
  CHECK(error_code([&] { decode_model(doc.dump()); }) == "bad_model_file");
  CHECK(error_code([] { load_model("/nonexistent/model.json"); }) == "io_error");
}

TEST_CASE("manifest parsing") {
  const Manifest m = parse_manifest(
      "image_path,subject_id,labels\n"
      "a.pgm,p1,COVID19;ARDS\n"
      "\"b, c.pgm\",p2,NoFinding\n"
      "d.pgm,p1,SARS\n",
      "/data");
  REQUIRE(m.rows.size() == 3);
  CHECK(m.rows[0].labels == std::vector<std::string>{"COVID19", "ARDS"});
  CHECK(m.rows[1].image_path == "b, c.pgm");
  CHECK(m.resolve(m.rows[0]) == std::filesystem::path("/data/a.pgm"));
  CHECK(m.subjects() == std::vector<std::string>{"p1", "p2"});
  CHECK(m.subset({"p1"}).rows.size() == 2);
  CHECK(parse_manifest(format_manifest(m)).rows.size() == 3);
  CHECK(parse_manifest(format_manifest(m)).rows[1].image_path == "b, c.pgm");

  CHECK(error_code([] { parse_manifest(""); }) == "empty_manifest");
  CHECK(error_code([] { parse_manifest("image_path,subject_id,labels\n"); }) == "empty_manifest");
  CHECK(error_code([] { parse_manifest("path,subject,labels\na,b,c\n"); }) == "bad_manifest");
  CHECK(error_code([] { parse_manifest("image_path,subject_id,labels\na,b\n"); }) == "bad_manifest");
  CHECK(error_code([] { parse_manifest("image_path,subject_id,labels\na,p,\n"); }) == "bad_manifest");
  CHECK(error_code([] { parse_manifest("image_path,subject_id,labels\na,p,X\na,q,Y\n"); }) == "duplicate_image");
}

TEST_CASE("rebased manifests resolve to the same files") {
  const Manifest m = parse_manifest("image_path,subject_id,labels\nimg/a.pgm,p,X\n/abs/b.pgm,q,Y\n", "/data/set");
  const Manifest r = m.rebased("/data/out/run");
  CHECK(r.rows[0].image_path == "../../set/img/a.pgm");
  CHECK(r.rows[1].image_path == "/abs/b.pgm");
  CHECK(r.resolve(r.rows[0]).lexically_normal() == std::filesystem::path("/data/set/img/a.pgm"));
}

TEST_CASE("run config parsing") {
  const json doc = json::parse(R"({
    "seed": 7, "folds": 3,
    "preprocess": {"target_side": 64},
    "arch": {"arch_id": "MiniRes", "input_side": 32},
    "train": {"epochs": 4, "lr": 0.01},
    "occlusion": {"window": 8, "stride": 4},
    "attribution": {"methods": ["saliency", "deeplift"], "ig_steps": 16},
    "paths": {"manifest": "m.csv", "output_dir": "/abs/out"}
  })");
  const RunConfig cfg = parse_run_config(doc, "/base");
  CHECK(cfg.seed == 7);
  CHECK(cfg.train.seed == 7);
  CHECK(cfg.folds == 3);
  CHECK(cfg.arch.arch == ArchId::MiniRes);
  CHECK(cfg.train.epochs == 4);
  CHECK(cfg.train.batch_size == TrainConfig{}.batch_size);
  CHECK(cfg.methods == std::vector<Method>{Method::Saliency, Method::DeepLift});
  CHECK(cfg.paths.manifest == "/base/m.csv");
  CHECK(cfg.paths.output_dir == "/abs/out");

  const RunConfig back = parse_run_config(to_json(cfg), "/base");
  CHECK(to_json(back) == to_json(cfg));

  CHECK(error_code([] { parse_run_config(json::parse(R"({"sed": 1})")); }) == "invalid_config");
  CHECK(error_code([] { parse_run_config(json::parse(R"({"train": {"epochs": 0}})")); }) == "invalid_config");
  CHECK(error_code([] { parse_run_config(json::parse(R"({"train": {"epochs": "ten"}})")); }) == "invalid_config");
  CHECK(error_code([] { parse_run_config(json::parse(R"({"arch": {"arch_id": "VGG"}})")); }) == "invalid_config");
  CHECK(error_code([] { parse_method_list("saliency,lime"); }) == "unknown_method");
  CHECK(parse_method_list("all").size() == 6);
}
