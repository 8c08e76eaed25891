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

#include <cmath>

#include "doctest.h"

#include "attriblab/autodiff.hpp"
#include "attriblab/error.hpp"
#include "attriblab/graph.hpp"
#include "attriblab/tensor.hpp"

using namespace attriblab;

namespace {

void fill(Tensor& t, double v) {
  for (auto& x : t.values()) x = v;
}

}  // namespace

TEST_CASE("tensor construction rejects mismatched data") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), Error);
  CHECK_THROWS_AS(Tensor({2, 0}), Error);
  const Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.at(1, 2) == 6);
  CHECK(sum(t) == 21);
  CHECK(max_abs(t - t) == 0);
  CHECK(shape_string(t.shape()) == "[2x3]");
}

TEST_CASE("1x1 identity kernel reproduces the image") {
  GraphBuilder b({1, 5, 4});
  b.conv2d(GraphBuilder::input(), 1, 1);
  ModelGraph g = std::move(b).finish();
  g.parameter(1, 0)[0] = 1.0;
  Tensor x({1, 5, 4});
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(static_cast<double>(i));
  CHECK(bit_identical(predict_logits(g, x), x));
}

TEST_CASE("dense with zero weights returns its bias") {
  GraphBuilder b({4});
  b.dense(GraphBuilder::input(), 3);
  ModelGraph g = std::move(b).finish();
  g.parameter(1, 1) = Tensor({3}, {0.5, -1.0, 2.0});
  const Tensor y = predict_logits(g, Tensor({4}, {9, -3, 7, 1}));
  CHECK(y == Tensor({3}, {0.5, -1.0, 2.0}));
}

TEST_CASE("3x3 all-ones kernel with zero padding on a ones image") {
  GraphBuilder b({1, 3, 3});
  b.conv2d(GraphBuilder::input(), 1, 3, 1, 1);
  ModelGraph g = std::move(b).finish();
  fill(g.parameter(1, 0), 1.0);
  const Tensor y = predict_logits(g, Tensor({1, 3, 3}, 1.0));
  CHECK(y.at(0, 1, 1) == 9.0);
  CHECK(y.at(0, 0, 0) == 4.0);
  CHECK(y.at(0, 0, 2) == 4.0);
  CHECK(y.at(0, 2, 0) == 4.0);
  CHECK(y.at(0, 2, 2) == 4.0);
  CHECK(y.at(0, 0, 1) == 6.0);
}

TEST_CASE("strided convolution output shape and values") {
  GraphBuilder b({1, 4, 4});
  const auto c = b.conv2d(GraphBuilder::input(), 1, 2, 2, 0);
  CHECK(b.shape_of(c) == Shape{1, 2, 2});
  ModelGraph g = std::move(b).finish();
  fill(g.parameter(1, 0), 1.0);
  Tensor x({1, 4, 4});
  for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i);
  const Tensor y = predict_logits(g, x);
  CHECK(y.at(0, 0, 0) == 0 + 1 + 4 + 5);
  CHECK(y.at(0, 1, 1) == 10 + 11 + 14 + 15);
}

TEST_CASE("max pool, global average pool, concat and add") {
  GraphBuilder b({2, 2, 2});
  const auto p = b.max_pool(GraphBuilder::input());
  const auto a = b.global_avg_pool(GraphBuilder::input());
  const auto pf = b.flatten(p);
  const auto cat = b.concat({pf, a});
  b.add({cat, cat});
  const ModelGraph g = std::move(b).finish();
  const Tensor x({2, 2, 2}, {1, 5, 2, 3, -1, -2, -3, -4});
  const Tensor y = predict_logits(g, x);
  CHECK(y == Tensor({4}, {10, -2, 5.5, -5}));
}

TEST_CASE("parameter counts") {
  {
    GraphBuilder b({10});
    b.dense(GraphBuilder::input(), 5);
    CHECK(count_parameters(std::move(b).finish()) == 55);
  }
  {
    GraphBuilder b({1, 6, 6});
    b.conv2d(GraphBuilder::input(), 8, 3);
    CHECK(count_parameters(std::move(b).finish()) == 80);
  }
  CHECK(count_parameters(ModelGraph{}) == 0);
  CHECK(count_parameters(GraphBuilder({1, 4, 4}).finish()) == 0);
}

TEST_CASE("shape errors name the offending node") {
  GraphBuilder b({1, 4, 4});
  const auto c1 = b.conv2d(GraphBuilder::input(), 2, 3, 1, std::nullopt, "left");
  const auto c2 = b.conv2d(GraphBuilder::input(), 3, 3, 1, std::nullopt, "right");
  try {
    b.add({c1, c2}, "merge");
    FAIL("expected shape_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == "shape_mismatch");
    CHECK(std::string(e.what()).find("merge") != std::string::npos);
  }
  CHECK_THROWS_AS(b.dense(GraphBuilder::input(), 3), Error);
}

TEST_CASE("graphs with dangling nodes are rejected") {
  GraphBuilder b({4});
  b.dense(GraphBuilder::input(), 2, "unused");
  b.dense(GraphBuilder::input(), 2, "out");
  try {
    std::move(b).finish();
    FAIL("expected invalid_graph");
  } catch (const Error& e) {
    CHECK(e.code() == "invalid_graph");
  }
}

TEST_CASE("forward rejects a wrongly shaped input") {
  GraphBuilder b({1, 4, 4});
  b.global_avg_pool(GraphBuilder::input());
  const ModelGraph g = std::move(b).finish();
  try {
    forward(g, Tensor({1, 4, 5}));
    FAIL("expected shape_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == "shape_mismatch");
  }
}
