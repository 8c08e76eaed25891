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
#include "oracles.hpp"

#include "attriblab/attribution.hpp"
#include "attriblab/error.hpp"
#include "attriblab/zoo.hpp"

using namespace attriblab;

namespace {

// logit = w . x + b over a 1 x 3 x 3 image.
ModelGraph linear_model(std::vector<double> w, double b = 0.0) {
  GraphBuilder builder({1, 3, 3});
  builder.dense(builder.flatten(GraphBuilder::input()), 1);
  ModelGraph g = std::move(builder).finish();
  g.parameter(2, 0) = Tensor({1, 9}, std::move(w));
  g.parameter(2, 1)[0] = b;
  return g;
}

ModelGraph pixel_sum(std::size_t side) {
  GraphBuilder builder({1, side, side});
  builder.dense(builder.flatten(GraphBuilder::input()), 1);
  ModelGraph g = std::move(builder).finish();
  for (auto& v : g.parameter(2, 0).values()) v = 1.0;
  return g;
}

const std::vector<double> kWeights{0.5, -1.0, 2.0, 0.25, 0.0, -0.75, 1.5, -2.0, 1.0};

Tensor sample_input() { return Tensor({1, 3, 3}, {0.1, 0.9, 0.4, 0.3, 0.7, 0.2, 0.8, 0.6, 0.5}); }

}  // namespace

TEST_CASE("occlusion window starts clip the last window to the border") {
  CHECK(occlusion_starts(32, 8, 4) == std::vector<std::size_t>{0, 4, 8, 12, 16, 20, 24});
  CHECK(occlusion_starts(10, 4, 4) == std::vector<std::size_t>{0, 4, 8});
  CHECK(occlusion_starts(8, 8, 3) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS((OcclusionConfig{9, 4, 0.5, 1}.validate(8, 8)), Error);
  CHECK_THROWS_AS((OcclusionConfig{4, 5, 0.5, 1}.validate(8, 8)), Error);
}

TEST_CASE("occlusion on a pixel-sum model") {
  const ModelGraph g = pixel_sum(6);
  Rng rng(2);
  const Tensor x = oracle::random_tensor({1, 6, 6}, rng);
  const OcclusionConfig cfg{4, 2, 0.25, 1};
  const AttributionMap map = occlusion(g, x, 0, cfg);
  CHECK(bit_identical(map.values, oracle::naive_occlusion(g, x, 0, 4, 2, 0.25)));

  // Closed form: each window lowers the logit by S - gA.
  const double logit = sum(x);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t xx = 0; xx < 6; ++xx) {
      double total = 0.0;
      int windows = 0;
      for (std::size_t y0 : {0, 2}) {
        for (std::size_t x0 : {0, 2}) {
          if (y < y0 || y >= y0 + 4 || xx < x0 || xx >= x0 + 4) continue;
          double s = 0.0;
          for (std::size_t a = y0; a < y0 + 4; ++a)
            for (std::size_t b = x0; b < x0 + 4; ++b) s += x.at(0, a, b);
          total += oracle::sigmoid(logit) - oracle::sigmoid(logit - (s - 0.25 * 16));
          ++windows;
        }
      }
      CHECK(map.values.at(0, y, xx) == doctest::Approx(total / windows).epsilon(1e-12));
    }
  }
}

TEST_CASE("occlusion is independent of the thread count") {
  const ModelGraph g = build({ArchId::MiniInception, 16, 2, {}}, 3);
  Rng rng(6);
  const Tensor x = oracle::random_tensor({1, 16, 16}, rng);
  const AttributionMap serial = occlusion(g, x, 1, {4, 2, 0.5, 1});
  for (std::size_t threads : {2, 3, 0}) CHECK(bit_identical(occlusion(g, x, 1, {4, 2, 0.5, threads}).values, serial.values));
}

TEST_CASE("occlusion edge cases") {
  const ModelGraph constant = linear_model(std::vector<double>(9, 0.0), 1.0);
  CHECK(max_abs(occlusion(constant, sample_input(), 0, {2, 1, 0.0, 1}).values) == 0.0);
  const ModelGraph g = linear_model(kWeights);
  CHECK(max_abs(occlusion(g, Tensor({1, 3, 3}, 0.5), 0, {2, 1, 0.5, 1}).values) == 0.0);
}

TEST_CASE("gradient maps on a linear model") {
  const ModelGraph g = linear_model(kWeights, 0.3);
  const Tensor x = sample_input();
  const Tensor w({1, 3, 3}, kWeights);
  CHECK(saliency(g, x, 0).values == w);
  CHECK(guided_backprop(g, x, 0).values == w);
  CHECK(input_x_gradient(g, x, 0).values == hadamard(w, x));
  CHECK(max_abs(input_x_gradient(g, Tensor({1, 3, 3}), 0).values) == 0.0);
  CHECK(integrated_gradients(g, x, Tensor({1, 3, 3}), 0, 7).values == hadamard(w, x));
  CHECK(integrated_gradients(g, x, Tensor({1, 3, 3}), 0, 1).values == input_x_gradient(g, x, 0).values);
  const Tensor ref({1, 3, 3}, 0.2);
  CHECK(oracle::relative_error(deeplift_rescale(g, x, ref, 0).values, hadamard(w, x - ref)) < 1e-15);
}

TEST_CASE("saliency matches finite differences and scales with the logits") {
  ModelGraph g = build({ArchId::PlainCNN, 16, 2, {}}, 4);
  Rng rng(8);
  const Tensor x = oracle::random_tensor({1, 16, 16}, rng);
  const auto fd = oracle::central_difference(g, x, 1, 1e-5);
  REQUIRE(fd.smooth);
  CHECK(oracle::relative_error(saliency(g, x, 1).values, fd.gradient) < 1e-4);

  const Tensor before = saliency(g, x, 1).values;
  const auto head = *g.find("head");
  g.parameter(head, 0) *= 2.0;
  g.parameter(head, 1) *= 2.0;
  CHECK(bit_identical(saliency(g, x, 1).values, before * 2.0));
}

TEST_CASE("guided backprop equals saliency without ReLUs") {
  GraphBuilder b({1, 5, 5});
  b.dense(b.global_avg_pool(b.conv2d(GraphBuilder::input(), 2, 3)), 2);
  ModelGraph g = std::move(b).finish();
  initialize_parameters(g, 0);
  Rng rng(1);
  const Tensor x = oracle::random_tensor({1, 5, 5}, rng);
  CHECK(bit_identical(guided_backprop(g, x, 1).values, saliency(g, x, 1).values));
}

TEST_CASE("integrated gradients midpoint rule across a ReLU kink") {
  // f(x) = ReLU(x - 0.3) on a 1 x 1 x 1 input; the gradient is 1 for path points
  // (k - 1/2) / 64 > 0.3, i.e. k = 20..64.
  GraphBuilder b({1, 1, 1});
  b.relu(b.conv2d(GraphBuilder::input(), 1, 1));
  ModelGraph g = std::move(b).finish();
  g.parameter(1, 0)[0] = 1.0;
  g.parameter(1, 1)[0] = -0.3;
  const AttributionMap map = integrated_gradients(g, Tensor({1, 1, 1}, 1.0), Tensor({1, 1, 1}), 0, 64);
  CHECK(map.values[0] == 45.0 / 64.0);
  CHECK(map.metadata["delta"].get<double>() == doctest::Approx(0.7));
}

TEST_CASE("zero path gives zero maps") {
  const ModelGraph g = build({ArchId::MiniDense, 16, 2, {}}, 1);
  Rng rng(4);
  const Tensor x = oracle::random_tensor({1, 16, 16}, rng);
  CHECK(max_abs(integrated_gradients(g, x, x, 0, 16).values) == 0.0);
  CHECK(max_abs(deeplift_rescale(g, x, x, 0).values) == 0.0);
}

TEST_CASE("DeepLIFT on a single ReLU") {
  GraphBuilder b({1, 1, 1});
  b.relu(GraphBuilder::input());
  const ModelGraph g = std::move(b).finish();
  const AttributionMap map = deeplift_rescale(g, Tensor({1, 1, 1}, 3.0), Tensor({1, 1, 1}, -1.0), 0);
  CHECK(map.values[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(std::abs(map.metadata["completeness_residual"].get<double>()) < 1e-15);
}

TEST_CASE("DeepLIFT sums to the logit difference on zoo models") {
  for (ArchId arch : kAllArchs) {
    const ModelGraph g = build({arch, 16, 3, {}}, 2);
    Rng rng(3);
    const Tensor x = oracle::random_tensor({1, 16, 16}, rng);
    const Tensor ref = oracle::random_tensor({1, 16, 16}, rng);
    const AttributionMap map = deeplift_rescale(g, x, ref, 2);
    CAPTURE(arch_name(arch));
    CHECK(std::abs(sum(map.values) - (oracle::logit(g, x, 2) - oracle::logit(g, ref, 2))) < 1e-9);
  }
}

TEST_CASE("attribute_all produces one map per label and method") {
  const ModelGraph g = build({ArchId::PlainCNN, 16, 3, {}}, 0);
  Rng rng(5);
  const Tensor x = oracle::random_tensor({1, 16, 16}, rng);
  AttributionSettings settings;
  settings.occlusion = {8, 4, 0.5, 1};
  settings.ig_steps = 8;
  const std::vector<Method> all(std::begin(kAllMethods), std::end(kAllMethods));
  const auto maps = attribute_all(g, x, {0, 1, 2}, all, settings);
  REQUIRE(maps.size() == 18);
  CHECK(maps[7].class_index == 1);
  CHECK(maps[7].method == Method::Saliency);
  CHECK(attribute_all(g, x, {}, all, settings).empty());

  std::vector<Method> reversed(all.rbegin(), all.rend());
  const auto again = attribute_all(g, x, {2, 1, 0}, reversed, settings);
  for (const auto& m : maps) {
    const auto& twin = again[(2 - m.class_index) * 6 + (5 - static_cast<std::size_t>(m.method))];
    CHECK(twin.method == m.method);
    CHECK(bit_identical(twin.values, m.values));
  }
}

TEST_CASE("method names round trip") {
  for (Method m : kAllMethods) CHECK(parse_method(method_name(m)) == m);
  CHECK_FALSE(parse_method("lime").has_value());
}

TEST_CASE("heatmap export") {
  const Heatmap hm = to_heatmap(Tensor({1, 1, 4}, {-2.0, 0.0, 1.0, 2.0}));
  CHECK(hm.pixels == std::vector<std::uint8_t>{0, 128, 191, 255});
  CHECK_FALSE(hm.all_zero);
  const Heatmap flat = to_heatmap(Tensor({2, 2}));
  CHECK(flat.all_zero);
  CHECK(flat.pixels == std::vector<std::uint8_t>(4, 128));
  CHECK_THROWS_AS(to_heatmap(Tensor({2, 2, 2})), Error);
  CHECK(map_to_csv({Tensor({1, 2, 2}, {0.5, -1, 2, 0.25}), Method::Saliency, 0, {}}) == "0.5,-1\n2,0.25\n");
}
