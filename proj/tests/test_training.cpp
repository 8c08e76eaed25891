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
#include <set>

#include "doctest.h"
#include "oracles.hpp"

#include "attriblab/error.hpp"
#include "attriblab/manifest.hpp"
#include "attriblab/training.hpp"
#include "attriblab/zoo.hpp"

using namespace attriblab;

namespace {

// Unstabilized softplus form: log(1 + e^z) - y z.
double naive_bce(double z, double y) { return std::log(1.0 + std::exp(z)) - y * z; }

double sigmoid_log_bce(double z, double y) {
  const double p = 1.0 / (1.0 + std::exp(-z));
  return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
}

Manifest subjects_manifest(std::size_t subjects, std::size_t images_each) {
  std::string csv = "image_path,subject_id,labels\n";
  for (std::size_t s = 0; s < subjects; ++s) {
    for (std::size_t i = 0; i < images_each; ++i) {
      csv += "img_" + std::to_string(s) + "_" + std::to_string(i) + ".pgm,p" + std::to_string(s) + ",A\n";
    }
  }
  return parse_manifest(csv);
}

// Two classes told apart by which half of the image is bright.
std::vector<Sample> separable_set(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i % 2 == 0;
    Tensor img({1, 8, 8});
    for (std::size_t y = 0; y < 8; ++y)
      for (std::size_t x = 0; x < 8; ++x) img.at(0, y, x) = ((x < 4) == left ? 0.8 : 0.1) + rng.uniform(-0.05, 0.05);
    out.push_back({img, left ? std::vector<double>{1, 0} : std::vector<double>{0, 1}});
  }
  return out;
}

}  // namespace

TEST_CASE("BCE closed-form values") {
  CHECK(bce_with_logits(Tensor({1}, {0.0}), std::vector<double>{1}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const double saturated = bce_with_logits(Tensor({1}, {100.0}), std::vector<double>{1});
  CHECK(std::isfinite(saturated));
  CHECK(saturated < 1e-40);
  const double stable = bce_with_logits(Tensor({1}, {-100.0}), std::vector<double>{1});
  CHECK(std::isfinite(stable));
  CHECK(stable == doctest::Approx(100.0).epsilon(1e-15));
}

TEST_CASE("BCE agrees with the naive formula on moderate logits") {
  for (double z = -20.0; z <= 20.0; z += 0.25) {
    for (double y : {0.0, 1.0}) {
      const double stable = bce_with_logits(Tensor({1}, {z}), std::vector<double>{y});
      CHECK(std::abs(stable - naive_bce(z, y)) < 1e-12);
      // 1 - p cancels catastrophically here, so only a loose relative check.
      CHECK(stable == doctest::Approx(sigmoid_log_bce(z, y)).epsilon(1e-6));
    }
  }
  CHECK(bce_with_logits(Tensor({2}, {1.0, -2.0}), std::vector<double>{1, 0}) ==
        doctest::Approx((naive_bce(1.0, 1) + naive_bce(-2.0, 0)) / 2));
  CHECK_THROWS_AS(bce_with_logits(Tensor({2}), std::vector<double>{1}), Error);
}

TEST_CASE("BCE gradient matches finite differences") {
  const Tensor z({3}, {-2.0, 0.3, 5.0});
  const std::vector<double> y{1, 0, 1};
  const Tensor grad = bce_with_logits_grad(z, y);
  for (std::size_t i = 0; i < 3; ++i) {
    Tensor up = z, down = z;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    CHECK(grad[i] == doctest::Approx((bce_with_logits(up, y) - bce_with_logits(down, y)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("first Adam step has magnitude lr whatever the gradient scale") {
  for (double g : {1e-6, 0.5, 300.0, -42.0}) {
    std::vector<double> theta{1.0};
    const std::vector<double> grad{g};
    std::span<double> p(theta);
    std::span<const double> gs(grad);
    AdamState state;
    TrainConfig cfg;
    cfg.weight_decay = 0.0;
    adam_step(std::span<const std::span<double>>(&p, 1), std::span<const std::span<const double>>(&gs, 1), state, cfg);
    // m_hat / (sqrt(v_hat) + eps) = g / (|g| + eps)
    CHECK(theta[0] == doctest::Approx(1.0 - cfg.lr * g / (std::abs(g) + kAdamEpsilon)).epsilon(1e-12));
    CHECK(std::abs(1.0 - theta[0]) == doctest::Approx(cfg.lr).epsilon(1e-2));
  }
}

TEST_CASE("zero gradient without weight decay leaves parameters unchanged") {
  ModelGraph g = build({ArchId::PlainCNN, 16, 2, {}}, 1);
  const ModelGraph before = g;
  std::vector<std::vector<Tensor>> grads(g.size());
  for (std::size_t id = 0; id < g.size(); ++id) {
    for (const auto& p : g.node(id).params) grads[id].push_back(Tensor(p.value.shape()));
  }
  TrainConfig cfg;
  cfg.weight_decay = 0.0;
  AdamState state;
  for (int i = 0; i < 3; ++i) adam_step(g, grads, state, cfg);
  for (std::size_t id = 0; id < g.size(); ++id) {
    for (std::size_t k = 0; k < g.node(id).params.size(); ++k) {
      CHECK(bit_identical(g.node(id).params[k].value, before.node(id).params[k].value));
    }
  }
}

TEST_CASE("subject split sizes and disjointness") {
  const SubjectSplit split = split_subjects(subjects_manifest(10, 1), 0);
  CHECK(split.train.size() == 6);
  CHECK(split.test.size() == 4);
  std::set<std::string> all(split.train.begin(), split.train.end());
  all.insert(split.test.begin(), split.test.end());
  CHECK(all.size() == 10);
  CHECK(std::is_sorted(split.train.begin(), split.train.end()));
  CHECK_THROWS_AS(split_subjects(subjects_manifest(1, 3), 0), Error);
}

TEST_CASE("split keeps all images of a subject together") {
  const Manifest m = subjects_manifest(7, 3);
  const SubjectSplit split = split_subjects(m, 4);
  const Manifest train = m.subset(split.train), test = m.subset(split.test);
  CHECK(train.rows.size() + test.rows.size() == 21);
  CHECK(train.rows.size() % 3 == 0);
  for (const auto& row : test.rows) {
    CHECK_FALSE(std::binary_search(split.train.begin(), split.train.end(), row.subject_id));
  }
}

TEST_CASE("k-fold partitions subjects") {
  const Manifest m = subjects_manifest(10, 2);
  const auto folds = kfold(m, 5, 3);
  REQUIRE(folds.size() == 5);
  std::multiset<std::string> seen;
  for (const auto& f : folds) {
    CHECK(f.size() == 2);
    seen.insert(f.begin(), f.end());
  }
  CHECK(seen.size() == 10);
  CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == 10);
  CHECK(kfold(subjects_manifest(11, 1), 3, 0)[0].size() == 4);
  CHECK_THROWS_AS(kfold(m, 11, 0), Error);
  CHECK(kfold(m, 5, 3) == folds);
}

TEST_CASE("training drives the loss down on a separable set") {
  GraphBuilder b({1, 8, 8});
  b.dense(b.flatten(GraphBuilder::input()), 2);
  ModelGraph g = std::move(b).finish();
  initialize_parameters(g, 0);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 8;
  cfg.lr = 0.01;
  const auto result = train(g, separable_set(32, 1), cfg);
  REQUIRE(result.log.size() == 200);
  CHECK(result.log.back().loss < 0.05);
  CHECK(result.log.back().loss < result.log.front().loss);
  CHECK(result.log.back().micro_f1 == 1.0);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto data = separable_set(20, 2);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 3;
  cfg.seed = 9;
  const ModelGraph g = build({ArchId::MiniRes, 8, 2, {}}, 0);
  const auto a = train(g, data, cfg), b = train(g, data, cfg);
  for (std::size_t e = 0; e < a.log.size(); ++e) CHECK(a.log[e].loss == b.log[e].loss);
  for (std::size_t id = 0; id < a.model.size(); ++id) {
    for (std::size_t k = 0; k < a.model.node(id).params.size(); ++k) {
      CHECK(bit_identical(a.model.node(id).params[k].value, b.model.node(id).params[k].value));
    }
  }
  CHECK(format_epoch_log(a.log) == format_epoch_log(b.log));
  CHECK(format_epoch_log(a.log).rfind("epoch,loss,micro_f1\n", 0) == 0);
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.lr = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("a diverging run stops with an error") {
  GraphBuilder b({1, 8, 8});
  b.dense(b.flatten(GraphBuilder::input()), 2);
  ModelGraph g = std::move(b).finish();
  g.parameter(2, 1)[0] = std::nan("");
  try {
    train(g, separable_set(4, 0), TrainConfig{});
    FAIL("expected diverged");
  } catch (const Error& e) {
    CHECK(e.code() == "diverged");
  }
}
