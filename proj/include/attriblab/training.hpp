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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "attriblab/graph.hpp"
#include "attriblab/manifest.hpp"
#include "attriblab/tensor.hpp"

namespace attriblab {

struct TrainConfig {
  double lr = 0.001;
  double weight_decay = 0.0001;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
  double threshold = 0.5;

  /// Throws Error("invalid_config").
  void validate() const;
};

/// Mean over classes of max(z,0) - z*y + log(1 + exp(-|z|)).
double bce_with_logits(const Tensor& logits, std::span<const double> targets);

/// d bce / d z = (sigmoid(z) - y) / C.
Tensor bce_with_logits_grad(const Tensor& logits, std::span<const double> targets);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update. Weight decay is the classical L2 form: wd * theta
/// is added to the gradient before the moment updates. State is sized on first use.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, const TrainConfig& cfg);

/// Same update applied to every parameter of `graph`; `grads` as produced by
/// backward_with_parameters.
void adam_step(ModelGraph& graph, const std::vector<std::vector<Tensor>>& grads, AdamState& state,
               const TrainConfig& cfg);

struct SubjectSplit {
  std::vector<std::string> train;  // sorted
  std::vector<std::string> test;   // sorted
};

/// Subject-level split: round(train_fraction * n) shuffled subjects train, the rest test.
/// Throws Error("too_few_subjects") when either side would be empty.
SubjectSplit split_subjects(const Manifest& manifest, std::uint64_t seed, double train_fraction = 0.6);

/// k disjoint subject folds (each sorted) whose sizes differ by at most one.
/// Throws Error("too_few_subjects") when there are fewer subjects than folds.
std::vector<std::vector<std::string>> kfold(const std::vector<std::string>& subjects, std::size_t k,
                                            std::uint64_t seed);
std::vector<std::vector<std::string>> kfold(const Manifest& manifest, std::size_t k, std::uint64_t seed);

struct Sample {
  Tensor image;                 // model input, 1 x S x S
  std::vector<double> target;   // 0/1 per class, ancestor-closed
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean sample loss seen during the epoch
  double micro_f1 = 0.0;  // on the same running predictions
};

struct TrainResult {
  ModelGraph model;
  std::vector<EpochLog> log;
};

/// Mini-batch Adam on mean BCE-with-logits. Sample order is reshuffled each epoch
/// from cfg.seed. Throws Error("diverged") as soon as the loss is not finite.
TrainResult train(ModelGraph model, const std::vector<Sample>& samples, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

std::string format_epoch_log(const std::vector<EpochLog>& log);

}  // namespace attriblab
