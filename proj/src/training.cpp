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

#include "attriblab/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "attriblab/autodiff.hpp"
#include "attriblab/error.hpp"
#include "attriblab/metrics.hpp"
#include "attriblab/rng.hpp"

namespace attriblab {

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("invalid_config", "lr must be positive");
  if (!(weight_decay >= 0.0)) throw Error("invalid_config", "weight_decay must be non-negative");
  if (epochs < 1) throw Error("invalid_config", "epochs must be at least 1");
  if (batch_size < 1) throw Error("invalid_config", "batch_size must be at least 1");
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("invalid_config", "threshold must lie in (0, 1)");
}

double bce_with_logits(const Tensor& logits, std::span<const double> targets) {
  if (logits.size() != targets.size()) throw Error("shape_mismatch", "logits and targets differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    total += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(logits.size());
}

Tensor bce_with_logits_grad(const Tensor& logits, std::span<const double> targets) {
  if (logits.size() != targets.size()) throw Error("shape_mismatch", "logits and targets differ in length");
  Tensor g = sigmoid(logits);
  const double inv = 1.0 / static_cast<double>(logits.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = (g[i] - targets[i]) * inv;
  return g;
}

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState& state, const TrainConfig& cfg) {
  if (params.size() != grads.size()) throw Error("shape_mismatch", "parameter and gradient counts differ");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), 0.0);
      state.v.emplace_back(p.size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw Error("shape_mismatch", "optimizer state does not match parameters");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(kAdamBeta1, t);
  const double correction2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    auto& m = state.m[k];
    auto& v = state.v[k];
    if (g.size() != p.size() || m.size() != p.size()) throw Error("shape_mismatch", "gradient shape differs from parameter");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] + cfg.weight_decay * p[i];
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * gi;
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * gi * gi;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + kAdamEpsilon);
    }
  }
}

void adam_step(ModelGraph& graph, const std::vector<std::vector<Tensor>>& grads, AdamState& state,
               const TrainConfig& cfg) {
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> gs;
  for (std::size_t id = 0; id < graph.size(); ++id) {
    for (std::size_t k = 0; k < graph.node(id).params.size(); ++k) {
      params.push_back(graph.parameter(id, k).values());
      gs.push_back(grads.at(id).at(k).values());
    }
  }
  adam_step(std::span<const std::span<double>>(params), std::span<const std::span<const double>>(gs), state, cfg);
}

SubjectSplit split_subjects(const Manifest& manifest, std::uint64_t seed, double train_fraction) {
  auto subjects = manifest.subjects();
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(subjects.size())));
  if (n_train == 0 || n_train >= subjects.size()) {
    throw Error("too_few_subjects", "cannot split " + std::to_string(subjects.size()) + " subjects into train/test");
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(subjects));
  SubjectSplit split{{subjects.begin(), subjects.begin() + static_cast<std::ptrdiff_t>(n_train)},
                     {subjects.begin() + static_cast<std::ptrdiff_t>(n_train), subjects.end()}};
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<std::vector<std::string>> kfold(const std::vector<std::string>& subjects, std::size_t k,
                                            std::uint64_t seed) {
  if (k < 2) throw Error("invalid_config", "k-fold needs at least 2 folds");
  if (subjects.size() < k) {
    throw Error("too_few_subjects", std::to_string(subjects.size()) + " subjects cannot fill " + std::to_string(k) + " folds");
  }
  auto order = subjects;
  std::sort(order.begin(), order.end());
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(order));
  std::vector<std::vector<std::string>> folds(k);
  for (std::size_t i = 0; i < order.size(); ++i) folds[i % k].push_back(order[i]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<std::vector<std::string>> kfold(const Manifest& manifest, std::size_t k, std::uint64_t seed) {
  return kfold(manifest.subjects(), k, seed);
}

TrainResult train(ModelGraph model, const std::vector<Sample>& samples, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (samples.empty()) throw Error("empty_input", "no training samples");
  const std::size_t classes = model.num_outputs();
  for (const auto& s : samples) {
    if (s.target.size() != classes) throw Error("shape_mismatch", "target length differs from model outputs");
  }

  Rng rng(cfg.seed);
  AdamState state;
  TrainResult result;
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::vector<LabelSet> preds, targets;
    preds.reserve(samples.size());
    targets.reserve(samples.size());

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::vector<Tensor>> batch_grads;
      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = samples[order[b]];
        const ActivationRecord record = forward(model, s.image);
        const Tensor& z = record.logits();
        const double loss = bce_with_logits(z, s.target);
        if (!std::isfinite(loss)) {
          throw Error("diverged", "non-finite loss at epoch " + std::to_string(epoch) + ", sample " + std::to_string(order[b]));
        }
        loss_sum += loss;
        preds.push_back(threshold_labels(sigmoid(z), cfg.threshold));
        LabelSet t;
        for (std::size_t c = 0; c < classes; ++c) {
          if (s.target[c] > 0.5) t.insert(c);
        }
        targets.push_back(t);

        Gradients g = backward_with_parameters(model, record, bce_with_logits_grad(z, s.target));
        if (batch_grads.empty()) {
          batch_grads = std::move(g.params);
        } else {
          for (std::size_t id = 0; id < batch_grads.size(); ++id) {
            for (std::size_t k = 0; k < batch_grads[id].size(); ++k) batch_grads[id][k] += g.params[id][k];
          }
        }
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto& node : batch_grads) {
        for (auto& t : node) t *= inv;
      }
      adam_step(model, batch_grads, state, cfg);
    }

    EpochLog entry{epoch, loss_sum / static_cast<double>(samples.size()),
                   micro_metrics(accumulate(preds, targets, classes)).f1};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  result.model = std::move(model);
  return result;
}

std::string format_epoch_log(const std::vector<EpochLog>& log) {
  std::string out = "epoch,loss,micro_f1\n";
  char buf[96];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e.epoch, e.loss, e.micro_f1);
    out += buf;
  }
  return out;
}

}  // namespace attriblab
