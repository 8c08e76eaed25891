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
#include <string>
#include <vector>

#include "json.hpp"

#include "attriblab/labels.hpp"
#include "attriblab/tensor.hpp"

namespace attriblab {

struct ClassCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
};

struct ConfusionCounts {
  std::vector<ClassCounts> per_class;
  std::size_t samples = 0;
};

/// Per-class decision counts. Throws Error("length_mismatch").
ConfusionCounts accumulate(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& targets,
                           std::size_t num_classes);

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Metric computed per class, then averaged uniformly over classes. A 0/0 cell
/// counts as 0 and appends a note to `warnings` when given.
Scores macro_metrics(const ConfusionCounts& counts, std::vector<std::string>* warnings = nullptr);

/// Counts summed over classes first, metric computed once.
Scores micro_metrics(const ConfusionCounts& counts, std::vector<std::string>* warnings = nullptr);

struct MetricReport {
  Scores macro;
  Scores micro;
  std::size_t samples = 0;
  std::vector<std::string> warnings;
};

MetricReport make_report(const ConfusionCounts& counts);

/// Mean and population standard deviation of each metric across reports (folds).
struct ReportSummary {
  MetricReport mean;
  MetricReport std_dev;
  std::size_t folds = 0;
};

ReportSummary summarize(const std::vector<MetricReport>& reports);

nlohmann::json to_json(const MetricReport& report);
nlohmann::json to_json(const ReportSummary& summary);
/// `name,averaging,precision,recall,f1` rows.
std::string to_csv(const std::vector<std::pair<std::string, MetricReport>>& reports);
std::string to_csv(const ReportSummary& summary);

Tensor sigmoid(const Tensor& logits);

/// Soft vote: per-class arithmetic mean of the models' probabilities.
/// Throws Error("empty_input") for no models and Error("shape_mismatch") for unequal lengths.
Tensor ensemble(const std::vector<Tensor>& probabilities);

/// Classes with probability >= threshold.
LabelSet threshold_labels(const Tensor& probabilities, double threshold);

}  // namespace attriblab
