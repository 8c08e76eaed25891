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

#include "attriblab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "attriblab/error.hpp"

namespace attriblab {

namespace {

double ratio(std::uint64_t num, std::uint64_t den, const std::string& what, std::vector<std::string>* warnings) {
  if (den == 0) {
    if (warnings) warnings->push_back(what + " is 0/0, counted as 0");
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

Scores scores_for(const ClassCounts& c, const std::string& label, std::vector<std::string>* warnings) {
  Scores s;
  s.precision = ratio(c.tp, c.tp + c.fp, label + " precision", warnings);
  s.recall = ratio(c.tp, c.tp + c.fn, label + " recall", warnings);
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json scores_json(const Scores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

}  // namespace

ConfusionCounts accumulate(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& targets,
                           std::size_t num_classes) {
  if (preds.size() != targets.size()) {
    throw Error("length_mismatch", std::to_string(preds.size()) + " predictions vs " +
                                       std::to_string(targets.size()) + " targets");
  }
  ConfusionCounts counts{std::vector<ClassCounts>(num_classes), preds.size()};
  for (std::size_t n = 0; n < preds.size(); ++n) {
    for (std::size_t i = 0; i < num_classes; ++i) {
      const bool p = preds[n].contains(i), t = targets[n].contains(i);
      auto& c = counts.per_class[i];
      if (p && t) ++c.tp;
      else if (p) ++c.fp;
      else if (t) ++c.fn;
      else ++c.tn;
    }
  }
  return counts;
}

Scores macro_metrics(const ConfusionCounts& counts, std::vector<std::string>* warnings) {
  Scores mean;
  const std::size_t classes = counts.per_class.size();
  if (classes == 0) return mean;
  for (std::size_t i = 0; i < classes; ++i) {
    const Scores s = scores_for(counts.per_class[i], "class " + std::to_string(i), warnings);
    mean.precision += s.precision;
    mean.recall += s.recall;
    mean.f1 += s.f1;
  }
  const auto p = static_cast<double>(classes);
  return {mean.precision / p, mean.recall / p, mean.f1 / p};
}

Scores micro_metrics(const ConfusionCounts& counts, std::vector<std::string>* warnings) {
  ClassCounts total;
  for (const auto& c : counts.per_class) {
    total.tp += c.tp;
    total.fp += c.fp;
    total.tn += c.tn;
    total.fn += c.fn;
  }
  return scores_for(total, "micro", warnings);
}

MetricReport make_report(const ConfusionCounts& counts) {
  MetricReport r;
  r.macro = macro_metrics(counts, &r.warnings);
  r.micro = micro_metrics(counts, &r.warnings);
  r.samples = counts.samples;
  return r;
}

ReportSummary summarize(const std::vector<MetricReport>& reports) {
  ReportSummary out;
  out.folds = reports.size();
  if (reports.empty()) return out;
  const auto n = static_cast<double>(reports.size());
  auto field = [](MetricReport& r, int k) -> double& {
    Scores& s = k < 3 ? r.macro : r.micro;
    switch (k % 3) {
      case 0: return s.precision;
      case 1: return s.recall;
      default: return s.f1;
    }
  };
  for (int k = 0; k < 6; ++k) {
    double mean = 0.0;
    for (auto r : reports) mean += field(r, k);
    mean /= n;
    double var = 0.0;
    for (auto r : reports) var += (field(r, k) - mean) * (field(r, k) - mean);
    field(out.mean, k) = mean;
    field(out.std_dev, k) = std::sqrt(var / n);
  }
  for (const auto& r : reports) {
    out.mean.samples += r.samples;
    out.mean.warnings.insert(out.mean.warnings.end(), r.warnings.begin(), r.warnings.end());
  }
  return out;
}

nlohmann::json to_json(const MetricReport& report) {
  return {{"macro", scores_json(report.macro)},
          {"micro", scores_json(report.micro)},
          {"samples", report.samples},
          {"warnings", report.warnings}};
}

nlohmann::json to_json(const ReportSummary& summary) {
  return {{"folds", summary.folds},
          {"mean", {{"macro", scores_json(summary.mean.macro)}, {"micro", scores_json(summary.mean.micro)}}},
          {"std", {{"macro", scores_json(summary.std_dev.macro)}, {"micro", scores_json(summary.std_dev.micro)}}},
          {"warnings", summary.mean.warnings}};
}

std::string to_csv(const std::vector<std::pair<std::string, MetricReport>>& reports) {
  std::string out = "name,averaging,precision,recall,f1\n";
  for (const auto& [name, r] : reports) {
    out += name + ",macro," + fmt(r.macro.precision) + "," + fmt(r.macro.recall) + "," + fmt(r.macro.f1) + "\n";
    out += name + ",micro," + fmt(r.micro.precision) + "," + fmt(r.micro.recall) + "," + fmt(r.micro.f1) + "\n";
  }
  return out;
}

std::string to_csv(const ReportSummary& s) {
  std::string out = "statistic,averaging,precision,recall,f1\n";
  auto row = [&](const char* stat, const char* avg, const Scores& sc) {
    out += std::string(stat) + "," + avg + "," + fmt(sc.precision) + "," + fmt(sc.recall) + "," + fmt(sc.f1) + "\n";
  };
  row("mean", "macro", s.mean.macro);
  row("mean", "micro", s.mean.micro);
  row("std", "macro", s.std_dev.macro);
  row("std", "micro", s.std_dev.micro);
  return out;
}

Tensor sigmoid(const Tensor& logits) {
  Tensor out = logits;
  for (auto& z : out.values()) {
    z = z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
  return out;
}

Tensor ensemble(const std::vector<Tensor>& probabilities) {
  if (probabilities.empty()) throw Error("empty_input", "ensemble needs at least one model");
  Tensor mean(probabilities.front().shape());
  Tensor lo = probabilities.front(), hi = probabilities.front();
  for (const auto& p : probabilities) {
    if (p.shape() != mean.shape()) {
      throw Error("shape_mismatch", "ensemble members disagree on class count: " + shape_string(p.shape()) +
                                        " vs " + shape_string(mean.shape()));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      mean[i] += p[i];
      lo[i] = std::min(lo[i], p[i]);
      hi[i] = std::max(hi[i], p[i]);
    }
  }
  // Rounding in the sum must not push the mean outside the members' range.
  const auto m = static_cast<double>(probabilities.size());
  for (std::size_t i = 0; i < mean.size(); ++i) mean[i] = std::clamp(mean[i] / m, lo[i], hi[i]);
  return mean;
}

LabelSet threshold_labels(const Tensor& probabilities, double threshold) {
  LabelSet out;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] >= threshold) out.insert(i);
  }
  return out;
}

}  // namespace attriblab
