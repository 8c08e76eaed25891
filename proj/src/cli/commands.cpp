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

#include "attriblab/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "attriblab/attribution.hpp"
#include "attriblab/autodiff.hpp"
#include "attriblab/config.hpp"
#include "attriblab/error.hpp"
#include "attriblab/image_io.hpp"
#include "attriblab/labels.hpp"
#include "attriblab/manifest.hpp"
#include "attriblab/metrics.hpp"
#include "attriblab/preprocess.hpp"
#include "attriblab/serialize.hpp"
#include "attriblab/synthetic.hpp"
#include "attriblab/training.hpp"
#include "attriblab/zoo.hpp"

#ifndef ATTRIBLAB_VERSION
#define ATTRIBLAB_VERSION "0.0.0"
#endif

namespace attriblab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Output helpers

void claim_outputs(const fs::path& dir, const std::vector<std::string>& names, bool force) {
  fs::create_directories(dir);
  if (force) return;
  for (const auto& n : names) {
    if (fs::exists(dir / n)) {
      throw Error("output_exists", (dir / n).string() + " exists (use --force to overwrite)");
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << text;
  if (!out) throw Error("io_error", "failed writing " + path.string());
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Run configuration: defaults < config file < ATTRIBLAB_SEED < flags

struct Overrides {
  std::string config;
  std::string manifest;
  std::string hierarchy;
  std::string out;
  std::string arch;
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  std::size_t epochs = 0;
  std::size_t batch_size = 0;
  std::size_t input_side = 0;
  std::size_t target_side = 0;
  double lr = 0.0;
  double weight_decay = 0.0;
  bool force = false;
  std::map<std::string, CLI::Option*> given;

  bool has(const std::string& name) const {
    const auto it = given.find(name);
    return it != given.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App* cmd, Overrides& o, bool training_flags) {
  o.given["config"] = cmd->add_option("--config", o.config, "JSON run config");
  o.given["manifest"] = cmd->add_option("--manifest", o.manifest, "manifest CSV");
  o.given["hierarchy"] = cmd->add_option("--hierarchy", o.hierarchy, "label hierarchy edge list");
  o.given["out"] = cmd->add_option("--out", o.out, "output directory");
  o.given["seed"] = cmd->add_option("--seed", o.seed, "random seed");
  o.given["folds"] = cmd->add_option("--folds", o.folds, "number of CV folds");
  cmd->add_flag("--force", o.force, "overwrite existing outputs");
  if (!training_flags) return;
  o.given["arch"] = cmd->add_option("--arch", o.arch, "architecture id");
  o.given["epochs"] = cmd->add_option("--epochs", o.epochs, "training epochs");
  o.given["batch-size"] = cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
  o.given["input-side"] = cmd->add_option("--input-side", o.input_side, "model input side");
  o.given["target-side"] = cmd->add_option("--target-side", o.target_side, "preprocessing target side");
  o.given["lr"] = cmd->add_option("--lr", o.lr, "Adam learning rate");
  o.given["weight-decay"] = cmd->add_option("--weight-decay", o.weight_decay, "L2 weight decay");
}

RunConfig resolve_config(const Overrides& o) {
  RunConfig cfg = o.has("config") ? load_run_config(o.config) : RunConfig{};
  if (const char* env = std::getenv("ATTRIBLAB_SEED"); env && *env) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw Error("invalid_config", "ATTRIBLAB_SEED is not an unsigned integer");
    }
  }
  if (o.has("seed")) cfg.seed = o.seed;
  if (o.has("manifest")) cfg.paths.manifest = o.manifest;
  if (o.has("hierarchy")) cfg.paths.hierarchy = o.hierarchy;
  if (o.has("out")) cfg.paths.output_dir = o.out;
  if (o.has("folds")) cfg.folds = o.folds;
  if (o.has("arch")) {
    const auto a = parse_arch(o.arch);
    if (!a) throw Error("invalid_config", "unknown arch '" + o.arch + "'");
    if (*a != cfg.arch.arch) cfg.arch.widths.clear();
    cfg.arch.arch = *a;
  }
  if (o.has("epochs")) cfg.train.epochs = o.epochs;
  if (o.has("batch-size")) cfg.train.batch_size = o.batch_size;
  if (o.has("input-side")) cfg.arch.input_side = o.input_side;
  if (o.has("target-side")) cfg.preprocess.target_side = o.target_side;
  if (o.has("lr")) cfg.train.lr = o.lr;
  if (o.has("weight-decay")) cfg.train.weight_decay = o.weight_decay;
  cfg.train.seed = cfg.seed;
  cfg.validate();
  if (cfg.paths.manifest.empty()) throw Error("invalid_config", "no manifest given (--manifest or paths.manifest)");
  return cfg;
}

LabelGraph load_hierarchy(const RunConfig& cfg) {
  return cfg.paths.hierarchy.empty() ? LabelGraph::pneumonia() : LabelGraph::load(cfg.paths.hierarchy);
}

LabelGraph hierarchy_of(const ModelFile& model) { return LabelGraph(model.labels, model.parents); }

// ---------------------------------------------------------------------------
// Data loading

std::vector<double> target_vector(LabelSet set, std::size_t classes) {
  std::vector<double> t(classes, 0.0);
  for (auto i : set.indices()) t[i] = 1.0;
  return t;
}

LabelSet expanded_targets(const ManifestRow& row, const LabelGraph& labels) {
  try {
    return labels.expand(labels.parse(row.labels));
  } catch (const Error& e) {
    throw Error(e.code(), row.image_path + ": " + e.what());
  }
}

Tensor load_model_input(const fs::path& path, const PreprocessConfig& pre, std::size_t side,
                        std::vector<std::string>& warnings) {
  const PreprocessedImage img = preprocess(read_image(path), pre);
  for (const auto& w : img.warnings) warnings.push_back(path.filename().string() + ": " + w);
  return to_model_input(img.image, side);
}

std::vector<Sample> load_samples(const Manifest& manifest, const LabelGraph& labels, const PreprocessConfig& pre,
                                 std::size_t side, std::vector<std::string>& warnings) {
  std::vector<Sample> samples;
  samples.reserve(manifest.rows.size());
  for (const auto& row : manifest.rows) {
    const LabelSet target = expanded_targets(row, labels);
    samples.push_back({load_model_input(manifest.resolve(row), pre, side, warnings), target_vector(target, labels.size())});
  }
  return samples;
}

LabelSet target_set(const Sample& s) {
  LabelSet t;
  for (std::size_t i = 0; i < s.target.size(); ++i) {
    if (s.target[i] > 0.5) t.insert(i);
  }
  return t;
}

std::vector<Tensor> predict_probabilities(const ModelGraph& model, const std::vector<Sample>& samples) {
  std::vector<Tensor> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(sigmoid(predict_logits(model, s.image)));
  return out;
}

MetricReport score(const std::vector<Tensor>& probs, const std::vector<Sample>& samples, double threshold,
                   std::size_t classes) {
  std::vector<LabelSet> preds, targets;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    preds.push_back(threshold_labels(probs[i], threshold));
    targets.push_back(target_set(samples[i]));
  }
  return make_report(attriblab::accumulate(preds, targets, classes));
}

json model_metadata(const RunConfig& cfg, std::optional<std::size_t> fold) {
  json meta = {{"arch", to_json(cfg.arch)},
               {"preprocess", to_json(cfg.preprocess)},
               {"train", to_json(cfg.train)},
               {"seed", cfg.seed}};
  meta["fold"] = fold ? json(*fold) : json(nullptr);
  return meta;
}

PreprocessConfig model_preprocess(const ModelFile& model) {
  return model.metadata.contains("preprocess") ? preprocess_from_json(model.metadata.at("preprocess"))
                                               : PreprocessConfig{};
}

double model_threshold(const ModelFile& model) {
  if (model.metadata.contains("train") && model.metadata.at("train").contains("threshold")) {
    return model.metadata.at("train").at("threshold").get<double>();
  }
  return 0.5;
}

std::size_t model_side(const ModelFile& model) { return model.graph.input_shape().at(1); }

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const SyntheticConfig& scfg, const std::string& out_dir, bool force, std::ostream& out) {
  const fs::path dir(out_dir);
  claim_outputs(dir, {"manifest.csv", "hierarchy.txt", "config.json", "images"}, force);
  const Manifest manifest = write_synthetic_dataset(dir, scfg);

  RunConfig cfg;
  cfg.seed = scfg.seed;
  cfg.preprocess.target_side = scfg.side;
  cfg.arch.arch = ArchId::PlainCNN;
  cfg.arch.input_side = scfg.side;
  cfg.occlusion.window = std::max<std::size_t>(4, scfg.side / 4);
  cfg.occlusion.stride = cfg.occlusion.window / 2;
  cfg.paths.manifest = "manifest.csv";
  cfg.paths.hierarchy = "hierarchy.txt";
  cfg.paths.output_dir = "run";
  write_json(dir / "config.json", to_json(cfg));
  out << "wrote " << manifest.rows.size() << " images for " << manifest.subjects().size() << " subjects to "
      << dir.string() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ingest

int cmd_ingest(const RunConfig& cfg, bool force, std::ostream& out) {
  const Manifest manifest = load_manifest(cfg.paths.manifest);
  const LabelGraph labels = load_hierarchy(cfg);
  const fs::path dir(cfg.paths.output_dir);

  std::vector<std::size_t> raw(labels.size(), 0), expanded(labels.size(), 0);
  std::map<std::string, std::size_t> combinations;
  for (const auto& row : manifest.rows) {
    const LabelSet raw_set = labels.parse(row.labels);
    const LabelSet full = expanded_targets(row, labels);
    for (auto i : raw_set.indices()) ++raw[i];
    for (auto i : full.indices()) ++expanded[i];
    std::string key;
    for (const auto& n : labels.names(raw_set)) key += (key.empty() ? "" : "+") + n;
    ++combinations[key];
    const fs::path image = manifest.resolve(row);
    const Tensor img = read_image(image);
    if (img.extent(0) < 2 || img.extent(1) < 2) {
      throw Error("unreadable_image", image.string() + ": image smaller than 2x2");
    }
  }

  const auto subjects = manifest.subjects();
  json raw_counts = json::object(), expanded_counts = json::object();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    raw_counts[labels.name(i)] = raw[i];
    expanded_counts[labels.name(i)] = expanded[i];
  }
  json summary = {{"images", manifest.rows.size()},
                  {"subjects", subjects.size()},
                  {"labels", labels.labels()},
                  {"raw_label_counts", raw_counts},
                  {"expanded_label_counts", expanded_counts},
                  {"combinations", combinations}};

  if (subjects.size() >= 2) {
    const SubjectSplit split = split_subjects(manifest, cfg.seed, cfg.train_fraction);
    summary["split"] = {{"train_subjects", split.train.size()},
                        {"test_subjects", split.test.size()},
                        {"train_images", manifest.subset(split.train).rows.size()},
                        {"test_images", manifest.subset(split.test).rows.size()}};
    if (split.train.size() >= cfg.folds) {
      json folds = json::array();
      for (const auto& f : kfold(split.train, cfg.folds, cfg.seed)) {
        folds.push_back({{"subjects", f.size()}, {"images", manifest.subset(f).rows.size()}});
      }
      summary["folds"] = folds;
    }
  }

  claim_outputs(dir, {"summary.json"}, force);
  write_json(dir / "summary.json", summary);
  out << summary.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / cv

struct PreparedData {
  Manifest manifest;
  LabelGraph labels;
  std::vector<Sample> samples;  // aligned with manifest.rows
  std::vector<std::string> warnings;
};

PreparedData prepare(const RunConfig& cfg) {
  Manifest manifest = load_manifest(cfg.paths.manifest);
  LabelGraph labels = load_hierarchy(cfg);
  std::vector<std::string> warnings;
  auto samples = load_samples(manifest, labels, cfg.preprocess, cfg.arch.input_side, warnings);
  return {std::move(manifest), std::move(labels), std::move(samples), std::move(warnings)};
}

std::vector<Sample> select(const PreparedData& data, const std::vector<std::string>& subjects) {
  std::vector<Sample> out;
  for (std::size_t i = 0; i < data.manifest.rows.size(); ++i) {
    if (std::binary_search(subjects.begin(), subjects.end(), data.manifest.rows[i].subject_id)) {
      out.push_back(data.samples[i]);
    }
  }
  return out;
}

std::vector<std::string> without(const std::vector<std::string>& all, const std::vector<std::string>& drop) {
  std::vector<std::string> out;
  std::set_difference(all.begin(), all.end(), drop.begin(), drop.end(), std::back_inserter(out));
  return out;
}

TrainResult fit(const RunConfig& cfg, const LabelGraph& labels, const std::vector<Sample>& samples,
                std::uint64_t seed, std::ostream& out, const std::string& tag) {
  ArchSpec arch = cfg.arch;
  arch.num_classes = labels.size();
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  return train(build(arch, seed), samples, tc, [&](const EpochLog& e) {
    out << tag << " epoch " << e.epoch << " loss " << fmt(e.loss) << " micro_f1 " << fmt(e.micro_f1) << "\n";
  });
}

ModelFile package(const RunConfig& cfg, const LabelGraph& labels, ModelGraph graph, std::optional<std::size_t> fold) {
  return {std::move(graph), labels.labels(), labels.parent_names(), model_metadata(cfg, fold)};
}

int cmd_train(const RunConfig& cfg, bool force, std::ostream& out) {
  const fs::path dir(cfg.paths.output_dir);
  const std::vector<std::string> outputs{"model.json", "train_log.csv", "report.json", "report.csv", "test_manifest.csv"};
  const Manifest manifest = load_manifest(cfg.paths.manifest);
  const SubjectSplit split = split_subjects(manifest, cfg.seed, cfg.train_fraction);
  claim_outputs(dir, outputs, force);

  const PreparedData data = prepare(cfg);
  const auto train_samples = select(data, split.train);
  const auto test_samples = select(data, split.test);
  TrainResult result = fit(cfg, data.labels, train_samples, cfg.seed, out, "train");

  MetricReport report = score(predict_probabilities(result.model, test_samples), test_samples, cfg.train.threshold,
                              data.labels.size());
  report.warnings.insert(report.warnings.begin(), data.warnings.begin(), data.warnings.end());
  save_model(package(cfg, data.labels, std::move(result.model), std::nullopt), dir / "model.json");
  write_text(dir / "train_log.csv", format_epoch_log(result.log));
  write_json(dir / "report.json", {{"test", to_json(report)},
                                   {"train_subjects", split.train.size()},
                                   {"test_subjects", split.test.size()}});
  write_text(dir / "report.csv", to_csv(std::vector<std::pair<std::string, MetricReport>>{{"test", report}}));
  write_text(dir / "test_manifest.csv", format_manifest(manifest.subset(split.test).rebased(dir)));
  out << "test micro_f1 " << fmt(report.micro.f1) << " macro_f1 " << fmt(report.macro.f1) << "\n";
  return 0;
}

int cmd_cv(const RunConfig& cfg, bool force, std::ostream& out) {
  const fs::path dir(cfg.paths.output_dir);
  const Manifest manifest = load_manifest(cfg.paths.manifest);
  const SubjectSplit split = split_subjects(manifest, cfg.seed, cfg.train_fraction);
  const auto folds = kfold(split.train, cfg.folds, cfg.seed);

  std::vector<std::string> outputs{"aggregate_report.json", "aggregate_report.csv", "test_manifest.csv"};
  for (std::size_t f = 1; f <= folds.size(); ++f) {
    const std::string stem = "fold" + std::to_string(f);
    for (const char* suffix : {".model.json", "_log.csv", "_report.json", "_report.csv"}) outputs.push_back(stem + suffix);
  }
  claim_outputs(dir, outputs, force);

  const PreparedData data = prepare(cfg);
  const auto test_samples = select(data, split.test);
  std::vector<MetricReport> test_reports, val_reports;
  std::vector<std::pair<std::string, MetricReport>> rows;

  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::string stem = "fold" + std::to_string(f + 1);
    const auto train_samples = select(data, without(split.train, folds[f]));
    const auto val_samples = select(data, folds[f]);
    TrainResult result = fit(cfg, data.labels, train_samples, cfg.seed + f + 1, out, stem);

    const MetricReport val = score(predict_probabilities(result.model, val_samples), val_samples,
                                   cfg.train.threshold, data.labels.size());
    const MetricReport test = score(predict_probabilities(result.model, test_samples), test_samples,
                                    cfg.train.threshold, data.labels.size());
    save_model(package(cfg, data.labels, std::move(result.model), f + 1), dir / (stem + ".model.json"));
    write_text(dir / (stem + "_log.csv"), format_epoch_log(result.log));
    write_json(dir / (stem + "_report.json"), {{"fold", f + 1},
                                               {"validation_subjects", folds[f].size()},
                                               {"validation", to_json(val)},
                                               {"test", to_json(test)}});
    write_text(dir / (stem + "_report.csv"),
               to_csv(std::vector<std::pair<std::string, MetricReport>>{{"validation", val}, {"test", test}}));
    out << stem << " test micro_f1 " << fmt(test.micro.f1) << "\n";
    test_reports.push_back(test);
    val_reports.push_back(val);
  }

  const ReportSummary test_summary = summarize(test_reports);
  const ReportSummary val_summary = summarize(val_reports);
  write_json(dir / "aggregate_report.json", {{"folds", folds.size()},
                                             {"test", to_json(test_summary)},
                                             {"validation", to_json(val_summary)},
                                             {"preprocess_warnings", data.warnings}});
  write_text(dir / "aggregate_report.csv", to_csv(test_summary));
  write_text(dir / "test_manifest.csv", format_manifest(manifest.subset(split.test).rebased(dir)));
  out << "mean test micro_f1 " << fmt(test_summary.mean.micro.f1) << " +- " << fmt(test_summary.std_dev.micro.f1)
      << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::vector<std::string> models;
  std::string manifest;
  std::string out = "eval";
  bool ensemble = false;
  bool force = false;
  double threshold = -1.0;  // < 0: use the first model's training threshold
};

int cmd_eval(const EvalArgs& args, std::ostream& out) {
  if (args.models.empty()) throw Error("invalid_config", "no models given");
  std::vector<ModelFile> models;
  for (const auto& p : args.models) models.push_back(load_model(p));
  for (std::size_t i = 1; i < models.size(); ++i) {
    if (models[i].labels != models[0].labels || models[i].parents != models[0].parents) {
      throw Error("label_mismatch", args.models[i] + " has a different label list than " + args.models[0]);
    }
  }
  const LabelGraph labels = hierarchy_of(models[0]);
  const double threshold = args.threshold >= 0.0 ? args.threshold : model_threshold(models[0]);
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error("invalid_config", "threshold must lie in (0, 1)");
  const Manifest manifest = load_manifest(args.manifest);
  const fs::path dir(args.out);
  claim_outputs(dir, {"eval_report.json", "eval_report.csv", "predictions.csv"}, args.force);

  // Inputs depend only on (preprocess settings, input side); share them across models.
  std::map<std::string, std::vector<Sample>> inputs;
  std::vector<std::string> warnings;
  std::vector<std::vector<Tensor>> probs;
  for (const auto& m : models) {
    const PreprocessConfig pre = model_preprocess(m);
    const std::size_t side = model_side(m);
    const std::string key = to_json(pre).dump() + "/" + std::to_string(side);
    if (!inputs.count(key)) inputs[key] = load_samples(manifest, labels, pre, side, warnings);
    probs.push_back(predict_probabilities(m.graph, inputs[key]));
  }
  const std::vector<Sample>& samples = inputs.begin()->second;

  json reports = json::array();
  std::vector<std::pair<std::string, MetricReport>> rows;
  std::string predictions = "image_path,source";
  for (const auto& l : labels.labels()) predictions += "," + l;
  predictions += "\n";
  auto emit = [&](const std::string& source, const std::vector<Tensor>& p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      predictions += manifest.rows[i].image_path + "," + source;
      for (double v : p[i].values()) predictions += "," + fmt(v);
      predictions += "\n";
    }
  };

  for (std::size_t k = 0; k < models.size(); ++k) {
    const std::string name = fs::path(args.models[k]).filename().string();
    const MetricReport r = score(probs[k], samples, threshold, labels.size());
    reports.push_back({{"model", name}, {"report", to_json(r)}});
    rows.emplace_back(name, r);
    emit(name, probs[k]);
    out << name << " micro_f1 " << fmt(r.micro.f1) << " macro_f1 " << fmt(r.macro.f1) << "\n";
  }
  json doc = {{"threshold", threshold}, {"models", reports}, {"preprocess_warnings", warnings}};
  if (args.ensemble) {
    std::vector<Tensor> mean;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      std::vector<Tensor> members;
      for (const auto& p : probs) members.push_back(p[i]);
      mean.push_back(ensemble(members));
    }
    const MetricReport r = score(mean, samples, threshold, labels.size());
    doc["ensemble"] = to_json(r);
    rows.emplace_back("ensemble", r);
    emit("ensemble", mean);
    out << "ensemble micro_f1 " << fmt(r.micro.f1) << " macro_f1 " << fmt(r.macro.f1) << "\n";
  }
  write_json(dir / "eval_report.json", doc);
  write_text(dir / "eval_report.csv", to_csv(rows));
  write_text(dir / "predictions.csv", predictions);
  return 0;
}

// ---------------------------------------------------------------------------
// attribute

struct AttributeArgs {
  std::string model;
  std::string image;
  std::string methods = "all";
  std::string labels = "predicted";
  std::string out = "attributions";
  std::size_t window = 0;
  std::size_t stride = 0;
  double fill = 0.5;
  std::size_t ig_steps = 64;
  std::size_t threads = 1;
  bool force = false;
};

int cmd_attribute(const AttributeArgs& args, std::ostream& out) {
  const std::vector<Method> methods = parse_method_list(args.methods);
  const ModelFile model = load_model(args.model);
  const LabelGraph labels = hierarchy_of(model);
  const std::size_t side = model_side(model);

  std::vector<std::string> warnings;
  const Tensor x = load_model_input(args.image, model_preprocess(model), side, warnings);
  const Tensor probs = sigmoid(predict_logits(model.graph, x));

  std::vector<std::size_t> targets;
  if (args.labels == "predicted") {
    targets = threshold_labels(probs, model_threshold(model)).indices();
  } else if (args.labels == "all") {
    for (std::size_t i = 0; i < labels.size(); ++i) targets.push_back(i);
  } else {
    std::stringstream in(args.labels);
    std::string name;
    std::set<std::size_t> chosen;
    while (std::getline(in, name, ',')) {
      if (name.empty()) continue;
      const auto i = labels.index(name);
      if (!i) throw Error("unknown_label", "unknown label '" + name + "'");
      chosen.insert(*i);
    }
    targets.assign(chosen.begin(), chosen.end());
  }

  AttributionSettings settings;
  settings.occlusion.window = args.window ? args.window : std::max<std::size_t>(1, side / 4);
  settings.occlusion.stride = args.stride ? args.stride : std::max<std::size_t>(1, settings.occlusion.window / 2);
  settings.occlusion.fill_value = args.fill;
  settings.occlusion.threads = args.threads;
  settings.ig_steps = args.ig_steps;
  if (std::find(methods.begin(), methods.end(), Method::Occlusion) != methods.end()) {
    settings.occlusion.validate(x.extent(1), x.extent(2));
  }

  const std::string stem = fs::path(args.image).stem().string();
  const fs::path dir(args.out);
  std::vector<std::string> outputs{stem + "_attributions.json"};
  for (auto t : targets) {
    for (auto m : methods) {
      const std::string base = stem + "_" + labels.name(t) + "_" + std::string(method_name(m));
      outputs.push_back(base + ".pgm");
      outputs.push_back(base + ".csv");
    }
  }
  claim_outputs(dir, outputs, args.force);

  const auto maps = attribute_all(model.graph, x, targets, methods, settings);
  json entries = json::array();
  for (const auto& map : maps) {
    const std::string base = stem + "_" + labels.name(map.class_index) + "_" + std::string(method_name(map.method));
    const Heatmap hm = to_heatmap(map.values);
    write_text(dir / (base + ".pgm"), encode_pgm(hm.height, hm.width, hm.pixels));
    write_text(dir / (base + ".csv"), map_to_csv(map));
    json entry = {{"label", labels.name(map.class_index)},
                  {"method", method_name(map.method)},
                  {"pgm", base + ".pgm"},
                  {"csv", base + ".csv"},
                  {"metadata", map.metadata},
                  {"all_zero", hm.all_zero}};
    if (hm.all_zero) entry["warning"] = "all-zero map exported as uniform mid-grey";
    entries.push_back(std::move(entry));
  }
  json prob_json = json::object();
  for (std::size_t i = 0; i < labels.size(); ++i) prob_json[labels.name(i)] = probs[i];
  json target_names = json::array();
  for (auto t : targets) target_names.push_back(labels.name(t));
  write_json(dir / (stem + "_attributions.json"),
             {{"model", fs::path(args.model).filename().string()},
              {"image", fs::path(args.image).filename().string()},
              {"probabilities", prob_json},
              {"labels", target_names},
              {"baseline", "zeros"},
              {"settings",
               {{"occlusion",
                 {{"window", settings.occlusion.window},
                  {"stride", settings.occlusion.stride},
                  {"fill_value", settings.occlusion.fill_value}}},
                {"ig_steps", settings.ig_steps}}},
              {"warnings", warnings},
              {"maps", entries}});
  out << "wrote " << maps.size() << " attribution maps to " << dir.string() << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"attriblab: multi-label classification and attribution toolkit", "attriblab"};
  app.require_subcommand(1);

  auto* version = app.add_subcommand("version", "print the version");

  SyntheticConfig scfg;
  std::string synth_out = "synthetic";
  bool synth_force = false;
  auto* synth = app.add_subcommand("synth", "write the synthetic texture dataset");
  synth->add_option("--out", synth_out, "output directory");
  synth->add_option("--images", scfg.images, "number of images");
  synth->add_option("--subjects", scfg.subjects, "number of subjects");
  synth->add_option("--side", scfg.side, "image side");
  auto* synth_seed = synth->add_option("--seed", scfg.seed, "random seed");
  synth->add_flag("--force", synth_force, "overwrite existing outputs");

  Overrides ingest_o, train_o, cv_o;
  auto* ingest = app.add_subcommand("ingest", "validate a manifest and summarize the dataset");
  add_common(ingest, ingest_o, false);
  auto* train_cmd = app.add_subcommand("train", "train one model on the 60% subject split");
  add_common(train_cmd, train_o, true);
  auto* cv = app.add_subcommand("cv", "k-fold cross-validation on the training subjects");
  add_common(cv, cv_o, true);

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score models (and their soft-vote ensemble) on a manifest");
  eval->add_option("models", eval_args.models, "model files")->required();
  eval->add_option("--manifest", eval_args.manifest, "manifest CSV")->required();
  eval->add_option("--out", eval_args.out, "output directory");
  eval->add_option("--threshold", eval_args.threshold, "probability threshold");
  eval->add_flag("--ensemble", eval_args.ensemble, "also score the soft-vote ensemble");
  eval->add_flag("--force", eval_args.force, "overwrite existing outputs");

  AttributeArgs attr;
  auto* attribute = app.add_subcommand("attribute", "attribution maps for one image");
  attribute->add_option("--model", attr.model, "model file")->required();
  attribute->add_option("--image", attr.image, "image file (PGM/PNG)")->required();
  std::string attr_config;
  auto* attr_config_opt = attribute->add_option("--config", attr_config, "JSON run config (attribution settings)");
  auto* attr_methods = attribute->add_option("--methods", attr.methods, "'all' or comma-separated method names");
  attribute->add_option("--labels", attr.labels, "'predicted', 'all' or comma-separated label names");
  attribute->add_option("--out", attr.out, "output directory");
  auto* attr_window = attribute->add_option("--window", attr.window, "occlusion window");
  auto* attr_stride = attribute->add_option("--stride", attr.stride, "occlusion stride");
  auto* attr_fill = attribute->add_option("--fill-value", attr.fill, "occlusion fill value");
  auto* attr_steps = attribute->add_option("--ig-steps", attr.ig_steps, "integrated-gradients steps");
  auto* attr_threads = attribute->add_option("--threads", attr.threads, "occlusion worker threads (0 = all cores)");
  attribute->add_flag("--force", attr.force, "overwrite existing outputs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();  // program name
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: usage: " << msg << "\n";
    return 2;
  }

  try {
    if (*version) {
      out << "attriblab " << ATTRIBLAB_VERSION << " (model format " << kModelFormatVersion << ")\n";
      return 0;
    }
    if (*synth) {
      if (synth_seed->count() == 0) {
        if (const char* env = std::getenv("ATTRIBLAB_SEED"); env && *env) scfg.seed = std::stoull(env);
      }
      return cmd_synth(scfg, synth_out, synth_force, out);
    }
    if (*ingest) return cmd_ingest(resolve_config(ingest_o), ingest_o.force, out);
    if (*train_cmd) return cmd_train(resolve_config(train_o), train_o.force, out);
    if (*cv) return cmd_cv(resolve_config(cv_o), cv_o.force, out);
    if (*eval) return cmd_eval(eval_args, out);
    if (*attribute) {
      if (attr_config_opt->count()) {
        const RunConfig cfg = load_run_config(attr_config);
        if (!attr_methods->count()) {
          attr.methods.clear();
          for (auto m : cfg.methods) attr.methods += (attr.methods.empty() ? "" : ",") + std::string(method_name(m));
        }
        if (!attr_window->count()) attr.window = cfg.occlusion.window;
        if (!attr_stride->count()) attr.stride = cfg.occlusion.stride;
        if (!attr_fill->count()) attr.fill = cfg.occlusion.fill_value;
        if (!attr_steps->count()) attr.ig_steps = cfg.ig_steps;
        if (!attr_threads->count()) attr.threads = cfg.occlusion.threads;
      }
      return cmd_attribute(attr, out);
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << e.code() << ": " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: internal: " << msg << "\n";
    return 1;
  }
  return 1;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace attriblab::cli
