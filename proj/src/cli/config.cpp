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

#include "attriblab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "attriblab/error.hpp"

namespace attriblab {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error("invalid_config", where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw Error("invalid_config", "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("invalid_config", "bad value for '" + std::string(key) + "' in " + where);
  }
}

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty() || std::filesystem::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

}  // namespace

void RunConfig::validate() const {
  preprocess.validate();
  train.validate();
  if (arch.input_side < 8) throw Error("invalid_config", "arch.input_side must be at least 8");
  if (ig_steps < 1) throw Error("invalid_config", "ig_steps must be at least 1");
  if (folds < 2) throw Error("invalid_config", "folds must be at least 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("invalid_config", "train_fraction must lie in (0, 1)");
  if (occlusion.stride < 1 || occlusion.stride > occlusion.window) {
    throw Error("invalid_config", "occlusion stride must satisfy 1 <= stride <= window");
  }
  if (occlusion.window > arch.input_side) throw Error("invalid_config", "occlusion window larger than model input");
  if (methods.empty()) throw Error("invalid_config", "no attribution methods selected");
}

std::vector<Method> parse_method_list(const std::string& text) {
  if (text == "all") return {std::begin(kAllMethods), std::end(kAllMethods)};
  std::vector<Method> out;
  std::stringstream in(text);
  std::string name;
  while (std::getline(in, name, ',')) {
    if (name.empty()) continue;
    const auto m = parse_method(name);
    if (!m) throw Error("unknown_method", "unknown attribution method '" + name + "'");
    out.push_back(*m);
  }
  if (out.empty()) throw Error("unknown_method", "no attribution methods given");
  return out;
}

PreprocessConfig preprocess_from_json(const json& doc) {
  PreprocessConfig cfg;
  reject_unknown(doc, {"target_side", "clip_low_pct", "clip_high_pct"}, "preprocess");
  read(doc, "target_side", cfg.target_side, "preprocess");
  read(doc, "clip_low_pct", cfg.clip_low_pct, "preprocess");
  read(doc, "clip_high_pct", cfg.clip_high_pct, "preprocess");
  return cfg;
}

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  reject_unknown(doc, {"seed", "folds", "train_fraction", "preprocess", "arch", "train", "occlusion", "attribution", "paths"},
                 "config");
  read(doc, "seed", cfg.seed, "config");
  read(doc, "folds", cfg.folds, "config");
  read(doc, "train_fraction", cfg.train_fraction, "config");
  if (doc.contains("preprocess")) cfg.preprocess = preprocess_from_json(doc.at("preprocess"));
  if (doc.contains("arch")) {
    const json& a = doc.at("arch");
    reject_unknown(a, {"arch_id", "input_side", "widths"}, "arch");
    std::string id(arch_name(cfg.arch.arch));
    read(a, "arch_id", id, "arch");
    const auto parsed = parse_arch(id);
    if (!parsed) throw Error("invalid_config", "unknown arch_id '" + id + "'");
    cfg.arch.arch = *parsed;
    read(a, "input_side", cfg.arch.input_side, "arch");
    read(a, "widths", cfg.arch.widths, "arch");
  }
  if (doc.contains("train")) {
    const json& t = doc.at("train");
    reject_unknown(t, {"lr", "weight_decay", "epochs", "batch_size", "threshold"}, "train");
    read(t, "lr", cfg.train.lr, "train");
    read(t, "weight_decay", cfg.train.weight_decay, "train");
    read(t, "epochs", cfg.train.epochs, "train");
    read(t, "batch_size", cfg.train.batch_size, "train");
    read(t, "threshold", cfg.train.threshold, "train");
  }
  if (doc.contains("occlusion")) {
    const json& o = doc.at("occlusion");
    reject_unknown(o, {"window", "stride", "fill_value", "threads"}, "occlusion");
    read(o, "window", cfg.occlusion.window, "occlusion");
    read(o, "stride", cfg.occlusion.stride, "occlusion");
    read(o, "fill_value", cfg.occlusion.fill_value, "occlusion");
    read(o, "threads", cfg.occlusion.threads, "occlusion");
  }
  if (doc.contains("attribution")) {
    const json& a = doc.at("attribution");
    reject_unknown(a, {"methods", "ig_steps"}, "attribution");
    if (a.contains("methods")) {
      std::vector<std::string> names;
      read(a, "methods", names, "attribution");
      std::string joined;
      for (const auto& n : names) joined += (joined.empty() ? "" : ",") + n;
      cfg.methods = parse_method_list(joined);
    }
    read(a, "ig_steps", cfg.ig_steps, "attribution");
  }
  if (doc.contains("paths")) {
    const json& p = doc.at("paths");
    reject_unknown(p, {"manifest", "hierarchy", "output_dir"}, "paths");
    read(p, "manifest", cfg.paths.manifest, "paths");
    read(p, "hierarchy", cfg.paths.hierarchy, "paths");
    read(p, "output_dir", cfg.paths.output_dir, "paths");
    cfg.paths.manifest = resolve(cfg.paths.manifest, base_dir);
    cfg.paths.hierarchy = resolve(cfg.paths.hierarchy, base_dir);
    cfg.paths.output_dir = resolve(cfg.paths.output_dir, base_dir);
  }
  cfg.train.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io_error", "cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error("invalid_config", "config is not valid JSON: " + std::string(e.what()));
  }
  return parse_run_config(doc, path.parent_path());
}

json to_json(const PreprocessConfig& cfg) {
  return {{"target_side", cfg.target_side}, {"clip_low_pct", cfg.clip_low_pct}, {"clip_high_pct", cfg.clip_high_pct}};
}

json to_json(const ArchSpec& spec) {
  return {{"arch_id", arch_name(spec.arch)},
          {"input_side", spec.input_side},
          {"widths", spec.widths.empty() ? default_widths(spec.arch) : spec.widths}};
}

json to_json(const TrainConfig& cfg) {
  return {{"lr", cfg.lr},
          {"weight_decay", cfg.weight_decay},
          {"epochs", cfg.epochs},
          {"batch_size", cfg.batch_size},
          {"threshold", cfg.threshold}};
}

json to_json(const RunConfig& cfg) {
  json methods = json::array();
  for (auto m : cfg.methods) methods.push_back(method_name(m));
  return {{"seed", cfg.seed},
          {"folds", cfg.folds},
          {"train_fraction", cfg.train_fraction},
          {"preprocess", to_json(cfg.preprocess)},
          {"arch", to_json(cfg.arch)},
          {"train", to_json(cfg.train)},
          {"occlusion",
           {{"window", cfg.occlusion.window},
            {"stride", cfg.occlusion.stride},
            {"fill_value", cfg.occlusion.fill_value},
            {"threads", cfg.occlusion.threads}}},
          {"attribution", {{"methods", methods}, {"ig_steps", cfg.ig_steps}}},
          {"paths",
           {{"manifest", cfg.paths.manifest}, {"hierarchy", cfg.paths.hierarchy}, {"output_dir", cfg.paths.output_dir}}}};
}

}  // namespace attriblab
