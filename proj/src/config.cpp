/*
 * Copyright 2026 The uadet Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "uadet/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "uadet/error.hpp"

namespace uadet {

using nlohmann::json;

HeadConfig RunConfig::head_config() const {
  HeadConfig h;
  h.in_channels = scene.feature_channels;
  h.tower_depth = head.tower_depth;
  h.num_classes = scene.classes;
  h.grid_h = h.grid_w = scene.grid();
  h.stride = scene.stride;
  h.use_crn = head.use_crn;
  h.crn_bias = head.crn_bias;
  h.quality = head.quality;
  return h;
}

void RunConfig::validate() const {
  scene.validate();
  train.validate();
  inference.validate();
  eval.validate();
  head_config().validate();
  using enum ScoringMode;
  if (inference.mode == uncertainty_aware && !head.use_crn) {
    throw ConfigError("inference.mode uncertainty_aware needs head.use_crn = true");
  }
  if (inference.mode == centerness_product && head.quality != QualityBranch::centerness) {
    throw ConfigError("inference.mode centerness_product needs head.quality = centerness");
  }
  if (inference.mode == iou_branch_product && head.quality != QualityBranch::iou) {
    throw ConfigError("inference.mode iou_branch_product needs head.quality = iou");
  }
  if (out_dir.empty()) throw ConfigError("out_dir must not be empty");
}

json scene_config_to_json(const SceneConfig& c) {
  return {{"image_size", c.image_size},         {"stride", c.stride},
          {"feature_channels", c.feature_channels}, {"min_objects", c.min_objects},
          {"max_objects", c.max_objects},       {"classes", c.classes},
          {"min_size", c.min_size},             {"max_size", c.max_size},
          {"side_noise_std", c.side_noise_std}, {"occlusion_rate", c.occlusion_rate},
          {"feature_noise", c.feature_noise},   {"seed", c.seed}};
}

json head_config_to_json(const HeadConfig& c) {
  return {{"in_channels", c.in_channels}, {"tower_depth", c.tower_depth},
          {"num_classes", c.num_classes}, {"grid_h", c.grid_h},
          {"grid_w", c.grid_w},           {"stride", c.stride},
          {"use_crn", c.use_crn},         {"crn_bias", c.crn_bias},
          {"quality", to_string(c.quality)}};
}

namespace {

// Reads fields of one JSON object, remembering which keys were consumed so
// leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string name) : name_(std::move(name)) {
    if (j.is_null()) return;
    if (!j.is_object()) throw ConfigError(name_ + " must be an object");
    obj_ = &j;
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key)) return;
    const json& v = obj_->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(field(key) + " must be true or false");
      } else if constexpr (std::is_unsigned_v<T>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
          throw ConfigError(field(key) + " must be a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(field(key) + " must be a number");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  template <typename E, typename Parse>
  void read_enum(const char* key, E& out, Parse parse) {
    std::string s;
    read(key, s);
    if (obj_ && obj_->contains(key)) {
      try {
        out = parse(s);
      } catch (const ConfigError& e) {
        throw ConfigError(field(key) + ": " + e.what());
      }
    }
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [k, v] : obj_->items()) {
      if (!seen_.count(k)) throw ConfigError("unknown config key " + field(k.c_str()));
    }
  }

 private:
  std::string field(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

  const json* obj_ = nullptr;
  std::string name_;
  std::set<std::string> seen_;
};

const json& member(const json& j, const char* key) {
  static const json null;
  return j.contains(key) ? j.at(key) : null;
}

std::string split_name(Split s) { return s == Split::train ? "train" : "eval"; }

Split parse_split(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "eval") return Split::eval;
  throw ConfigError("unknown split '" + s + "' (expected train or eval)");
}

}  // namespace

HeadConfig head_config_from_json(const json& j) {
  HeadConfig c;
  Section s(j, "head");
  s.read("in_channels", c.in_channels);
  s.read("tower_depth", c.tower_depth);
  s.read("num_classes", c.num_classes);
  s.read("grid_h", c.grid_h);
  s.read("grid_w", c.grid_w);
  s.read("stride", c.stride);
  s.read("use_crn", c.use_crn);
  s.read("crn_bias", c.crn_bias);
  s.read_enum("quality", c.quality, parse_quality_branch);
  s.finish();
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["scene"] = scene_config_to_json(c.scene);
  j["train"] = {{"loss_mode", to_string(c.train.loss_mode)},
                {"regression_mode", to_string(c.train.regression_mode)},
                {"alpha", c.train.focal.alpha},
                {"gamma", c.train.focal.gamma},
                {"lambda_uc", c.train.focal.lambda_uc},
                {"steps", c.train.steps},
                {"learning_rate", c.train.learning_rate},
                {"seed", c.train.seed},
                {"num_scenes", c.train.num_scenes},
                {"ufl_sigma_grad", c.train.ufl_sigma_grad}};
  j["head"] = {{"tower_depth", c.head.tower_depth},
               {"use_crn", c.head.use_crn},
               {"crn_bias", c.head.crn_bias},
               {"quality", to_string(c.head.quality)}};
  j["inference"] = {{"score_threshold", c.inference.score_threshold},
                    {"nms_iou", c.inference.nms_iou},
                    {"mode", to_string(c.inference.mode)}};
  j["eval"] = {{"num_scenes", c.eval.num_scenes}, {"split", split_name(c.eval.split)}};
  j["out_dir"] = c.out_dir;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Section top(j, "");
  {
    Section s(member(j, "scene"), "scene");
    auto& v = c.scene;
    s.read("image_size", v.image_size);
    s.read("stride", v.stride);
    s.read("feature_channels", v.feature_channels);
    s.read("min_objects", v.min_objects);
    s.read("max_objects", v.max_objects);
    s.read("classes", v.classes);
    s.read("min_size", v.min_size);
    s.read("max_size", v.max_size);
    s.read("side_noise_std", v.side_noise_std);
    s.read("occlusion_rate", v.occlusion_rate);
    s.read("feature_noise", v.feature_noise);
    s.read("seed", v.seed);
    s.finish();
  }
  {
    Section s(member(j, "train"), "train");
    auto& v = c.train;
    s.read_enum("loss_mode", v.loss_mode, parse_focal_kind);
    s.read_enum("regression_mode", v.regression_mode, parse_regression_mode);
    s.read("alpha", v.focal.alpha);
    s.read("gamma", v.focal.gamma);
    s.read("lambda_uc", v.focal.lambda_uc);
    s.read("steps", v.steps);
    s.read("learning_rate", v.learning_rate);
    s.read("seed", v.seed);
    s.read("num_scenes", v.num_scenes);
    s.read("ufl_sigma_grad", v.ufl_sigma_grad);
    s.finish();
  }
  {
    Section s(member(j, "head"), "head");
    s.read("tower_depth", c.head.tower_depth);
    s.read("use_crn", c.head.use_crn);
    s.read("crn_bias", c.head.crn_bias);
    s.read_enum("quality", c.head.quality, parse_quality_branch);
    s.finish();
  }
  {
    Section s(member(j, "inference"), "inference");
    s.read("score_threshold", c.inference.score_threshold);
    s.read("nms_iou", c.inference.nms_iou);
    s.read_enum("mode", c.inference.mode, parse_scoring_mode);
    s.finish();
  }
  {
    Section s(member(j, "eval"), "eval");
    s.read("num_scenes", c.eval.num_scenes);
    s.read_enum("split", c.eval.split, parse_split);
    s.finish();
  }
  json dummy;
  top.read("scene", dummy);
  top.read("train", dummy);
  top.read("head", dummy);
  top.read("inference", dummy);
  top.read("eval", dummy);
  top.read("out_dir", c.out_dir);
  top.finish();
  c.validate();
  return c;
}

namespace {

json read_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path) { return run_config_from_json(read_json_file(path)); }

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  std::string section, field;
  const auto dot = key.find('.');
  if (dot != std::string::npos) {
    section = key.substr(0, dot);
    field = key.substr(dot + 1);
  } else if (key == "out_dir") {
    j["out_dir"] = value;
    return;
  } else {
    // Resolve a bare key against the full schema.
    const json schema = to_json(RunConfig{});
    std::vector<std::string> hits;
    for (const auto& [name, sec] : schema.items()) {
      if (sec.is_object() && sec.contains(key)) hits.push_back(name);
    }
    if (hits.empty()) throw ConfigError("unknown config key " + key);
    if (hits.size() > 1) {
      throw ConfigError("config key " + key + " is ambiguous; use " + hits[0] + "." + key + " or " +
                        hits[1] + "." + key);
    }
    section = hits[0];
    field = key;
  }
  if (!j.contains(section)) j[section] = json::object();
  if (!j[section].is_object()) throw ConfigError(section + " must be an object");
  j[section][field] = value;
}

RunConfig resolve_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  json j = path.empty() ? json::object() : read_json_file(path);
  for (const auto& o : overrides) apply_override(j, o);
  return run_config_from_json(j);
}

}  // namespace uadet
