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

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "uadet/eval.hpp"
#include "uadet/head.hpp"
#include "uadet/inference.hpp"
#include "uadet/scene.hpp"
#include "uadet/train.hpp"

namespace uadet {

// Head options that are not implied by the scene.
struct HeadOptions {
  std::size_t tower_depth = 2;
  bool use_crn = true;
  bool crn_bias = true;
  QualityBranch quality = QualityBranch::none;
  bool operator==(const HeadOptions&) const = default;
};

struct RunConfig {
  SceneConfig scene;
  TrainConfig train;
  HeadOptions head;
  InferenceConfig inference;
  EvalConfig eval;
  std::string out_dir = "runs/default";

  // Input channels, grid and class count come from the scene.
  HeadConfig head_config() const;
  void validate() const;
};

nlohmann::json scene_config_to_json(const SceneConfig& c);
nlohmann::json head_config_to_json(const HeadConfig& c);
HeadConfig head_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const RunConfig& c);
// Every field is optional; unknown keys and ill-typed values raise
// ConfigError naming the field.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// Applies "section.key=value" or "key=value" (key unique across sections).
// The value is read as JSON when it parses, as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

// Defaults, overlaid with the file at `path` (if non-empty), then overrides.
RunConfig resolve_run_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace uadet
