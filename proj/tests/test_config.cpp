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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "uadet/config.hpp"
#include "uadet/error.hpp"

using nlohmann::json;
using uadet::ConfigError;
using uadet::RunConfig;

TEST_CASE("defaults serialize and parse back to the same values") {
  const RunConfig d;
  const json j = uadet::to_json(d);
  const RunConfig back = uadet::run_config_from_json(j);
  CHECK(uadet::to_json(back) == j);
  CHECK(back.scene == d.scene);
  CHECK(back.train == d.train);
  CHECK(back.head == d.head);
  CHECK(back.eval == d.eval);
  CHECK(j.at("train").at("loss_mode") == "ufl");
  CHECK(j.at("inference").at("mode") == "uncertainty_aware");
}

TEST_CASE("non-default values survive a round trip") {
  json j = {{"scene", {{"side_noise_std", {0.5, 0.5, 0.5, 3.0}}, {"occlusion_rate", 0.25}}},
            {"train", {{"loss_mode", "qfl"}, {"regression_mode", "nll"}, {"gamma", 1.5}, {"ufl_sigma_grad", true}}},
            {"head", {{"use_crn", false}, {"quality", "iou"}}},
            {"inference", {{"mode", "iou_branch_product"}, {"nms_iou", 0.5}}},
            {"eval", {{"split", "train"}, {"num_scenes", 3}}},
            {"out_dir", "runs/x"}};
  const RunConfig c = uadet::run_config_from_json(j);
  CHECK(c.scene.side_noise_std[3] == 3.0);
  CHECK(c.train.loss_mode == uadet::FocalKind::qfl);
  CHECK(c.train.focal.gamma == 1.5);
  CHECK(c.train.ufl_sigma_grad);
  CHECK_FALSE(c.head.use_crn);
  CHECK(c.eval.split == uadet::Split::train);
  const RunConfig again = uadet::run_config_from_json(uadet::to_json(c));
  CHECK(uadet::to_json(again) == uadet::to_json(c));
  const auto h = c.head_config();
  CHECK(h.in_channels == 16);
  CHECK(h.grid_h == 16);
  CHECK(h.num_classes == 3);
}

TEST_CASE("unknown keys and bad values are rejected") {
  CHECK_THROWS_AS(uadet::run_config_from_json({{"trian", json::object()}}), ConfigError);
  CHECK_THROWS_AS(uadet::run_config_from_json({{"train", {{"lr", 0.1}}}}), ConfigError);
  CHECK_THROWS_AS(uadet::run_config_from_json({{"train", {{"steps", -3}}}}), ConfigError);
  CHECK_THROWS_AS(uadet::run_config_from_json({{"train", {{"steps", "many"}}}}), ConfigError);
  CHECK_THROWS_AS(uadet::run_config_from_json({{"head", {{"use_crn", 1}}}}), ConfigError);
  CHECK_THROWS_AS(uadet::run_config_from_json({{"train", {{"loss_mode", "gfl"}}}}), ConfigError);
  CHECK_THROWS_AS(uadet::run_config_from_json({{"scene", {{"side_noise_std", {1, 2}}}}}), ConfigError);
  CHECK_THROWS_AS(uadet::run_config_from_json({{"train", {{"lambda_uc", 0.0}}}}), ConfigError);
  try {
    uadet::run_config_from_json({{"train", {{"lr", 0.1}}}});
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("lr") != std::string::npos);
  }
}

TEST_CASE("uncertainty-aware scoring needs the certainty network") {
  CHECK_THROWS_AS(uadet::run_config_from_json({{"head", {{"use_crn", false}}}}), ConfigError);
  CHECK_NOTHROW(uadet::run_config_from_json(
      {{"head", {{"use_crn", false}}}, {"inference", {{"mode", "raw_classification"}}}}));
}

TEST_CASE("overrides") {
  json j = json::object();
  uadet::apply_override(j, "train.steps=10");
  uadet::apply_override(j, "loss_mode=fl");
  uadet::apply_override(j, "scene.side_noise_std=[0,0,0,3]");
  uadet::apply_override(j, "out_dir=/tmp/x");
  CHECK(j["train"]["steps"] == 10);
  CHECK(j["train"]["loss_mode"] == "fl");
  CHECK(j["scene"]["side_noise_std"].size() == 4);
  CHECK(j["out_dir"] == "/tmp/x");
  CHECK_THROWS_AS(uadet::apply_override(j, "seed=3"), ConfigError);
  CHECK_THROWS_AS(uadet::apply_override(j, "nonsense=3"), ConfigError);
  CHECK_THROWS_AS(uadet::apply_override(j, "steps"), ConfigError);
  CHECK_THROWS_AS(uadet::apply_override(j, "=3"), ConfigError);
}

TEST_CASE("file plus overrides") {
  const auto path = std::filesystem::temp_directory_path() / "uadet_test_config.json";
  {
    std::ofstream os(path);
    os << R"({"train": {"steps": 7, "seed": 4}, "eval": {"num_scenes": 2}})";
  }
  const RunConfig c = uadet::resolve_run_config(path.string(), {"train.steps=9", "mode=centerness_product",
                                                                "head.quality=centerness"});
  CHECK(c.train.steps == 9);
  CHECK(c.train.seed == 4);
  CHECK(c.eval.num_scenes == 2);
  CHECK(c.inference.mode == uadet::ScoringMode::centerness_product);
  {
    std::ofstream os(path);
    os << "{not json";
  }
  CHECK_THROWS_AS(uadet::load_run_config(path.string()), ConfigError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(uadet::load_run_config(path.string()), ConfigError);
}
