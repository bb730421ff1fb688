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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "uadet/assignment.hpp"
#include "uadet/focal_losses.hpp"
#include "uadet/head.hpp"
#include "uadet/scene.hpp"

namespace uadet {

enum class RegressionMode { npll, nll, none };

std::string_view to_string(RegressionMode m);
RegressionMode parse_regression_mode(std::string_view name);

struct TrainConfig {
  FocalKind loss_mode = FocalKind::ufl;
  RegressionMode regression_mode = RegressionMode::npll;
  FocalConfig focal;
  std::size_t steps = 2000;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  std::size_t num_scenes = 64;  // size of the training pool; 1 = single-scene overfit
  // When true, UFL also sends gradient into sigma through the certainty
  // weight. Off by default: d UFL / d sigma_k = -BCE/4 < 0 everywhere, so on
  // its own it drives every sigma to 1 and the weight to 0.
  bool ufl_sigma_grad = false;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

// One scene prepared for loss evaluation.
struct TrainSample {
  ad::Tensor features;  // [C, H, W] constant
  AssignmentMap assignment;
};

TrainSample make_sample(const Scene& scene, const HeadConfig& head);

// Loss terms for one scene, each already divided by max(1, N_pos).
// l_uc is unweighted; total = l_uac + l_bbox + lambda_uc * l_uc + l_quality.
struct LossTerms {
  ad::Tensor l_uac;
  ad::Tensor l_bbox;     // undefined without regression or positives
  ad::Tensor l_uc;       // undefined without regression or positives
  ad::Tensor l_quality;  // undefined without a quality branch or positives
  ad::Tensor total;
  std::size_t num_positive = 0;
  std::vector<double> iou;  // detached IoU of each positive, in positive order
};

// `frozen_iou`, when given, replaces the IoU soft targets and power weights
// (one value per positive). Gradient checks pass it so that the detached
// targets stay fixed while inputs are perturbed.
LossTerms compute_loss(const HeadConfig& head, const HeadParams& params, const TrainSample& sample,
                       const TrainConfig& cfg, const std::vector<double>* frozen_iou = nullptr);

struct LossRecord {
  std::size_t step = 0;
  double l_uac = 0.0;
  double l_bbox = 0.0;
  double l_uc = 0.0;
  double l_quality = 0.0;
  double total = 0.0;
  std::size_t num_positive = 0;
};

struct TrainResult {
  HeadParams params;
  std::vector<LossRecord> trace;
};

// Plain gradient descent over the scene pool, one scene per step, visiting
// the pool in a seeded shuffled order each epoch. Throws NumericalAbort on a
// non-finite loss or parameter.
TrainResult train(const HeadConfig& head, const TrainConfig& cfg, std::span<const Scene> scenes);

}  // namespace uadet
