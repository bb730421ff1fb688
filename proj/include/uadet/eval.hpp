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

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uadet/head.hpp"
#include "uadet/inference.hpp"
#include "uadet/scene.hpp"

namespace uadet {

struct ImageResult {
  std::vector<DetectionCandidate> detections;
  std::vector<GroundTruth> truth;
};

// Greedy matching of one image: detections in rank order each take the
// best-overlapping unmatched truth box of their class with IoU >= threshold.
// Returns the matched truth index per detection, -1 for false positives.
std::vector<int> match_detections(const ImageResult& image, double iou_threshold);

// 11-point interpolated average precision at the given IoU, averaged over
// classes that have at least one truth box. 0 when there is none.
double mini_ap(std::span<const ImageResult> images, std::size_t num_classes,
               double iou_threshold = 0.5);

// Pearson correlation; empty when fewer than two points or a constant series.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct EvalReport {
  double mini_ap = 0.0;
  std::size_t num_images = 0;
  std::size_t num_detections = 0;
  std::size_t num_true_positives = 0;
  // Means over true-positive detections; empty without any.
  std::optional<std::array<double, 4>> per_side_sigma_mean;
  std::optional<std::array<double, 4>> per_side_abs_error_mean;  // pixels
  std::optional<double> calibration_corr;
};

// Scores detections against the clean boxes.
EvalReport summarize(std::span<const ImageResult> images, std::size_t num_classes);

struct EvalConfig {
  std::size_t num_scenes = 20;
  Split split = Split::eval;
  void validate() const;
  bool operator==(const EvalConfig&) const = default;
};

// Runs forward, decode and NMS on each scene and scores against clean boxes.
std::vector<ImageResult> run_detector(const HeadConfig& head, const HeadParams& params,
                                      std::span<const Scene> scenes, const InferenceConfig& inf);

EvalReport evaluate(const HeadConfig& head, const HeadParams& params,
                    std::span<const Scene> scenes, const InferenceConfig& inf);

}  // namespace uadet
