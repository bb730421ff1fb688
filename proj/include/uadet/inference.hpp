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
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "uadet/assignment.hpp"
#include "uadet/box.hpp"
#include "uadet/head.hpp"

namespace uadet {

enum class ScoringMode { uncertainty_aware, centerness_product, iou_branch_product, raw_classification };

std::string_view to_string(ScoringMode m);
ScoringMode parse_scoring_mode(std::string_view name);

struct DetectionCandidate {
  Box box;
  int class_id = 0;
  double score = 0.0;
  std::array<double, 4> certainty4{};  // 1 - sigma per side (l, r, t, b)
  std::size_t location = 0;
};

struct InferenceConfig {
  double score_threshold = 0.05;
  double nms_iou = 0.6;
  ScoringMode mode = ScoringMode::uncertainty_aware;
  void validate() const;
};

// Plain-value view of a head output for one image, channel-major.
struct DenseOutput {
  GridSpec grid;
  std::size_t num_classes = 0;
  std::vector<double> cls_logits;      // [C, H*W]
  std::vector<double> mu;              // [4, H*W], pixels
  std::vector<double> sigma;           // [4, H*W]
  std::vector<double> quality_logits;  // [H*W] or empty
  bool has_crn = false;
  QualityBranch quality = QualityBranch::none;
};

DenseOutput to_dense(const HeadConfig& cfg, const HeadOutput& out);

// Canonical centerness of LTRB offsets.
double centerness(const OffsetTarget& o);

// One candidate per (location, class) whose score clears the threshold.
// Rejects modes that need a branch the head does not have.
std::vector<DetectionCandidate> decode(const DenseOutput& out, const InferenceConfig& cfg);

// Greedy per-class suppression. Candidates are ranked by score (descending),
// then location, then class; a candidate survives if its IoU with every kept
// candidate of its class is below the threshold. Output is in rank order.
std::vector<DetectionCandidate> nms(std::vector<DetectionCandidate> candidates, double iou_threshold);

// One JSON object per line: box, class, score, certainty4.
void write_detections_jsonl(std::ostream& os, std::span<const DetectionCandidate> dets);

}  // namespace uadet
