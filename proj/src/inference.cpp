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

#include "uadet/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <json.hpp>

#include "uadet/error.hpp"

namespace uadet {

std::string_view to_string(ScoringMode m) {
  switch (m) {
    case ScoringMode::uncertainty_aware:
      return "uncertainty_aware";
    case ScoringMode::centerness_product:
      return "centerness_product";
    case ScoringMode::iou_branch_product:
      return "iou_branch_product";
    case ScoringMode::raw_classification:
      return "raw_classification";
  }
  return "uncertainty_aware";
}

ScoringMode parse_scoring_mode(std::string_view name) {
  for (auto m : {ScoringMode::uncertainty_aware, ScoringMode::centerness_product,
                 ScoringMode::iou_branch_product, ScoringMode::raw_classification}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown scoring mode '" + std::string(name) +
                    "' (expected uncertainty_aware, centerness_product, iou_branch_product or "
                    "raw_classification)");
}

void InferenceConfig::validate() const {
  if (!(score_threshold >= 0.0 && score_threshold < 1.0)) {
    throw ConfigError("inference.score_threshold must lie in [0, 1)");
  }
  if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw ConfigError("inference.nms_iou must lie in (0, 1]");
}

DenseOutput to_dense(const HeadConfig& cfg, const HeadOutput& out) {
  DenseOutput d;
  d.grid = {cfg.grid_h, cfg.grid_w, cfg.stride};
  d.num_classes = cfg.num_classes;
  d.cls_logits.assign(out.cls_logits.data().begin(), out.cls_logits.data().end());
  d.mu.assign(out.mu.data().begin(), out.mu.data().end());
  d.sigma.assign(out.sigma.data().begin(), out.sigma.data().end());
  if (out.quality_logits.defined()) {
    d.quality_logits.assign(out.quality_logits.data().begin(), out.quality_logits.data().end());
  }
  d.has_crn = cfg.use_crn;
  d.quality = cfg.quality;
  return d;
}

double centerness(const OffsetTarget& o) {
  const double lr = std::max(o.l, o.r), tb = std::max(o.t, o.b);
  if (lr <= 0.0 || tb <= 0.0) return 0.0;
  const double v = (std::min(o.l, o.r) / lr) * (std::min(o.t, o.b) / tb);
  return std::sqrt(std::max(0.0, v));
}

namespace {

double sigmoid(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void require_branch(const DenseOutput& out, ScoringMode mode) {
  const std::string m(to_string(mode));
  switch (mode) {
    case ScoringMode::uncertainty_aware:
      if (!out.has_crn) throw ConfigError("scoring mode " + m + " needs a head with the CRN");
      break;
    case ScoringMode::centerness_product:
      if (out.quality != QualityBranch::centerness) {
        throw ConfigError("scoring mode " + m + " needs a head with a centerness branch");
      }
      break;
    case ScoringMode::iou_branch_product:
      if (out.quality != QualityBranch::iou) {
        throw ConfigError("scoring mode " + m + " needs a head with an IoU branch");
      }
      break;
    case ScoringMode::raw_classification:
      break;
  }
}

bool ranks_before(const DetectionCandidate& a, const DetectionCandidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.location != b.location) return a.location < b.location;
  return a.class_id < b.class_id;
}

}  // namespace

std::vector<DetectionCandidate> decode(const DenseOutput& out, const InferenceConfig& cfg) {
  cfg.validate();
  require_branch(out, cfg.mode);
  const std::size_t n = out.grid.size();
  if (out.cls_logits.size() != out.num_classes * n || out.mu.size() != 4 * n ||
      out.sigma.size() != 4 * n) {
    throw Error("decode: head output sizes do not match the grid");
  }
  const bool needs_quality = cfg.mode == ScoringMode::centerness_product ||
                             cfg.mode == ScoringMode::iou_branch_product;
  if (needs_quality && out.quality_logits.size() != n) {
    throw Error("decode: quality map size does not match the grid");
  }
  std::vector<DetectionCandidate> cands;
  for (std::size_t i = 0; i < n; ++i) {
    const double quality = needs_quality ? sigmoid(out.quality_logits[i]) : 1.0;
    for (std::size_t c = 0; c < out.num_classes; ++c) {
      const double score = sigmoid(out.cls_logits[c * n + i]) * quality;
      if (score < cfg.score_threshold) continue;
      DetectionCandidate d;
      const OffsetTarget off{out.mu[i], out.mu[n + i], out.mu[2 * n + i], out.mu[3 * n + i]};
      d.box = box_from_offsets(out.grid.center(i), off);
      d.class_id = static_cast<int>(c);
      d.score = score;
      for (std::size_t k = 0; k < 4; ++k) d.certainty4[k] = 1.0 - out.sigma[k * n + i];
      d.location = i;
      cands.push_back(d);
    }
  }
  return cands;
}

std::vector<DetectionCandidate> nms(std::vector<DetectionCandidate> candidates, double iou_threshold) {
  for (const auto& c : candidates) {
    if (!std::isfinite(c.score)) throw Error("nms: non-finite score");
  }
  std::stable_sort(candidates.begin(), candidates.end(), ranks_before);
  std::vector<DetectionCandidate> kept;
  for (const auto& c : candidates) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const DetectionCandidate& k) {
      return k.class_id == c.class_id && iou(k.box, c.box) >= iou_threshold;
    });
    if (!suppressed) kept.push_back(c);
  }
  return kept;
}

void write_detections_jsonl(std::ostream& os, std::span<const DetectionCandidate> dets) {
  for (const auto& d : dets) {
    nlohmann::json j;
    j["box"] = {d.box.x_lt, d.box.y_lt, d.box.x_rb, d.box.y_rb};
    j["class"] = d.class_id;
    j["score"] = d.score;
    j["certainty4"] = d.certainty4;
    os << j.dump() << '\n';
  }
}

}  // namespace uadet
