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

#include "uadet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

#include "uadet/error.hpp"
#include "uadet/train.hpp"

namespace uadet {

namespace {

// Total order on detections, independent of input order.
bool ranks_before(const DetectionCandidate& a, const DetectionCandidate& b) {
  return std::tie(b.score, a.location, a.class_id, a.box.x_lt, a.box.y_lt, a.box.x_rb, a.box.y_rb) <
         std::tie(a.score, b.location, b.class_id, b.box.x_lt, b.box.y_lt, b.box.x_rb, b.box.y_rb);
}

std::vector<std::size_t> rank_order(const std::vector<DetectionCandidate>& dets) {
  std::vector<std::size_t> idx(dets.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return ranks_before(dets[a], dets[b]); });
  return idx;
}

}  // namespace

std::vector<int> match_detections(const ImageResult& image, double iou_threshold) {
  std::vector<int> matched(image.detections.size(), -1);
  std::vector<bool> taken(image.truth.size(), false);
  for (std::size_t d : rank_order(image.detections)) {
    const auto& det = image.detections[d];
    double best = iou_threshold;
    int best_g = -1;
    for (std::size_t g = 0; g < image.truth.size(); ++g) {
      if (taken[g] || image.truth[g].class_id != det.class_id) continue;
      const double v = iou(det.box, image.truth[g].box);
      if (v >= best && (best_g < 0 || v > best)) {
        best = v;
        best_g = static_cast<int>(g);
      }
    }
    if (best_g >= 0) {
      taken[static_cast<std::size_t>(best_g)] = true;
      matched[d] = best_g;
    }
  }
  return matched;
}

double mini_ap(std::span<const ImageResult> images, std::size_t num_classes, double iou_threshold) {
  struct Hit {
    DetectionCandidate det;
    std::size_t image;
    bool tp;
  };
  std::vector<std::vector<Hit>> per_class(num_classes);
  std::vector<std::size_t> gt_count(num_classes, 0);
  for (std::size_t im = 0; im < images.size(); ++im) {
    const auto& image = images[im];
    for (const auto& g : image.truth) {
      if (g.class_id < 0 || static_cast<std::size_t>(g.class_id) >= num_classes) {
        throw Error("mini_ap: truth class out of range");
      }
      ++gt_count[static_cast<std::size_t>(g.class_id)];
    }
    const auto matched = match_detections(image, iou_threshold);
    for (std::size_t d = 0; d < image.detections.size(); ++d) {
      const auto& det = image.detections[d];
      if (det.class_id < 0 || static_cast<std::size_t>(det.class_id) >= num_classes) continue;
      per_class[static_cast<std::size_t>(det.class_id)].push_back({det, im, matched[d] >= 0});
    }
  }
  double ap_sum = 0.0;
  std::size_t classes_with_truth = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (gt_count[c] == 0) continue;
    ++classes_with_truth;
    auto& hits = per_class[c];
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      if (a.det.score != b.det.score) return a.det.score > b.det.score;
      if (a.image != b.image) return a.image < b.image;
      return ranks_before(a.det, b.det);
    });
    std::vector<double> precision, recall;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
      tp += hits[i].tp;
      precision.push_back(static_cast<double>(tp) / static_cast<double>(i + 1));
      recall.push_back(static_cast<double>(tp) / static_cast<double>(gt_count[c]));
    }
    double ap = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double level = t / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < precision.size(); ++i) {
        if (recall[i] >= level - 1e-12) best = std::max(best, precision[i]);
      }
      ap += best / 11.0;
    }
    ap_sum += ap;
  }
  return classes_with_truth ? ap_sum / static_cast<double>(classes_with_truth) : 0.0;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

EvalReport summarize(std::span<const ImageResult> images, std::size_t num_classes) {
  EvalReport r;
  r.mini_ap = mini_ap(images, num_classes, 0.5);
  r.num_images = images.size();
  std::array<double, 4> sig{}, err{};
  std::vector<double> mean_sigma, mean_err;
  for (const auto& image : images) {
    r.num_detections += image.detections.size();
    const auto matched = match_detections(image, 0.5);
    for (std::size_t d = 0; d < matched.size(); ++d) {
      if (matched[d] < 0) continue;
      const auto& det = image.detections[d];
      const Box& g = image.truth[static_cast<std::size_t>(matched[d])].box;
      const std::array<double, 4> e{std::abs(det.box.x_lt - g.x_lt), std::abs(det.box.x_rb - g.x_rb),
                                    std::abs(det.box.y_lt - g.y_lt), std::abs(det.box.y_rb - g.y_rb)};
      double ms = 0.0, me = 0.0;
      for (std::size_t k = 0; k < 4; ++k) {
        const double s = 1.0 - det.certainty4[k];
        sig[k] += s;
        err[k] += e[k];
        ms += s / 4.0;
        me += e[k] / 4.0;
      }
      mean_sigma.push_back(ms);
      mean_err.push_back(me);
    }
  }
  r.num_true_positives = mean_sigma.size();
  if (r.num_true_positives > 0) {
    const double n = static_cast<double>(r.num_true_positives);
    for (std::size_t k = 0; k < 4; ++k) {
      sig[k] /= n;
      err[k] /= n;
    }
    r.per_side_sigma_mean = sig;
    r.per_side_abs_error_mean = err;
  }
  r.calibration_corr = pearson(mean_sigma, mean_err);
  return r;
}

void EvalConfig::validate() const {
  if (num_scenes < 1) throw ConfigError("eval.num_scenes must be >= 1");
}

std::vector<ImageResult> run_detector(const HeadConfig& head, const HeadParams& params,
                                      std::span<const Scene> scenes, const InferenceConfig& inf) {
  std::vector<ImageResult> out;
  out.reserve(scenes.size());
  for (const auto& scene : scenes) {
    const TrainSample sample = make_sample(scene, head);
    const HeadOutput ho = head_forward(head, params, sample.features);
    ImageResult r;
    r.detections = nms(decode(to_dense(head, ho), inf), inf.nms_iou);
    r.truth = scene.clean;
    out.push_back(std::move(r));
  }
  return out;
}

EvalReport evaluate(const HeadConfig& head, const HeadParams& params, std::span<const Scene> scenes,
                    const InferenceConfig& inf) {
  const auto images = run_detector(head, params, scenes, inf);
  return summarize(images, head.num_classes);
}

}  // namespace uadet
