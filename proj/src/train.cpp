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

#include "uadet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "uadet/error.hpp"
#include "uadet/inference.hpp"
#include "uadet/uncertainty_losses.hpp"

namespace uadet {

using ad::Tensor;

std::string_view to_string(RegressionMode m) {
  switch (m) {
    case RegressionMode::npll:
      return "npll";
    case RegressionMode::nll:
      return "nll";
    case RegressionMode::none:
      return "none";
  }
  return "npll";
}

RegressionMode parse_regression_mode(std::string_view name) {
  if (name == "npll") return RegressionMode::npll;
  if (name == "nll") return RegressionMode::nll;
  if (name == "none") return RegressionMode::none;
  throw ConfigError("unknown regression mode '" + std::string(name) +
                    "' (expected npll, nll or none)");
}

void TrainConfig::validate() const {
  focal.validate();
  if (steps < 1) throw ConfigError("train.steps must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train.learning_rate must be > 0");
  }
  if (num_scenes < 1) throw ConfigError("train.num_scenes must be >= 1");
}

TrainSample make_sample(const Scene& scene, const HeadConfig& head) {
  if (scene.channels != head.in_channels || scene.h != head.grid_h || scene.w != head.grid_w) {
    std::ostringstream os;
    os << "scene features [" << scene.channels << ", " << scene.h << ", " << scene.w
       << "] do not match head input [" << head.in_channels << ", " << head.grid_h << ", "
       << head.grid_w << "]";
    throw ConfigError(os.str());
  }
  TrainSample s;
  s.features = Tensor::constant({scene.channels, scene.h, scene.w}, scene.features);
  s.assignment = assign(scene.labels, GridSpec{head.grid_h, head.grid_w, head.stride});
  return s;
}

LossTerms compute_loss(const HeadConfig& head, const HeadParams& params, const TrainSample& sample,
                       const TrainConfig& cfg, const std::vector<double>* frozen_iou) {
  const HeadOutput out = head_forward(head, params, sample.features);
  const AssignmentMap& am = sample.assignment;
  const std::size_t n = head.grid_h * head.grid_w;
  const std::size_t c = head.num_classes;
  const std::vector<std::size_t> pos = am.positive_indices();
  const std::size_t npos = pos.size();
  const double norm = 1.0 / static_cast<double>(std::max<std::size_t>(1, npos));

  LossTerms t;
  t.num_positive = npos;
  const Tensor mu = ad::reshape(out.mu, {4, n});
  const Tensor sigma = ad::reshape(out.sigma, {4, n});

  if (frozen_iou) {
    if (frozen_iou->size() != npos) throw Error("compute_loss: frozen IoU count mismatch");
    t.iou = *frozen_iou;
  } else {
    t.iou.resize(npos);
    const auto m = mu.data();
    for (std::size_t j = 0; j < npos; ++j) {
      const std::size_t i = pos[j];
      const Location loc = am.grid.center(i);
      const Box pred = box_from_offsets(loc, {m[i], m[n + i], m[2 * n + i], m[3 * n + i]});
      t.iou[j] = iou(pred, box_from_offsets(loc, am.target[i]));
    }
  }

  // Classification over every (class, location) pair.
  const Tensor p = ad::sigmoid(ad::reshape(out.cls_logits, {c * n}));
  std::vector<double> yv(c * n, 0.0), mv(c * n, 0.0);
  for (std::size_t j = 0; j < npos; ++j) {
    const std::size_t k = static_cast<std::size_t>(am.label[pos[j]]) * n + pos[j];
    mv[k] = 1.0;
    yv[k] = cfg.loss_mode == FocalKind::fl ? 1.0 : t.iou[j];
  }
  const Tensor y = Tensor::constant({c * n}, yv);
  const Tensor mask = Tensor::constant({c * n}, mv);
  Tensor terms;
  switch (cfg.loss_mode) {
    case FocalKind::fl:
      terms = losses::fl_terms(p, mask, cfg.focal);
      break;
    case FocalKind::qfl:
      terms = losses::qfl_terms(p, y, mask, cfg.focal);
      break;
    case FocalKind::vfl:
      terms = losses::vfl_terms(p, y, mask, cfg.focal);
      break;
    case FocalKind::ufl: {
      Tensor f = losses::certainty(sigma);  // [1, n]
      if (!cfg.ufl_sigma_grad) f = f.detach();
      const Tensor w = ad::reshape(ad::matmul(Tensor::full({c, 1}, 1.0), f), {c * n});
      terms = losses::ufl_terms(p, y, w, mask, cfg.focal);
      break;
    }
  }
  t.l_uac = ad::sum(terms) * norm;
  t.total = t.l_uac;

  if (npos == 0) return t;

  std::vector<double> tv(4 * npos);
  for (std::size_t j = 0; j < npos; ++j) {
    const auto a = am.target[pos[j]].as_array();
    for (std::size_t k = 0; k < 4; ++k) tv[k * npos + j] = a[k];
  }
  const Tensor target = Tensor::constant({4, npos}, tv);

  if (cfg.regression_mode != RegressionMode::none) {
    const Tensor mu_p = ad::select_columns(mu, pos);
    const Tensor sigma_p = ad::select_columns(sigma, pos);
    t.l_bbox = losses::giou_loss(mu_p, target) * norm;
    // The likelihood is measured in stride units, the scale of sigma.
    const double inv = 1.0 / head.stride;
    if (cfg.regression_mode == RegressionMode::npll) {
      std::vector<double> wv(4 * npos);
      for (std::size_t k = 0; k < 4; ++k) {
        std::copy(t.iou.begin(), t.iou.end(), wv.begin() + static_cast<long>(k * npos));
      }
      t.l_uc = losses::npll(mu_p * inv, sigma_p, target * inv, Tensor::constant({4, npos}, wv)) * norm;
    } else {
      t.l_uc = losses::nll(mu_p * inv, sigma_p, target * inv) * norm;
    }
    t.total = t.total + t.l_bbox + t.l_uc * cfg.focal.lambda_uc;
  }

  if (head.quality != QualityBranch::none) {
    std::vector<double> qv(npos);
    for (std::size_t j = 0; j < npos; ++j) {
      qv[j] = head.quality == QualityBranch::centerness ? centerness(am.target[pos[j]]) : t.iou[j];
    }
    const Tensor q = ad::sigmoid(ad::select_columns(ad::reshape(out.quality_logits, {1, n}), pos));
    t.l_quality = ad::sum(losses::bce(q, Tensor::constant({1, npos}, qv))) * norm;
    t.total = t.total + t.l_quality;
  }
  return t;
}

namespace {

double value(const Tensor& t) { return t.defined() ? t.item() : 0.0; }

}  // namespace

TrainResult train(const HeadConfig& head, const TrainConfig& cfg, std::span<const Scene> scenes) {
  head.validate();
  cfg.validate();
  if (scenes.size() < cfg.num_scenes) {
    throw ConfigError("train: need " + std::to_string(cfg.num_scenes) + " scenes, got " +
                      std::to_string(scenes.size()));
  }
  std::vector<TrainSample> samples;
  samples.reserve(cfg.num_scenes);
  for (std::size_t i = 0; i < cfg.num_scenes; ++i) samples.push_back(make_sample(scenes[i], head));

  TrainResult result;
  result.params = init_head(head, cfg.seed);
  result.trace.reserve(cfg.steps);
  std::mt19937_64 order_rng(cfg.seed ^ 0x6f72646572ULL);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (cursor == order.size()) {
      std::shuffle(order.begin(), order.end(), order_rng);
      cursor = 0;
    }
    const TrainSample& sample = samples[order[cursor++]];
    result.params.zero_grad();
    LossTerms terms;
    try {
      terms = compute_loss(head, result.params, sample, cfg);
    } catch (const NumericalAbort&) {
      throw;
    } catch (const Error& e) {
      throw NumericalAbort("step " + std::to_string(step) + ": " + e.what(),
                           static_cast<long>(step), result.params.l2_norm());
    }
    LossRecord rec{step,
                   value(terms.l_uac),
                   value(terms.l_bbox),
                   value(terms.l_uc),
                   value(terms.l_quality),
                   terms.total.item(),
                   terms.num_positive};
    if (!std::isfinite(rec.total)) {
      throw NumericalAbort("non-finite loss at step " + std::to_string(step),
                           static_cast<long>(step), result.params.l2_norm());
    }
    result.trace.push_back(rec);
    terms.total.backward();
    for (const auto& [name, param] : result.params.items()) {
      Tensor alias = param;
      auto d = alias.mutable_data();
      const auto g = param.grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= cfg.learning_rate * g[i];
      if (!std::all_of(d.begin(), d.end(), [](double v) { return std::isfinite(v); })) {
        throw NumericalAbort("parameter " + name + " became non-finite at step " +
                                 std::to_string(step),
                             static_cast<long>(step), result.params.l2_norm());
      }
    }
  }
  return result;
}

}  // namespace uadet
