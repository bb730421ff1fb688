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

#include "uadet/uncertainty_losses.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>

#include "uadet/error.hpp"

namespace uadet {

namespace losses {

using ad::Tensor;

namespace {

std::atomic<bool> g_sigma_clamp_logged{false};

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw Error(std::string(op) + ": shape mismatch " + ad::shape_to_string(a.shape()) +
                " vs " + ad::shape_to_string(b.shape()));
  }
}

}  // namespace

Tensor floor_sigma(const Tensor& sigma) {
  for (double s : sigma.data()) {
    if (s < kSigmaFloor) {
      if (!g_sigma_clamp_logged.exchange(true)) {
        std::cerr << "uadet: warning: sigma below floor " << kSigmaFloor
                  << " clamped (further clamps not reported)\n";
      }
      break;
    }
  }
  return ad::maximum(sigma, Tensor::scalar(kSigmaFloor));
}

Tensor gaussian_nll_terms(const Tensor& mu, const Tensor& sigma, const Tensor& target) {
  require_same_shape("nll", mu, sigma);
  require_same_shape("nll", mu, target);
  const Tensor s = floor_sigma(sigma);
  const Tensor var = s * s;
  const Tensor residual = target - mu;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  return residual * residual / (2.0 * var) + 0.5 * ad::log(var) + half_log_2pi;
}

Tensor nll(const Tensor& mu, const Tensor& sigma, const Tensor& target) {
  return ad::sum(gaussian_nll_terms(mu, sigma, target));
}

Tensor npll(const Tensor& mu, const Tensor& sigma, const Tensor& target,
            const Tensor& weight) {
  if (weight.size() != 1) require_same_shape("npll", mu, weight);
  for (double w : weight.data()) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw Error("npll: IoU weight " + std::to_string(w) + " outside [0, 1]");
    }
  }
  return ad::sum(weight.detach() * gaussian_nll_terms(mu, sigma, target));
}

Tensor giou_loss(const Tensor& pred, const Tensor& target) {
  require_same_shape("giou_loss", pred, target);
  if (pred.shape().empty() || pred.dim(0) != 4) {
    throw Error("giou_loss: expected [4, N] offsets, got " + ad::shape_to_string(pred.shape()));
  }
  auto row = [](const Tensor& t, std::size_t k) { return ad::slice_rows(t, k, k + 1); };
  const Tensor l = row(pred, 0), r = row(pred, 1), t = row(pred, 2), b = row(pred, 3);
  const Tensor lg = row(target, 0), rg = row(target, 1), tg = row(target, 2), bg = row(target, 3);

  const Tensor area_p = (l + r) * (t + b);
  const Tensor area_g = (lg + rg) * (tg + bg);
  const Tensor iw = ad::relu(ad::minimum(l, lg) + ad::minimum(r, rg));
  const Tensor ih = ad::relu(ad::minimum(t, tg) + ad::minimum(b, bg));
  const Tensor inter = iw * ih;
  const Tensor uni = area_p + area_g - inter;
  const Tensor enclosing =
      (ad::maximum(l, lg) + ad::maximum(r, rg)) * (ad::maximum(t, tg) + ad::maximum(b, bg));
  const Tensor g = inter / uni - (enclosing - uni) / enclosing;
  return ad::sum(1.0 - g);
}

}  // namespace losses

namespace {

ad::Tensor column(const std::array<double, 4>& v) {
  return ad::Tensor::constant({4}, {v.begin(), v.end()});
}

}  // namespace

double nll(const GaussianOffsets& pred, const OffsetTarget& target) {
  return losses::nll(column(pred.mu), column(pred.sigma), column(target.as_array())).item();
}

double npll(const GaussianOffsets& pred, const OffsetTarget& target, double iou_weight) {
  return losses::npll(column(pred.mu), column(pred.sigma), column(target.as_array()),
                      ad::Tensor::scalar(iou_weight))
      .item();
}

double giou_loss(const Box& pred, const Box& gt) { return 1.0 - giou(pred, gt); }

}  // namespace uadet
