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

#include "uadet/box.hpp"
#include "uadet/tensor.hpp"

namespace uadet {

inline constexpr double kSigmaFloor = 1e-4;

// Per-location Gaussian over the four LTRB offsets with diagonal covariance.
// sigma is a standard deviation in (0, 1], the range of a sigmoid output.
struct GaussianOffsets {
  std::array<double, 4> mu{};
  std::array<double, 4> sigma{1.0, 1.0, 1.0, 1.0};
};

namespace losses {

// max(sigma, kSigmaFloor). The first time any value is clamped a warning is
// written to stderr; later clamps are silent.
ad::Tensor floor_sigma(const ad::Tensor& sigma);

// Elementwise Gaussian negative log-density terms
//   (target - mu)^2 / (2 sigma^2) + 1/2 log sigma^2 + 1/2 log 2 pi
// Summed over the four directions this is the bracket of the power
// likelihood loss, constant 2 log 2 pi included. Shapes must match.
ad::Tensor gaussian_nll_terms(const ad::Tensor& mu, const ad::Tensor& sigma,
                              const ad::Tensor& target);

ad::Tensor nll(const ad::Tensor& mu, const ad::Tensor& sigma, const ad::Tensor& target);

// sum(weight * gaussian_nll_terms). `weight` is a constant (no gradient),
// either a single value or one per element; each entry must lie in [0, 1].
// For dense maps the caller tiles the per-location IoU over the 4 rows.
ad::Tensor npll(const ad::Tensor& mu, const ad::Tensor& sigma, const ad::Tensor& target,
                const ad::Tensor& weight);

// Sum over locations of 1 - GIoU, with both boxes given as LTRB offsets
// [4, N] from the same location.
ad::Tensor giou_loss(const ad::Tensor& pred_offsets, const ad::Tensor& target_offsets);

}  // namespace losses

double nll(const GaussianOffsets& pred, const OffsetTarget& target);
double npll(const GaussianOffsets& pred, const OffsetTarget& target, double iou_weight);
double giou_loss(const Box& pred, const Box& gt);

}  // namespace uadet
