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
#include <optional>
#include <string_view>

#include "uadet/tensor.hpp"

namespace uadet {

inline constexpr double kProbEpsilon = 1e-7;

struct FocalConfig {
  double alpha = 0.25;      // negative-example weight (positive weight for FL)
  double gamma = 2.0;       // modulating exponent
  double lambda_uc = 0.05;  // weight of the uncertainty loss in the total
  void validate() const;
  bool operator==(const FocalConfig&) const = default;
};

enum class FocalKind { fl, qfl, vfl, ufl };

std::string_view to_string(FocalKind kind);
FocalKind parse_focal_kind(std::string_view name);

struct ClassificationSample {
  double p = 0.5;  // predicted probability
  double y = 0.0;  // soft target; IoU for positives, 0 for negatives
  std::optional<std::array<double, 4>> sigma_u;
};

namespace losses {

// Clamp to [kProbEpsilon, 1 - kProbEpsilon].
ad::Tensor clamp_probability(const ad::Tensor& p);

// -(y log p + (1 - y) log(1 - p)), elementwise on clamped p.
ad::Tensor bce(const ad::Tensor& p, const ad::Tensor& y);

// f(sigma) = 1/4 sum_k (1 - sigma_k). sigma is [4] or [4, N]; result [1] or
// [1, N].
ad::Tensor certainty(const ad::Tensor& sigma);

// Elementwise focal-family terms. `positive` is a constant 0/1 mask of the
// same shape as p; y is the constant soft target. Positive and negative
// branches are selected by the mask, so callers decide which entries are
// foreground.
ad::Tensor fl_terms(const ad::Tensor& p, const ad::Tensor& positive, const FocalConfig& cfg);
ad::Tensor qfl_terms(const ad::Tensor& p, const ad::Tensor& y, const ad::Tensor& positive,
                     const FocalConfig& cfg);
ad::Tensor vfl_terms(const ad::Tensor& p, const ad::Tensor& y, const ad::Tensor& positive,
                     const FocalConfig& cfg);
// `weight` carries f(sigma_u) per element; pass it detached to stop the
// classification loss from reaching the uncertainty branch.
ad::Tensor ufl_terms(const ad::Tensor& p, const ad::Tensor& y, const ad::Tensor& weight,
                     const ad::Tensor& positive, const FocalConfig& cfg);

// -alpha p^gamma log(1 - p): the shared negative branch of VFL and UFL.
ad::Tensor varifocal_negative(const ad::Tensor& p, const FocalConfig& cfg);

}  // namespace losses

double certainty(const std::array<double, 4>& sigma_u);
double focal_loss(const ClassificationSample& s, const FocalConfig& cfg);
double qfl(const ClassificationSample& s, const FocalConfig& cfg);
double vfl(const ClassificationSample& s, const FocalConfig& cfg);
double ufl(const ClassificationSample& s, const FocalConfig& cfg);
double classification_loss(FocalKind kind, const ClassificationSample& s, const FocalConfig& cfg);

}  // namespace uadet
