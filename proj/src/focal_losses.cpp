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

#include "uadet/focal_losses.hpp"

#include <cmath>
#include <string>

#include "uadet/error.hpp"

namespace uadet {

void FocalConfig::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
  if (!(lambda_uc > 0.0)) throw ConfigError("lambda_uc must be > 0");
}

std::string_view to_string(FocalKind kind) {
  switch (kind) {
    case FocalKind::fl: return "fl";
    case FocalKind::qfl: return "qfl";
    case FocalKind::vfl: return "vfl";
    case FocalKind::ufl: return "ufl";
  }
  return "?";
}

FocalKind parse_focal_kind(std::string_view name) {
  if (name == "fl") return FocalKind::fl;
  if (name == "qfl") return FocalKind::qfl;
  if (name == "vfl") return FocalKind::vfl;
  if (name == "ufl") return FocalKind::ufl;
  throw ConfigError("unknown loss_mode '" + std::string(name) + "' (expected fl|qfl|vfl|ufl)");
}

namespace losses {

using ad::Tensor;

Tensor clamp_probability(const Tensor& p) {
  return ad::minimum(ad::maximum(p, Tensor::scalar(kProbEpsilon)),
                     Tensor::scalar(1.0 - kProbEpsilon));
}

Tensor bce(const Tensor& p, const Tensor& y) {
  const Tensor pc = clamp_probability(p);
  return -(y * ad::log(pc) + (1.0 - y) * ad::log(1.0 - pc));
}

Tensor certainty(const Tensor& sigma) {
  const auto& s = sigma.shape();
  if (s.empty() || s[0] != 4) {
    throw Error("certainty: expected leading dimension 4, got " + ad::shape_to_string(s));
  }
  const std::size_t n = sigma.size() / 4;
  const Tensor flat = ad::reshape(sigma, {4, n});
  const Tensor quarter = Tensor::full({1, 4}, 0.25);
  const Tensor f = 1.0 - ad::matmul(quarter, flat);
  return s.size() == 1 ? ad::reshape(f, {1}) : f;
}

Tensor varifocal_negative(const Tensor& p, const FocalConfig& cfg) {
  const Tensor pc = clamp_probability(p);
  return -cfg.alpha * ad::power(pc, cfg.gamma) * ad::log(1.0 - pc);
}

Tensor fl_terms(const Tensor& p, const Tensor& positive, const FocalConfig& cfg) {
  const Tensor pc = clamp_probability(p);
  const Tensor pos = -cfg.alpha * ad::power(1.0 - pc, cfg.gamma) * ad::log(pc);
  const Tensor neg = -(1.0 - cfg.alpha) * ad::power(pc, cfg.gamma) * ad::log(1.0 - pc);
  return positive * pos + (1.0 - positive) * neg;
}

Tensor qfl_terms(const Tensor& p, const Tensor& y, const Tensor& positive,
                 const FocalConfig& cfg) {
  const Tensor pc = clamp_probability(p);
  const Tensor diff = y - pc;
  const Tensor modulating = ad::power(diff * diff, 0.5 * cfg.gamma);
  const Tensor pos = modulating * bce(pc, y);
  const Tensor neg = -ad::power(pc, cfg.gamma) * ad::log(1.0 - pc);
  return positive * pos + (1.0 - positive) * neg;
}

Tensor vfl_terms(const Tensor& p, const Tensor& y, const Tensor& positive,
                 const FocalConfig& cfg) {
  const Tensor pos = y * bce(p, y);
  return positive * pos + (1.0 - positive) * varifocal_negative(p, cfg);
}

Tensor ufl_terms(const Tensor& p, const Tensor& y, const Tensor& weight, const Tensor& positive,
                 const FocalConfig& cfg) {
  const Tensor pos = weight * bce(p, y);
  return positive * pos + (1.0 - positive) * varifocal_negative(p, cfg);
}

}  // namespace losses

namespace {

using ad::Tensor;

void check_sample(const ClassificationSample& s) {
  if (!std::isfinite(s.p)) throw Error("classification sample: non-finite p");
  if (!(s.y >= 0.0 && s.y <= 1.0)) {
    throw Error("classification sample: target y=" + std::to_string(s.y) + " outside [0, 1]");
  }
}

Tensor prob(const ClassificationSample& s) { return Tensor::scalar(s.p); }
Tensor target(const ClassificationSample& s) { return Tensor::scalar(s.y); }
Tensor mask(const ClassificationSample& s) { return Tensor::scalar(s.y > 0.0 ? 1.0 : 0.0); }

void check_sigma(const std::array<double, 4>& sigma_u) {
  for (double v : sigma_u) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error("certainty: sigma " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

}  // namespace

double certainty(const std::array<double, 4>& sigma_u) {
  check_sigma(sigma_u);
  return losses::certainty(Tensor::constant({4}, {sigma_u.begin(), sigma_u.end()})).item();
}

double focal_loss(const ClassificationSample& s, const FocalConfig& cfg) {
  check_sample(s);
  if (s.y != 0.0 && s.y != 1.0) {
    throw Error("focal_loss: needs a hard label y in {0, 1}, got " + std::to_string(s.y));
  }
  return losses::fl_terms(prob(s), mask(s), cfg).item();
}

double qfl(const ClassificationSample& s, const FocalConfig& cfg) {
  check_sample(s);
  return losses::qfl_terms(prob(s), target(s), mask(s), cfg).item();
}

double vfl(const ClassificationSample& s, const FocalConfig& cfg) {
  check_sample(s);
  return losses::vfl_terms(prob(s), target(s), mask(s), cfg).item();
}

double ufl(const ClassificationSample& s, const FocalConfig& cfg) {
  check_sample(s);
  double weight = 0.0;
  if (s.y > 0.0) {
    if (!s.sigma_u) throw Error("ufl: positive sample needs sigma_u");
    weight = certainty(*s.sigma_u);
  }
  return losses::ufl_terms(prob(s), target(s), Tensor::scalar(weight), mask(s), cfg).item();
}

double classification_loss(FocalKind kind, const ClassificationSample& s,
                           const FocalConfig& cfg) {
  switch (kind) {
    case FocalKind::fl: return focal_loss(s, cfg);
    case FocalKind::qfl: return qfl(s, cfg);
    case FocalKind::vfl: return vfl(s, cfg);
    case FocalKind::ufl: return ufl(s, cfg);
  }
  throw Error("unknown focal kind");
}

}  // namespace uadet
