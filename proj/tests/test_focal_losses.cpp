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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "uadet/error.hpp"
#include "uadet/focal_losses.hpp"

using uadet::ClassificationSample;
using uadet::FocalConfig;
using uadet::ad::Tensor;
namespace ad = uadet::ad;
namespace losses = uadet::losses;

namespace {

// Direct evaluation of binary cross-entropy, used to freeze expected values.
double ref_bce(double p, double y) { return -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p)); }

const FocalConfig kDefault{};
constexpr double kEps = uadet::kProbEpsilon;

}  // namespace

TEST_CASE("certainty endpoints and mean of complements") {
  CHECK(uadet::certainty({0, 0, 0, 0}) == 1.0);
  CHECK(uadet::certainty({1, 1, 1, 1}) == 0.0);
  CHECK(uadet::certainty({0.2, 0.4, 0.6, 0.8}) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(uadet::certainty({0.2, 1.2, 0.0, 0.0}), uadet::Error);
  CHECK_THROWS_AS(uadet::certainty({-0.1, 0.0, 0.0, 0.0}), uadet::Error);
}

TEST_CASE("certainty is bounded, monotone and permutation invariant") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    std::array<double, 4> s{u(rng), u(rng), u(rng), u(rng)};
    const double f = uadet::certainty(s);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
    auto bumped = s;
    const std::size_t k = i % 4;
    bumped[k] = std::min(1.0, s[k] + 0.1 * u(rng));
    CHECK(uadet::certainty(bumped) <= f);
    auto shuffled = s;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(uadet::certainty(shuffled) == doctest::Approx(f).epsilon(1e-15));
  }
}

TEST_CASE("focal loss examples") {
  CHECK(uadet::focal_loss({1.0 - kEps, 1.0, {}}, kDefault) < 1e-12);
  CHECK(uadet::focal_loss({kEps, 0.0, {}}, kDefault) < 1e-12);
  // 0.25 * (1 - 0.5)^2 * log 2
  CHECK(uadet::focal_loss({0.5, 1.0, {}}, kDefault) ==
        doctest::Approx(0.25 * 0.25 * std::log(2.0)).epsilon(1e-14));
  CHECK(uadet::focal_loss({0.5, 1.0, {}}, kDefault) == doctest::Approx(0.04332).epsilon(1e-4));
  // Negatives are weighted by 1 - alpha.
  CHECK(uadet::focal_loss({0.5, 0.0, {}}, kDefault) ==
        doctest::Approx(0.75 * 0.25 * std::log(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(uadet::focal_loss({0.5, 0.3, {}}, kDefault), uadet::Error);
}

TEST_CASE("qfl examples") {
  CHECK(uadet::qfl({0.7, 0.7, {}}, kDefault) == 0.0);
  CHECK(uadet::qfl({kEps, 0.0, {}}, kDefault) < 1e-12);
  const double expected = 0.16 * ref_bce(0.4, 0.8);
  CHECK(expected == doctest::Approx(0.133632).epsilon(1e-5));
  CHECK(uadet::qfl({0.4, 0.8, {}}, kDefault) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("vfl examples") {
  CHECK(uadet::vfl({kEps, 0.0, {}}, kDefault) < 1e-12);
  CHECK(uadet::vfl({1.0 - kEps, 1.0, {}}, kDefault) < 1e-6);
  const double expected = 0.8 * ref_bce(0.4, 0.8);
  CHECK(expected == doctest::Approx(0.668158).epsilon(1e-5));
  CHECK(uadet::vfl({0.4, 0.8, {}}, kDefault) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("ufl examples") {
  for (double p : {0.1, 0.5, 0.9}) {
    CHECK(uadet::ufl({p, 0.6, std::array<double, 4>{1, 1, 1, 1}}, kDefault) == 0.0);
  }
  const double y = 0.8;
  CHECK(uadet::ufl({0.4, y, std::array<double, 4>{1 - y, 1 - y, 1 - y, 1 - y}}, kDefault) ==
        doctest::Approx(uadet::vfl({0.4, y, {}}, kDefault)).epsilon(1e-14));
  // f = 1 - (0.1 + 0.1 + 0.3 + 0.3) / 4 = 0.8
  const double expected = 0.8 * ref_bce(0.4, 0.8);
  CHECK(uadet::ufl({0.4, 0.8, std::array<double, 4>{0.1, 0.1, 0.3, 0.3}}, kDefault) ==
        doctest::Approx(expected).epsilon(1e-14));
  CHECK_THROWS_AS(uadet::ufl({0.4, 0.8, {}}, kDefault), uadet::Error);
  // Negatives need no sigma.
  CHECK(uadet::ufl({0.3, 0.0, {}}, kDefault) == uadet::vfl({0.3, 0.0, {}}, kDefault));
}

TEST_CASE("ufl and vfl negative branches are the same function") {
  for (int i = 1; i < 1000; ++i) {
    const double p = i / 1000.0;
    CHECK(uadet::ufl({p, 0.0, {}}, kDefault) == uadet::vfl({p, 0.0, {}}, kDefault));
    const double ref = -0.25 * p * p * std::log(1.0 - p);
    CHECK(uadet::vfl({p, 0.0, {}}, kDefault) == doctest::Approx(ref).epsilon(1e-13));
  }
}

TEST_CASE("all focal losses are non-negative under clamping") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double p = u(rng), y = (i % 3 == 0) ? 0.0 : u(rng);
    const std::array<double, 4> s{u(rng), u(rng), u(rng), u(rng)};
    CHECK(uadet::qfl({p, y, {}}, kDefault) >= 0.0);
    CHECK(uadet::vfl({p, y, {}}, kDefault) >= 0.0);
    CHECK(uadet::ufl({p, y, s}, kDefault) >= 0.0);
    CHECK(uadet::focal_loss({p, y > 0.0 ? 1.0 : 0.0, {}}, kDefault) >= 0.0);
  }
  CHECK(std::isfinite(uadet::vfl({1.0, 0.0, {}}, kDefault)));
  CHECK(std::isfinite(uadet::qfl({0.0, 0.5, {}}, kDefault)));
}

TEST_CASE("focal family gradients in p match finite differences") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> up(0.01, 0.99), uy(0.05, 1.0), coin(0.0, 1.0);
  const std::size_t n = 100;
  std::vector<double> p(n), y(n), hard(n), pos(n), sig(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = up(rng);
    pos[i] = coin(rng) < 0.4 ? 1.0 : 0.0;
    y[i] = pos[i] * uy(rng);
    hard[i] = pos[i];
  }
  for (auto& s : sig) s = coin(rng);
  const Tensor P = Tensor::leaf({n}, p);
  const Tensor S = Tensor::leaf({4, n}, sig);
  const Tensor Y = Tensor::constant({n}, y);
  const Tensor M = Tensor::constant({n}, pos);

  auto check = [](const char* name, const ad::GradCheckResult& r) {
    INFO(name);
    CHECK(r.finite);
    CHECK(r.max_rel_error <= 1e-4);
  };
  check("fl", ad::grad_check([&](const ad::Inputs& in) { return ad::sum(losses::fl_terms(in[0], M, kDefault)); }, {P}));
  check("qfl", ad::grad_check([&](const ad::Inputs& in) { return ad::sum(losses::qfl_terms(in[0], Y, M, kDefault)); }, {P}));
  check("vfl", ad::grad_check([&](const ad::Inputs& in) { return ad::sum(losses::vfl_terms(in[0], Y, M, kDefault)); }, {P}));
  check("ufl", ad::grad_check(
                   [&](const ad::Inputs& in) {
                     const Tensor w = ad::reshape(losses::certainty(in[1]), {n});
                     return ad::sum(losses::ufl_terms(in[0], Y, w, M, kDefault));
                   },
                   {P, S}));
}

TEST_CASE("ufl gradient in each sigma is -bce/4 on positives") {
  const double p = 0.35, y = 0.7;
  Tensor P = Tensor::leaf({1}, {p});
  Tensor S = Tensor::leaf({4, 1}, {0.1, 0.2, 0.3, 0.4});
  const Tensor w = ad::reshape(losses::certainty(S), {1});
  ad::sum(losses::ufl_terms(P, Tensor::scalar(y), w, Tensor::scalar(1.0), kDefault)).backward();
  for (double g : S.grad()) CHECK(g == doctest::Approx(-0.25 * ref_bce(p, y)).epsilon(1e-13));

  // A detached weight cuts the path into sigma.
  Tensor S2 = Tensor::leaf({4, 1}, {0.1, 0.2, 0.3, 0.4});
  const Tensor wd = ad::reshape(losses::certainty(S2), {1}).detach();
  ad::sum(losses::ufl_terms(Tensor::leaf({1}, {p}), Tensor::scalar(y), wd, Tensor::scalar(1.0),
                            kDefault))
      .backward();
  for (double g : S2.grad()) CHECK(g == 0.0);
}

TEST_CASE("focal config validation") {
  CHECK_NOTHROW(FocalConfig{}.validate());
  CHECK_THROWS_AS((FocalConfig{0.0, 2.0, 0.05}.validate()), uadet::ConfigError);
  CHECK_THROWS_AS((FocalConfig{0.25, -1.0, 0.05}.validate()), uadet::ConfigError);
  CHECK_THROWS_AS((FocalConfig{0.25, 2.0, 0.0}.validate()), uadet::ConfigError);
  CHECK(uadet::parse_focal_kind("ufl") == uadet::FocalKind::ufl);
  CHECK_THROWS_AS(uadet::parse_focal_kind("dfl"), uadet::ConfigError);
}
