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
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "uadet/error.hpp"
#include "uadet/uncertainty_losses.hpp"

using uadet::GaussianOffsets;
using uadet::OffsetTarget;
using uadet::ad::Tensor;
namespace ad = uadet::ad;
namespace losses = uadet::losses;

namespace {

const double kTwoLogTwoPi = 2.0 * std::log(2.0 * std::numbers::pi);

struct Sample {
  GaussianOffsets pred;
  OffsetTarget target;
};

Sample random_sample(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(0.0, 10.0), sig(0.05, 1.0), noise(-1.5, 1.5);
  Sample s;
  for (std::size_t k = 0; k < 4; ++k) {
    s.pred.mu[k] = pos(rng);
    s.pred.sigma[k] = sig(rng);
  }
  s.target = OffsetTarget::from_array({s.pred.mu[0] + noise(rng), s.pred.mu[1] + noise(rng),
                                       s.pred.mu[2] + noise(rng), s.pred.mu[3] + noise(rng)});
  return s;
}

Tensor leaf4(const std::array<double, 4>& v) { return Tensor::leaf({4}, {v.begin(), v.end()}); }
Tensor const4(const std::array<double, 4>& v) { return Tensor::constant({4}, {v.begin(), v.end()}); }

}  // namespace

TEST_CASE("nll worked examples") {
  const OffsetTarget t{3, 4, 5, 6};
  GaussianOffsets exact{{3, 4, 5, 6}, {1, 1, 1, 1}};
  CHECK(uadet::nll(exact, t) == doctest::Approx(kTwoLogTwoPi).epsilon(1e-14));
  CHECK(kTwoLogTwoPi == doctest::Approx(3.67575).epsilon(1e-6));
  GaussianOffsets off_by_one{{4, 5, 6, 7}, {1, 1, 1, 1}};
  CHECK(uadet::nll(off_by_one, t) == doctest::Approx(2.0 + kTwoLogTwoPi).epsilon(1e-14));
}

TEST_CASE("nll equals a direct long-double evaluation of the Gaussian density") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 500; ++i) {
    const Sample s = random_sample(rng);
    const long double ref =
        uadet::oracle::gaussian_nll_density(s.pred.mu, s.pred.sigma, s.target.as_array());
    const double got = uadet::nll(s.pred, s.target);
    CHECK(std::abs(got - static_cast<double>(ref)) <= 1e-11 * std::max(1.0, std::abs(got)));
  }
}

TEST_CASE("npll reductions") {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> w(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const Sample s = random_sample(rng);
    const double base = uadet::nll(s.pred, s.target);
    CHECK(uadet::npll(s.pred, s.target, 0.0) == 0.0);
    CHECK(uadet::npll(s.pred, s.target, 1.0) == base);
    const double weight = w(rng);
    CHECK(std::abs(uadet::npll(s.pred, s.target, weight) - weight * base) <= 1e-12);
  }
}

TEST_CASE("npll rejects weights outside [0, 1]") {
  const GaussianOffsets p{{1, 1, 1, 1}, {0.5, 0.5, 0.5, 0.5}};
  const OffsetTarget t{1, 1, 1, 1};
  CHECK_THROWS_AS(uadet::npll(p, t, 1.5), uadet::Error);
  CHECK_THROWS_AS(uadet::npll(p, t, -0.1), uadet::Error);
}

TEST_CASE("npll minimizer over sigma is min(1, |r|)") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> res(-1.6, 1.6), w(0.05, 1.0);
  for (int i = 0; i < 50; ++i) {
    const double r = res(rng);
    if (std::abs(r) < 2e-3) continue;
    const double weight = w(rng);
    auto f = [&](double sigma) {
      const GaussianOffsets p{{5.0, 5.0, 5.0, 5.0 + r}, {0.5, 0.5, 0.5, sigma}};
      return uadet::npll(p, OffsetTarget{5, 5, 5, 5}, weight);
    };
    const double argmin = uadet::oracle::minimize_1d(f, uadet::kSigmaFloor, 1.0);
    INFO("r = " << r);
    CHECK(std::abs(argmin - std::min(1.0, std::abs(r))) <= 1e-6);
  }
}

TEST_CASE("npll gradients") {
  std::mt19937_64 rng(24);
  for (int i = 0; i < 100; ++i) {
    const Sample s = random_sample(rng);
    const double weight = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const Tensor mu = leaf4(s.pred.mu), sigma = leaf4(s.pred.sigma);
    const Tensor target = const4(s.target.as_array());
    const auto rn = ad::grad_check(
        [&](const ad::Inputs& in) { return losses::nll(in[0], in[1], target); }, {mu, sigma});
    CHECK(rn.max_rel_error <= 1e-4);
    const auto rp = ad::grad_check(
        [&](const ad::Inputs& in) {
          return losses::npll(in[0], in[1], target, Tensor::scalar(weight));
        },
        {mu, sigma});
    CHECK(rp.max_rel_error <= 1e-4);
  }
}

TEST_CASE("npll is stationary in mu at the target") {
  const std::array<double, 4> t{2, 3, 4, 5};
  Tensor mu = leaf4(t), sigma = leaf4({0.2, 0.4, 0.6, 0.8});
  losses::npll(mu, sigma, const4(t), Tensor::scalar(0.7)).backward();
  for (double g : mu.grad()) CHECK(g == 0.0);
}

TEST_CASE("sigma tracks the residual: gradient sign flips at |r|") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> res(0.05, 0.95);
  for (int i = 0; i < 100; ++i) {
    const double r = res(rng);
    auto dsigma = [&](double s) {
      Tensor mu = Tensor::leaf({4}, {1.0, 1.0, 1.0, 1.0 + r});
      Tensor sigma = Tensor::leaf({4}, {0.5, 0.5, 0.5, s});
      losses::npll(mu, sigma, const4({1, 1, 1, 1}), Tensor::scalar(0.8)).backward();
      return sigma.grad()[3];
    };
    CHECK(dsigma(0.8 * r) < 0.0);
    CHECK(dsigma(std::min(1.0, 1.2 * r)) > 0.0);
  }
}

TEST_CASE("npll is invariant to a consistent permutation of directions") {
  std::mt19937_64 rng(26);
  for (int i = 0; i < 100; ++i) {
    const Sample s = random_sample(rng);
    std::array<std::size_t, 4> perm{0, 1, 2, 3};
    std::shuffle(perm.begin(), perm.end(), rng);
    Sample p;
    std::array<double, 4> t = s.target.as_array(), tp{};
    for (std::size_t k = 0; k < 4; ++k) {
      p.pred.mu[k] = s.pred.mu[perm[k]];
      p.pred.sigma[k] = s.pred.sigma[perm[k]];
      tp[k] = t[perm[k]];
    }
    p.target = OffsetTarget::from_array(tp);
    CHECK(uadet::npll(p.pred, p.target, 0.6) ==
          doctest::Approx(uadet::npll(s.pred, s.target, 0.6)).epsilon(1e-13));
  }
}

TEST_CASE("sigma below the floor is clamped") {
  const GaussianOffsets tiny{{1, 1, 1, 1}, {1e-9, 1, 1, 1}};
  const GaussianOffsets floor{{1, 1, 1, 1}, {uadet::kSigmaFloor, 1, 1, 1}};
  const OffsetTarget t{1.5, 1, 1, 1};
  CHECK(std::isfinite(uadet::nll(tiny, t)));
  CHECK(uadet::nll(tiny, t) == uadet::nll(floor, t));
}

TEST_CASE("giou_loss examples") {
  using uadet::Box;
  CHECK(uadet::giou_loss(Box{0, 0, 5, 5}, Box{0, 0, 5, 5}) == 0.0);
  CHECK(uadet::giou_loss(Box{0, 0, 1, 1}, Box{2, 0, 3, 1}) ==
        doctest::Approx(4.0 / 3.0).epsilon(1e-15));
  double prev = 0.0;
  for (double gap : {1.0, 10.0, 100.0, 1000.0, 1e5}) {
    const double v = uadet::giou_loss(Box{0, 0, 1, 1}, Box{1 + gap, 1 + gap, 2 + gap, 2 + gap});
    CHECK(v > prev);
    CHECK(v < 2.0);
    prev = v;
  }
  CHECK(prev > 2.0 - 1e-6);
}

TEST_CASE("dense giou_loss matches the box formula and its gradient") {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> off(0.3, 12.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 6;
    std::vector<double> pv(4 * n), tv(4 * n);
    for (auto& v : pv) v = off(rng);
    for (auto& v : tv) v = off(rng);
    const Tensor pred = Tensor::leaf({4, n}, pv);
    const Tensor target = Tensor::constant({4, n}, tv);
    double expected = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const uadet::Location loc{20.0, 20.0};
      const auto pb = uadet::box_from_offsets(loc, {pv[j], pv[n + j], pv[2 * n + j], pv[3 * n + j]});
      const auto gb = uadet::box_from_offsets(loc, {tv[j], tv[n + j], tv[2 * n + j], tv[3 * n + j]});
      expected += uadet::giou_loss(pb, gb);
    }
    CHECK(losses::giou_loss(pred, target).item() == doctest::Approx(expected).epsilon(1e-12));
    const auto r = ad::grad_check(
        [&](const ad::Inputs& in) { return losses::giou_loss(in[0], target); }, {pred});
    CHECK(r.max_rel_error <= 1e-4);
  }
}
