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

// Reference implementations used only by tests. None of these call into the
// library code paths they are compared against.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace uadet::oracle {

struct RasterBox {
  double x0, y0, x1, y1;
};

struct RasterOverlap {
  double intersection = 0.0;
  double union_area = 0.0;
  double enclosing = 0.0;

  double iou() const { return union_area > 0.0 ? intersection / union_area : 0.0; }
  double giou() const {
    if (union_area <= 0.0) return 0.0;
    return iou() - (enclosing - union_area) / enclosing;
  }
};

// Counts sample points on a regular grid of the given pitch, one sample at
// the center of each cell of the enclosing box. Exact when every box edge
// falls on the grid.
inline RasterOverlap raster_overlap(const RasterBox& a, const RasterBox& b, double pitch) {
  const double ex0 = std::min(a.x0, b.x0), ey0 = std::min(a.y0, b.y0);
  const double ex1 = std::max(a.x1, b.x1), ey1 = std::max(a.y1, b.y1);
  const long nx = std::lround((ex1 - ex0) / pitch);
  const long ny = std::lround((ey1 - ey0) / pitch);
  auto inside = [](const RasterBox& r, double x, double y) {
    return x > r.x0 && x < r.x1 && y > r.y0 && y < r.y1;
  };
  long in_a = 0, in_b = 0, in_both = 0;
  for (long j = 0; j < ny; ++j) {
    const double y = ey0 + (static_cast<double>(j) + 0.5) * pitch;
    for (long i = 0; i < nx; ++i) {
      const double x = ex0 + (static_cast<double>(i) + 0.5) * pitch;
      const bool ia = inside(a, x, y), ib = inside(b, x, y);
      in_a += ia;
      in_b += ib;
      in_both += ia && ib;
    }
  }
  const double cell = pitch * pitch;
  RasterOverlap r;
  r.intersection = static_cast<double>(in_both) * cell;
  r.union_area = static_cast<double>(in_a + in_b - in_both) * cell;
  r.enclosing = static_cast<double>(nx * ny) * cell;
  return r;
}

// Gaussian negative log-density summed over coordinates, evaluated in long
// double straight from the density formula.
inline long double gaussian_nll_density(const std::array<double, 4>& mu,
                                        const std::array<double, 4>& sigma,
                                        const std::array<double, 4>& x) {
  long double total = 0.0L;
  const long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  for (std::size_t k = 0; k < 4; ++k) {
    const long double s = sigma[k];
    const long double z = (static_cast<long double>(x[k]) - mu[k]) / s;
    const long double density = std::exp(-0.5L * z * z) / (s * std::sqrt(two_pi));
    total -= std::log(density);
  }
  return total;
}

// Dense grid scan followed by golden-section refinement of a 1-D function on
// [lo, hi]. Returns the argmin.
inline double minimize_1d(const std::function<double(double)>& f, double lo, double hi) {
  const int n = 2000;
  double best_x = lo, best_f = f(lo);
  for (int i = 1; i <= n; ++i) {
    const double x = lo + (hi - lo) * i / n;
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }
  const double step = (hi - lo) / n;
  double a = std::max(lo, best_x - step), b = std::min(hi, best_x + step);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - phi * (b - a);
    d = a + phi * (b - a);
  }
  return 0.5 * (a + b);
}

struct RefCandidate {
  std::array<double, 4> box;  // x0, y0, x1, y1
  int cls;
  double score;
  std::size_t location;
};

inline double ref_iou(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  const double iw = std::max(0.0, std::min(a[2], b[2]) - std::max(a[0], b[0]));
  const double ih = std::max(0.0, std::min(a[3], b[3]) - std::max(a[1], b[1]));
  const double inter = iw * ih;
  const double uni = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter;
  if (uni <= 0.0) return a == b ? 1.0 : 0.0;
  return inter / uni;
}

// Exhaustive greedy suppression: repeatedly scan every remaining candidate
// for the best one, keep it, then drop everything of the same class that it
// overlaps at or above the threshold. Returns indices into `cands` in keep
// order.
inline std::vector<std::size_t> exhaustive_nms(const std::vector<RefCandidate>& cands,
                                               double threshold) {
  std::vector<bool> alive(cands.size(), true);
  std::vector<std::size_t> kept;
  while (true) {
    std::size_t best = cands.size();
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!alive[i]) continue;
      if (best == cands.size()) {
        best = i;
        continue;
      }
      const auto& c = cands[i];
      const auto& b = cands[best];
      const bool better =
          c.score > b.score ||
          (c.score == b.score &&
           (c.location < b.location || (c.location == b.location && c.cls < b.cls)));
      if (better) best = i;
    }
    if (best == cands.size()) break;
    kept.push_back(best);
    alive[best] = false;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (alive[i] && cands[i].cls == cands[best].cls &&
          ref_iou(cands[i].box, cands[best].box) >= threshold) {
        alive[i] = false;
      }
    }
  }
  return kept;
}

struct RefGt {
  std::array<double, 4> box;
  int cls;
};

// Per-location containment scan over every box; the smallest-area box wins,
// lower index on equal area. Returns the matched index or -1.
inline std::vector<int> brute_force_assignment(const std::vector<RefGt>& gts, std::size_t h,
                                               std::size_t w, double stride) {
  std::vector<int> out(h * w, -1);
  for (std::size_t row = 0; row < h; ++row) {
    for (std::size_t col = 0; col < w; ++col) {
      const double x = (static_cast<double>(col) + 0.5) * stride;
      const double y = (static_cast<double>(row) + 0.5) * stride;
      double best_area = 0.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        const auto& b = gts[g].box;
        if (x < b[0] || x > b[2] || y < b[1] || y > b[3]) continue;
        const double area = (b[2] - b[0]) * (b[3] - b[1]);
        if (out[row * w + col] < 0 || area < best_area) {
          out[row * w + col] = static_cast<int>(g);
          best_area = area;
        }
      }
    }
  }
  return out;
}

}  // namespace uadet::oracle
