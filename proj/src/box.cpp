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

#include "uadet/box.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "uadet/error.hpp"

namespace uadet {

namespace {

std::string describe(const Box& b) {
  std::ostringstream os;
  os << "(" << b.x_lt << "," << b.y_lt << "," << b.x_rb << "," << b.y_rb << ")";
  return os.str();
}

void require_finite(Location loc) {
  if (!std::isfinite(loc.x) || !std::isfinite(loc.y)) {
    throw Error("non-finite location");
  }
}

struct Overlap {
  double intersection;
  double union_area;
  double enclosing;
};

Overlap overlap(const Box& a, const Box& b) {
  validate(a);
  validate(b);
  const double iw = std::max(0.0, std::min(a.x_rb, b.x_rb) - std::max(a.x_lt, b.x_lt));
  const double ih = std::max(0.0, std::min(a.y_rb, b.y_rb) - std::max(a.y_lt, b.y_lt));
  const double inter = iw * ih;
  const double cw = std::max(a.x_rb, b.x_rb) - std::min(a.x_lt, b.x_lt);
  const double ch = std::max(a.y_rb, b.y_rb) - std::min(a.y_lt, b.y_lt);
  return {inter, a.area() + b.area() - inter, cw * ch};
}

}  // namespace

void validate(const Box& b) {
  if (!std::isfinite(b.x_lt) || !std::isfinite(b.y_lt) || !std::isfinite(b.x_rb) ||
      !std::isfinite(b.y_rb)) {
    throw Error("box has non-finite coordinates " + describe(b));
  }
  if (b.x_lt > b.x_rb || b.y_lt > b.y_rb) {
    throw Error("box corners are inverted " + describe(b));
  }
}

OffsetTarget offsets_from_box(Location loc, const Box& gt) {
  require_finite(loc);
  validate(gt);
  return {loc.x - gt.x_lt, gt.x_rb - loc.x, loc.y - gt.y_lt, gt.y_rb - loc.y};
}

Box box_from_offsets(Location loc, const OffsetTarget& o) {
  require_finite(loc);
  if (!std::isfinite(o.l) || !std::isfinite(o.r) || !std::isfinite(o.t) ||
      !std::isfinite(o.b)) {
    throw Error("non-finite offsets");
  }
  if (o.l + o.r < 0.0 || o.t + o.b < 0.0) {
    std::ostringstream os;
    os << "offsets (" << o.l << "," << o.r << "," << o.t << "," << o.b
       << ") give a box with negative extent";
    throw Error(os.str());
  }
  return {loc.x - o.l, loc.y - o.t, loc.x + o.r, loc.y + o.b};
}

double iou(const Box& a, const Box& b) {
  const Overlap o = overlap(a, b);
  if (o.union_area <= 0.0) return a == b ? 1.0 : 0.0;
  return o.intersection / o.union_area;
}

double giou(const Box& a, const Box& b) {
  const Overlap o = overlap(a, b);
  if (o.union_area <= 0.0) return a == b ? 1.0 : 0.0;
  const double v = o.intersection / o.union_area;
  if (o.enclosing <= 0.0) return v;
  return v - std::max(0.0, o.enclosing - o.union_area) / o.enclosing;
}

}  // namespace uadet
