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

namespace uadet {

// Axis-aligned box in continuous image coordinates (pixels).
struct Box {
  double x_lt = 0.0;
  double y_lt = 0.0;
  double x_rb = 0.0;
  double y_rb = 0.0;

  double width() const { return x_rb - x_lt; }
  double height() const { return y_rb - y_lt; }
  double area() const { return width() * height(); }
  bool contains(double x, double y) const {
    return x >= x_lt && x <= x_rb && y >= y_lt && y <= y_rb;
  }
  Box translated(double dx, double dy) const {
    return {x_lt + dx, y_lt + dy, x_rb + dx, y_rb + dy};
  }
  bool operator==(const Box&) const = default;
};

// Distances from a location to the four sides of a box, in the order
// left, right, top, bottom.
struct OffsetTarget {
  double l = 0.0;
  double r = 0.0;
  double t = 0.0;
  double b = 0.0;

  std::array<double, 4> as_array() const { return {l, r, t, b}; }
  static OffsetTarget from_array(const std::array<double, 4>& v) {
    return {v[0], v[1], v[2], v[3]};
  }
  bool operator==(const OffsetTarget&) const = default;
};

struct Location {
  double x = 0.0;
  double y = 0.0;
};

// Throws uadet::Error on non-finite coordinates or inverted corners.
void validate(const Box& box);

OffsetTarget offsets_from_box(Location loc, const Box& gt);
Box box_from_offsets(Location loc, const OffsetTarget& offsets);

double iou(const Box& a, const Box& b);
double giou(const Box& a, const Box& b);

}  // namespace uadet
