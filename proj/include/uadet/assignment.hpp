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

#include <cstddef>
#include <span>
#include <vector>

#include "uadet/box.hpp"

namespace uadet {

struct GroundTruth {
  Box box;
  int class_id = 0;
  bool operator==(const GroundTruth&) const = default;
};

// Single feature level. Location index = row * w + col; its center sits at
// ((col + 0.5) * stride, (row + 0.5) * stride).
struct GridSpec {
  std::size_t h = 0;
  std::size_t w = 0;
  double stride = 1.0;

  std::size_t size() const { return h * w; }
  Location center(std::size_t index) const {
    return {(static_cast<double>(index % w) + 0.5) * stride,
            (static_cast<double>(index / w) + 0.5) * stride};
  }
};

inline constexpr int kBackground = -1;

struct AssignmentMap {
  GridSpec grid;
  std::vector<int> label;              // class id or kBackground
  std::vector<int> matched;            // ground-truth index or -1
  std::vector<OffsetTarget> target;    // zero for background

  std::size_t num_positive() const;
  std::vector<std::size_t> positive_indices() const;
};

// Positive iff the location center lies inside (edges included) at least one
// box. A location covered by several boxes takes the one with the smallest
// area, the lower index on ties.
AssignmentMap assign(std::span<const GroundTruth> gts, const GridSpec& grid);

}  // namespace uadet
