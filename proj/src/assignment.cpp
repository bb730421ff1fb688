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

#include "uadet/assignment.hpp"

#include <cmath>

#include "uadet/error.hpp"

namespace uadet {

std::size_t AssignmentMap::num_positive() const {
  std::size_t n = 0;
  for (int l : label) n += l != kBackground;
  return n;
}

std::vector<std::size_t> AssignmentMap::positive_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (label[i] != kBackground) out.push_back(i);
  }
  return out;
}

AssignmentMap assign(std::span<const GroundTruth> gts, const GridSpec& grid) {
  if (grid.h == 0 || grid.w == 0 || !(grid.stride > 0.0)) throw Error("assign: empty grid");
  for (const auto& g : gts) {
    validate(g.box);
    if (g.class_id < 0) throw Error("assign: negative class id");
  }
  AssignmentMap m;
  m.grid = grid;
  m.label.assign(grid.size(), kBackground);
  m.matched.assign(grid.size(), -1);
  m.target.assign(grid.size(), OffsetTarget{});

  for (std::size_t g = 0; g < gts.size(); ++g) {
    const Box& b = gts[g].box;
    // Candidate rows/cols whose centers could fall inside b.
    const auto lo = [&](double v) {
      return static_cast<long>(std::max(0.0, std::floor(v / grid.stride - 0.5)));
    };
    const long c0 = lo(b.x_lt), r0 = lo(b.y_lt);
    const long c1 = std::min<long>(static_cast<long>(grid.w) - 1,
                                   static_cast<long>(std::ceil(b.x_rb / grid.stride)));
    const long r1 = std::min<long>(static_cast<long>(grid.h) - 1,
                                   static_cast<long>(std::ceil(b.y_rb / grid.stride)));
    for (long r = r0; r <= r1; ++r) {
      for (long c = c0; c <= c1; ++c) {
        const std::size_t idx = static_cast<std::size_t>(r) * grid.w + static_cast<std::size_t>(c);
        const Location p = grid.center(idx);
        if (!b.contains(p.x, p.y)) continue;
        const int cur = m.matched[idx];
        if (cur >= 0 && gts[static_cast<std::size_t>(cur)].box.area() <= b.area()) continue;
        m.matched[idx] = static_cast<int>(g);
        m.label[idx] = gts[g].class_id;
        m.target[idx] = offsets_from_box(p, b);
      }
    }
  }
  return m;
}

}  // namespace uadet
