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
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "uadet/assignment.hpp"

namespace uadet {

struct SceneConfig {
  std::size_t image_size = 64;  // pixels, square
  double stride = 4.0;          // pixels per grid cell
  std::size_t feature_channels = 16;
  std::size_t min_objects = 1;
  std::size_t max_objects = 3;
  std::size_t classes = 3;
  double min_size = 8.0;  // object side length range, pixels
  double max_size = 20.0;
  // Per-side Gaussian jitter of the annotation, pixels, order l, r, t, b.
  std::array<double, 4> side_noise_std{0.0, 0.0, 0.0, 0.0};
  double occlusion_rate = 0.0;
  double feature_noise = 0.05;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t grid() const;  // cells per side
  // Distance kept between objects and the image border, pixels.
  double placement_margin() const;
  bool operator==(const SceneConfig&) const = default;
};

enum class Split : std::uint64_t { train = 0, eval = 1 };

struct Scene {
  std::uint64_t seed = 0;
  std::size_t channels = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<double> features;      // [channels, h, w]
  std::vector<GroundTruth> labels;   // jittered annotation used for training
  std::vector<GroundTruth> clean;    // true geometry used for evaluation
  std::vector<int> occluded_side;    // per object: -1 or 0..3 (l, r, t, b)
};

// Deterministic per-scene seed from a base seed, a split and an index.
std::uint64_t scene_seed(std::uint64_t base, Split split, std::uint64_t index);

Scene generate_scene(const SceneConfig& cfg, std::uint64_t seed);
std::vector<Scene> generate_scenes(const SceneConfig& cfg, Split split, std::size_t count);

// Dataset on disk: `<stem>.jsonl` holding one scene per line (config,
// boxes, feature offset) and `<stem>.bin` holding little-endian float64
// features back to back.
void write_dataset(const std::string& stem, const SceneConfig& cfg, const std::vector<Scene>& scenes);
std::vector<Scene> read_dataset(const std::string& stem);

}  // namespace uadet
