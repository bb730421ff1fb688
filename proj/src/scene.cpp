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

#include "uadet/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "uadet/config.hpp"
#include "uadet/error.hpp"

namespace uadet {

void SceneConfig::validate() const {
  if (!(stride >= 1.0) || std::floor(stride) != stride) {
    throw ConfigError("scene.stride must be an integer >= 1");
  }
  if (image_size < stride || image_size % static_cast<std::size_t>(stride) != 0) {
    throw ConfigError("scene.image_size must be a positive multiple of scene.stride");
  }
  if (classes < 1) throw ConfigError("scene.classes must be >= 1");
  if (feature_channels < classes + 9) {
    throw ConfigError("scene.feature_channels must be >= classes + 9 (got " +
                      std::to_string(feature_channels) + ")");
  }
  if (min_objects < 1 || max_objects < min_objects) {
    throw ConfigError("scene.objects must satisfy 1 <= min_objects <= max_objects");
  }
  if (!(min_size > 0.0) || !(max_size >= min_size)) {
    throw ConfigError("scene.min_size/max_size must satisfy 0 < min_size <= max_size");
  }
  for (double s : side_noise_std) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("scene.side_noise_std must be >= 0");
  }
  if (!(occlusion_rate >= 0.0 && occlusion_rate <= 1.0)) {
    throw ConfigError("scene.occlusion_rate must lie in [0, 1]");
  }
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise)) {
    throw ConfigError("scene.feature_noise must be >= 0");
  }
  const double margin = placement_margin();
  if (max_size + 2.0 * margin > static_cast<double>(image_size)) {
    throw ConfigError("scene objects plus noise margin do not fit in the image");
  }
}

std::size_t SceneConfig::grid() const { return image_size / static_cast<std::size_t>(stride); }

double SceneConfig::placement_margin() const {
  return 2.0 + 3.0 * *std::max_element(side_noise_std.begin(), side_noise_std.end());
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double overlap_area(const Box& a, const Box& b) {
  const double w = std::min(a.x_rb, b.x_rb) - std::max(a.x_lt, b.x_lt);
  const double h = std::min(a.y_rb, b.y_rb) - std::max(a.y_lt, b.y_lt);
  return w > 0.0 && h > 0.0 ? w * h : 0.0;
}

// Region whose boundary is ambiguous in the rendered signal: a band of
// 1.5 cells straddling one side of the box.
Box occlusion_band(const Box& b, int side, double stride) {
  const double half = 0.75 * stride;
  switch (side) {
    case 0:
      return {b.x_lt - half, b.y_lt, b.x_lt + half, b.y_rb};
    case 1:
      return {b.x_rb - half, b.y_lt, b.x_rb + half, b.y_rb};
    case 2:
      return {b.x_lt, b.y_lt - half, b.x_rb, b.y_lt + half};
    default:
      return {b.x_lt, b.y_rb - half, b.x_rb, b.y_rb + half};
  }
}

struct Placed {
  Box clean;
  int cls;
  int occluded;
};

bool try_place(const SceneConfig& cfg, std::mt19937_64& rng, std::vector<Placed>& objects) {
  const double margin = cfg.placement_margin();
  const double img = static_cast<double>(cfg.image_size);
  std::uniform_real_distribution<double> size(cfg.min_size, cfg.max_size);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, static_cast<int>(cfg.classes) - 1);
  std::uniform_int_distribution<int> side(0, 3);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const double w = size(rng), h = size(rng);
    const double x = margin + unit(rng) * (img - 2.0 * margin - w);
    const double y = margin + unit(rng) * (img - 2.0 * margin - h);
    const Box b{x, y, x + w, y + h};
    const bool clear = std::all_of(objects.begin(), objects.end(),
                                   [&](const Placed& o) { return iou(o.clean, b) < 0.1; });
    const int c = cls(rng);
    const bool occ = unit(rng) < cfg.occlusion_rate;
    const int s = side(rng);
    if (!clear) continue;
    objects.push_back({b, c, occ ? s : -1});
    return true;
  }
  return false;
}

Box jitter(const Box& b, const SceneConfig& cfg, std::mt19937_64& rng) {
  std::array<double, 4> e{};
  for (std::size_t k = 0; k < 4; ++k) {
    e[k] = cfg.side_noise_std[k] > 0.0
               ? std::normal_distribution<double>(0.0, cfg.side_noise_std[k])(rng)
               : 0.0;
  }
  const double img = static_cast<double>(cfg.image_size);
  auto clip = [img](double v) { return std::clamp(v, 0.0, img); };
  Box j{clip(b.x_lt + e[0]), clip(b.y_lt + e[2]), clip(b.x_rb + e[1]), clip(b.y_rb + e[3])};
  if (j.x_lt > j.x_rb) j.x_lt = j.x_rb = 0.5 * (j.x_lt + j.x_rb);
  if (j.y_lt > j.y_rb) j.y_lt = j.y_rb = 0.5 * (j.y_lt + j.y_rb);
  return j;
}

void render(const SceneConfig& cfg, const std::vector<Placed>& objects, std::mt19937_64& rng,
            Scene& scene) {
  const std::size_t g = cfg.grid();
  const std::size_t hw = g * g;
  const double s = cfg.stride;
  const std::size_t nc = cfg.classes;
  scene.channels = cfg.feature_channels;
  scene.h = scene.w = g;
  scene.features.assign(cfg.feature_channels * hw, 0.0);
  auto ch = [&](std::size_t c) { return scene.features.data() + c * hw; };

  for (const auto& o : objects) {
    double* plane = ch(static_cast<std::size_t>(o.cls));
    const Box band = o.occluded >= 0 ? occlusion_band(o.clean, o.occluded, s) : Box{};
    for (std::size_t r = 0; r < g; ++r) {
      for (std::size_t c = 0; c < g; ++c) {
        const Box cell{c * s, r * s, (c + 1) * s, (r + 1) * s};
        double v = overlap_area(cell, o.clean);
        if (o.occluded >= 0) {
          const Box inner{std::max(o.clean.x_lt, band.x_lt), std::max(o.clean.y_lt, band.y_lt),
                          std::min(o.clean.x_rb, band.x_rb), std::min(o.clean.y_rb, band.y_rb)};
          v += 0.5 * overlap_area(cell, band) - overlap_area(cell, inner);
        }
        v /= s * s;
        plane[r * g + c] = std::max(plane[r * g + c], v);
      }
    }
  }

  double* total = ch(nc);
  for (std::size_t i = 0; i < hw; ++i) {
    double m = 0.0;
    for (std::size_t c = 0; c < nc; ++c) m = std::max(m, ch(c)[i]);
    total[i] = std::min(1.0, m);
  }
  auto at = [&](long r, long c) {
    if (r < 0 || c < 0 || r >= static_cast<long>(g) || c >= static_cast<long>(g)) return 0.0;
    return total[static_cast<std::size_t>(r) * g + static_cast<std::size_t>(c)];
  };
  // Box-blurred coverage along each axis at two radii.
  const std::array<std::pair<int, bool>, 4> blurs{{{2, true}, {2, false}, {4, true}, {4, false}}};
  for (std::size_t b = 0; b < blurs.size(); ++b) {
    const auto [radius, horizontal] = blurs[b];
    double* out = ch(nc + 1 + b);
    for (long r = 0; r < static_cast<long>(g); ++r) {
      for (long c = 0; c < static_cast<long>(g); ++c) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d) acc += horizontal ? at(r, c + d) : at(r + d, c);
        out[static_cast<std::size_t>(r) * g + static_cast<std::size_t>(c)] = acc / (2 * radius + 1);
      }
    }
  }
  // Rising edges of coverage towards each side.
  const std::array<std::pair<int, int>, 4> dirs{{{0, -1}, {0, 1}, {-1, 0}, {1, 0}}};
  for (std::size_t k = 0; k < 4; ++k) {
    double* out = ch(nc + 5 + k);
    for (long r = 0; r < static_cast<long>(g); ++r) {
      for (long c = 0; c < static_cast<long>(g); ++c) {
        out[static_cast<std::size_t>(r) * g + static_cast<std::size_t>(c)] =
            std::max(0.0, at(r, c) - at(r + dirs[k].first, c + dirs[k].second));
      }
    }
  }
  if (cfg.feature_noise > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.feature_noise);
    for (auto& v : scene.features) v += noise(rng);
  }
}

}  // namespace

std::uint64_t scene_seed(std::uint64_t base, Split split, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(base) ^ static_cast<std::uint64_t>(split)) ^ index);
}

Scene generate_scene(const SceneConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  for (std::uint64_t round = 0; round < 100; ++round) {
    std::mt19937_64 rng(round == 0 ? seed : splitmix64(seed + round));
    const std::size_t n = std::uniform_int_distribution<std::size_t>(cfg.min_objects,
                                                                     cfg.max_objects)(rng);
    std::vector<Placed> objects;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) ok = try_place(cfg, rng, objects);
    if (!ok) continue;
    Scene scene;
    scene.seed = seed;
    for (const auto& o : objects) {
      scene.clean.push_back({o.clean, o.cls});
      scene.labels.push_back({jitter(o.clean, cfg, rng), o.cls});
      scene.occluded_side.push_back(o.occluded);
    }
    render(cfg, objects, rng, scene);
    return scene;
  }
  throw Error("generate_scene: could not place objects after 100 rounds");
}

std::vector<Scene> generate_scenes(const SceneConfig& cfg, Split split, std::size_t count) {
  std::vector<Scene> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(generate_scene(cfg, scene_seed(cfg.seed, split, i)));
  return out;
}

namespace {

nlohmann::json boxes_json(const std::vector<GroundTruth>& gts) {
  auto a = nlohmann::json::array();
  for (const auto& g : gts) {
    a.push_back({{"box", {g.box.x_lt, g.box.y_lt, g.box.x_rb, g.box.y_rb}}, {"class", g.class_id}});
  }
  return a;
}

std::vector<GroundTruth> boxes_from_json(const nlohmann::json& a) {
  std::vector<GroundTruth> out;
  for (const auto& e : a) {
    const auto b = e.at("box").get<std::array<double, 4>>();
    out.push_back({{b[0], b[1], b[2], b[3]}, e.at("class").get<int>()});
  }
  return out;
}

}  // namespace

void write_dataset(const std::string& stem, const SceneConfig& cfg, const std::vector<Scene>& scenes) {
  std::ofstream meta(stem + ".jsonl", std::ios::trunc);
  std::ofstream blob(stem + ".bin", std::ios::binary | std::ios::trunc);
  if (!meta || !blob) throw Error("cannot write dataset " + stem);
  std::uint64_t offset = 0;
  const nlohmann::json cfg_json = scene_config_to_json(cfg);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const Scene& s = scenes[i];
    nlohmann::json line;
    line["index"] = i;
    line["seed"] = s.seed;
    line["config"] = cfg_json;
    line["feature_shape"] = {s.channels, s.h, s.w};
    line["feature_offset"] = offset;
    line["labels"] = boxes_json(s.labels);
    line["clean"] = boxes_json(s.clean);
    line["occluded_side"] = s.occluded_side;
    meta << line.dump() << '\n';
    for (double v : s.features) {
      const auto bits = std::bit_cast<std::uint64_t>(v);
      char b[8];
      for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((bits >> (8 * k)) & 0xff);
      blob.write(b, 8);
    }
    offset += s.features.size();
  }
  if (!meta || !blob) throw Error("failed writing dataset " + stem);
}

std::vector<Scene> read_dataset(const std::string& stem) {
  std::ifstream meta(stem + ".jsonl");
  std::ifstream blob(stem + ".bin", std::ios::binary);
  if (!meta || !blob) throw Error("cannot open dataset " + stem);
  std::vector<Scene> out;
  std::string text;
  while (std::getline(meta, text)) {
    if (text.empty()) continue;
    const auto line = nlohmann::json::parse(text);
    Scene s;
    s.seed = line.at("seed").get<std::uint64_t>();
    const auto shape = line.at("feature_shape").get<std::array<std::size_t, 3>>();
    s.channels = shape[0];
    s.h = shape[1];
    s.w = shape[2];
    s.labels = boxes_from_json(line.at("labels"));
    s.clean = boxes_from_json(line.at("clean"));
    s.occluded_side = line.at("occluded_side").get<std::vector<int>>();
    const auto offset = line.at("feature_offset").get<std::uint64_t>();
    blob.seekg(static_cast<std::streamoff>(offset * 8));
    s.features.resize(s.channels * s.h * s.w);
    for (auto& v : s.features) {
      unsigned char b[8];
      if (!blob.read(reinterpret_cast<char*>(b), 8)) throw Error("dataset blob truncated");
      std::uint64_t bits = 0;
      for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
      v = std::bit_cast<double>(bits);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace uadet
