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

#include "uadet/head.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "uadet/config.hpp"
#include "uadet/error.hpp"

namespace uadet {

namespace ad = uadet::ad;
using ad::Tensor;

std::string_view to_string(QualityBranch q) {
  switch (q) {
    case QualityBranch::none:
      return "none";
    case QualityBranch::centerness:
      return "centerness";
    case QualityBranch::iou:
      return "iou";
  }
  return "none";
}

QualityBranch parse_quality_branch(std::string_view name) {
  if (name == "none") return QualityBranch::none;
  if (name == "centerness") return QualityBranch::centerness;
  if (name == "iou") return QualityBranch::iou;
  throw ConfigError("unknown quality branch '" + std::string(name) +
                    "' (expected none, centerness or iou)");
}

void HeadConfig::validate() const {
  auto positive = [](std::size_t v, const char* field) {
    if (v < 1) throw ConfigError(std::string("head.") + field + " must be >= 1");
  };
  positive(in_channels, "in_channels");
  positive(tower_depth, "tower_depth");
  positive(num_classes, "num_classes");
  positive(grid_h, "grid_h");
  positive(grid_w, "grid_w");
  if (!(stride >= 1.0) || !std::isfinite(stride)) throw ConfigError("head.stride must be >= 1");
}

void HeadParams::add(std::string name, Tensor t) {
  if (contains(name)) throw Error("duplicate parameter " + name);
  items_.emplace_back(std::move(name), std::move(t));
}

const Tensor& HeadParams::get(std::string_view name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw Error("no parameter named " + std::string(name));
}

bool HeadParams::contains(std::string_view name) const {
  return std::any_of(items_.begin(), items_.end(), [&](const auto& it) { return it.first == name; });
}

std::size_t HeadParams::count() const {
  std::size_t n = 0;
  for (const auto& it : items_) n += it.second.size();
  return n;
}

double HeadParams::l2_norm() const {
  double s = 0.0;
  for (const auto& it : items_) {
    for (double v : it.second.data()) s += v * v;
  }
  return std::sqrt(s);
}

void HeadParams::zero_grad() {
  for (auto& it : items_) it.second.zero_grad();
}

namespace {

struct Init {
  std::mt19937_64 rng;

  Tensor uniform(ad::Shape shape, double bound) {
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> v(ad::numel(shape));
    for (auto& x : v) x = u(rng);
    return Tensor::leaf(std::move(shape), std::move(v));
  }
  static Tensor filled(ad::Shape shape, double value) {
    return Tensor::leaf(shape, std::vector<double>(ad::numel(shape), value));
  }
};

void add_conv(HeadParams& p, Init& init, const std::string& name, std::size_t cout,
              std::size_t cin, double bound, double bias) {
  p.add(name + ".weight", init.uniform({cout, cin, 3, 3}, bound));
  p.add(name + ".bias", Init::filled({cout}, bias));
}

Tensor conv(const HeadParams& p, const std::string& name, const Tensor& x) {
  return ad::conv3x3(x, p.get(name + ".weight"), p.get(name + ".bias"));
}

Tensor tower(const HeadConfig& cfg, const HeadParams& p, const std::string& prefix, Tensor x) {
  for (std::size_t i = 0; i < cfg.tower_depth; ++i) {
    x = ad::relu(conv(p, prefix + "." + std::to_string(i), x));
  }
  return x;
}

constexpr double kOutputInitBound = 0.01;

}  // namespace

HeadParams init_head(const HeadConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Init init{std::mt19937_64(seed)};
  HeadParams p;
  const std::size_t c = cfg.in_channels;
  const double tower_bound = std::sqrt(6.0 / static_cast<double>(9 * c));
  for (const char* branch : {"cls_tower", "reg_tower"}) {
    for (std::size_t i = 0; i < cfg.tower_depth; ++i) {
      add_conv(p, init, std::string(branch) + "." + std::to_string(i), c, c, tower_bound, 0.0);
    }
  }
  const double prior = -std::log((1.0 - 0.01) / 0.01);
  add_conv(p, init, "cls_out", cfg.num_classes, c, kOutputInitBound, prior);
  add_conv(p, init, "mu_out", 4, c, kOutputInitBound, 0.0);
  add_conv(p, init, "sigma_out", 4, c, kOutputInitBound, 0.0);
  if (cfg.quality != QualityBranch::none) {
    add_conv(p, init, "quality_out", 1, c, kOutputInitBound, 0.0);
  }
  if (cfg.use_crn) {
    p.add("crn.w1", init.uniform({4, 4}, std::sqrt(6.0 / 4.0)));
    if (cfg.crn_bias) p.add("crn.b1", Init::filled({4}, 0.0));
    p.add("crn.w2", init.uniform({1, 4}, std::sqrt(6.0 / 4.0)));
    if (cfg.crn_bias) p.add("crn.b2", Init::filled({1}, 0.0));
  }
  return p;
}

void zero_output_layers(HeadParams& params) {
  for (const auto& [name, t] : params.items()) {
    const bool output = name.starts_with("cls_out.") || name.starts_with("mu_out.") ||
                        name.starts_with("sigma_out.") || name.starts_with("quality_out.") ||
                        name.starts_with("crn.b");
    if (!output) continue;
    Tensor alias = t;
    auto d = alias.mutable_data();
    std::fill(d.begin(), d.end(), 0.0);
  }
}

Tensor gate_channels(const Tensor& x, const Tensor& g) {
  const auto& sx = x.shape();
  const auto& sg = g.shape();
  if (sx.size() != 3 || sg.size() != 3 || sg[0] != 1 || sg[1] != sx[1] || sg[2] != sx[2]) {
    throw Error("gate_channels: incompatible shapes " + ad::shape_to_string(sx) + " and " +
                ad::shape_to_string(sg));
  }
  const std::size_t hw = sx[1] * sx[2];
  const Tensor ones = Tensor::full({sx[0], 1}, 1.0);
  const Tensor tiled = ad::matmul(ones, ad::reshape(g, {1, hw}));
  return x * ad::reshape(tiled, sx);
}

Tensor crn(const Tensor& sigma, const Tensor& w1, const Tensor& b1, const Tensor& w2,
           const Tensor& b2) {
  const auto& s = sigma.shape();
  if (s.size() != 3 || s[0] != 4) {
    throw Error("crn: sigma must be [4, H, W], got " + ad::shape_to_string(s));
  }
  if (w1.shape() != ad::Shape{4, 4} || w2.shape() != ad::Shape{1, 4}) {
    throw Error("crn: weights must be [4, 4] and [1, 4], got " + ad::shape_to_string(w1.shape()) +
                " and " + ad::shape_to_string(w2.shape()));
  }
  const std::size_t hw = s[1] * s[2];
  const Tensor ones = Tensor::full({1, hw}, 1.0);
  Tensor h = ad::matmul(w1, 1.0 - ad::reshape(sigma, {4, hw}));
  if (b1.defined()) h = h + ad::matmul(ad::reshape(b1, {4, 1}), ones);
  Tensor z = ad::matmul(w2, ad::relu(h));
  if (b2.defined()) z = z + ad::matmul(ad::reshape(b2, {1, 1}), ones);
  return ad::reshape(ad::sigmoid(z), {1, s[1], s[2]});
}

HeadOutput head_forward(const HeadConfig& cfg, const HeadParams& p, const Tensor& features) {
  const ad::Shape expect{cfg.in_channels, cfg.grid_h, cfg.grid_w};
  if (features.shape() != expect) {
    throw Error("head_forward: features " + ad::shape_to_string(features.shape()) +
                " do not match head input " + ad::shape_to_string(expect));
  }
  HeadOutput out;
  const Tensor reg = tower(cfg, p, "reg_tower", features);
  // Offsets are positive distances; the exponent is in units of the stride.
  out.mu = ad::exp(conv(p, "mu_out", reg)) * cfg.stride;
  out.sigma = ad::sigmoid(conv(p, "sigma_out", reg));
  if (cfg.quality != QualityBranch::none) out.quality_logits = conv(p, "quality_out", reg);

  Tensor cls = tower(cfg, p, "cls_tower", features);
  if (cfg.use_crn) {
    const Tensor none;
    out.x_c = crn(out.sigma, p.get("crn.w1"), cfg.crn_bias ? p.get("crn.b1") : none,
                  p.get("crn.w2"), cfg.crn_bias ? p.get("crn.b2") : none);
    cls = gate_channels(cls, out.x_c);
  }
  out.cls_logits = conv(p, "cls_out", cls);
  return out;
}

namespace {

constexpr char kMagic[8] = {'U', 'A', 'D', 'E', 'T', 'C', 'K', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const HeadConfig& cfg, const HeadParams& params) {
  nlohmann::json header;
  header["format"] = "uadet-checkpoint";
  header["version"] = 1;
  header["head"] = head_config_to_json(cfg);
  auto& tensors = header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : params.items()) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.size();
  }
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + path + " for writing");
  os.write(kMagic, sizeof kMagic);
  put_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& it : params.items()) {
    for (double v : it.second.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw Error("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error(path + " is not a uadet checkpoint");
  }
  const std::uint64_t len = get_u64(is);
  if (len > (1u << 26)) throw Error("checkpoint header too large");
  std::string text(len, '\0');
  if (!is.read(text.data(), static_cast<std::streamsize>(len))) throw Error("checkpoint truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint header is not valid JSON: " + std::string(e.what()));
  }
  if (header.value("format", "") != "uadet-checkpoint" || header.value("version", 0) != 1) {
    throw Error("unsupported checkpoint format in " + path);
  }
  Checkpoint ck;
  ck.config = head_config_from_json(header.at("head"));
  for (const auto& entry : header.at("tensors")) {
    ad::Shape shape = entry.at("shape").get<ad::Shape>();
    std::vector<double> values(ad::numel(shape));
    for (auto& v : values) v = std::bit_cast<double>(get_u64(is));
    ck.params.add(entry.at("name").get<std::string>(), Tensor::leaf(std::move(shape), std::move(values)));
  }
  // The parameter set must be exactly what this config would create.
  const HeadParams fresh = init_head(ck.config, 0);
  bool same = fresh.items().size() == ck.params.items().size();
  for (std::size_t i = 0; same && i < fresh.items().size(); ++i) {
    same = fresh.items()[i].first == ck.params.items()[i].first &&
           fresh.items()[i].second.shape() == ck.params.items()[i].second.shape();
  }
  if (!same) throw ConfigError("checkpoint tensors do not match its head config");
  return ck;
}

}  // namespace uadet
