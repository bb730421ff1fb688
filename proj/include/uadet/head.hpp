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
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uadet/tensor.hpp"

namespace uadet {

// Optional per-location quality estimate used by the baseline scoring modes.
enum class QualityBranch { none, centerness, iou };

std::string_view to_string(QualityBranch q);
QualityBranch parse_quality_branch(std::string_view name);

struct HeadConfig {
  std::size_t in_channels = 16;
  std::size_t tower_depth = 2;
  std::size_t num_classes = 3;
  std::size_t grid_h = 16;
  std::size_t grid_w = 16;
  double stride = 4.0;
  bool use_crn = true;
  bool crn_bias = true;
  QualityBranch quality = QualityBranch::none;

  void validate() const;
  bool operator==(const HeadConfig&) const = default;
};

// Named parameter tensors in a fixed, deterministic order.
class HeadParams {
 public:
  void add(std::string name, ad::Tensor t);
  const ad::Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;
  const std::vector<std::pair<std::string, ad::Tensor>>& items() const { return items_; }
  std::size_t count() const;  // total scalar parameters
  double l2_norm() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, ad::Tensor>> items_;
};

struct HeadOutput {
  ad::Tensor cls_logits;      // [num_classes, H, W]
  ad::Tensor mu;              // [4, H, W], pixels
  ad::Tensor sigma;           // [4, H, W], (0, 1)
  ad::Tensor x_c;             // [1, H, W]; undefined without CRN
  ad::Tensor quality_logits;  // [1, H, W]; undefined without a quality branch
};

// Fan-in scaled uniform weights; prior bias on the classifier so p ~ 0.01.
HeadParams init_head(const HeadConfig& cfg, std::uint64_t seed);

// Zeroes the weights and biases of the mu, sigma, classifier and CRN output
// layers. Used for analytic checks of the forward pass.
void zero_output_layers(HeadParams& params);

HeadOutput head_forward(const HeadConfig& cfg, const HeadParams& params,
                        const ad::Tensor& features);

// Certainty network on a [4, H, W] sigma map:
//   x_c = sigmoid(w2 relu(w1 (1 - sigma) + b1) + b2)
// w1 [4, 4], b1 [4], w2 [1, 4], b2 [1]; pass undefined biases for the
// bias-free variant. Returns [1, H, W].
ad::Tensor crn(const ad::Tensor& sigma, const ad::Tensor& w1, const ad::Tensor& b1,
               const ad::Tensor& w2, const ad::Tensor& b2);

// Scale each of the C channels of x [C, H, W] by the per-location gate
// g [1, H, W].
ad::Tensor gate_channels(const ad::Tensor& x, const ad::Tensor& g);

// Checkpoint format: 8-byte magic "UADETCK1", uint64 little-endian header
// length, JSON header (head config plus tensor names, shapes and offsets),
// then the raw little-endian float64 payload.
void save_checkpoint(const std::string& path, const HeadConfig& cfg, const HeadParams& params);

struct Checkpoint {
  HeadConfig config;
  HeadParams params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace uadet
