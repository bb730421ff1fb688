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
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace uadet::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

namespace detail {
struct Node;
}

// Dense float64 tensor with reverse-mode gradient tracking.
//
// A Tensor is a cheap handle onto a graph node; copies alias the same node.
// Leaves created with requires_grad accumulate gradients on backward().
// Every op result keeps its inputs alive, so the graph lives as long as the
// root handle does.
class Tensor {
 public:
  Tensor() = default;

  static Tensor leaf(Shape shape, std::vector<double> values,
                     bool requires_grad = true);
  static Tensor constant(Shape shape, std::vector<double> values);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t size() const;
  std::size_t dim(std::size_t axis) const;
  bool requires_grad() const;
  bool is_leaf() const;

  std::span<const double> data() const;
  // Mutable access for leaves only (optimizers, finite differences).
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t flat_index) const;

  // Gradient view; all zeros until backward() has touched this tensor.
  std::span<const double> grad() const;
  bool has_grad() const;
  void zero_grad();

  // New constant leaf with this tensor's values; cuts the graph.
  Tensor detach() const;

  void backward() const;

  const detail::Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct OpBuilder;
};

// Elementwise binary ops. Shapes must match exactly, or one operand must hold
// a single element (scalar-vs-tensor broadcasting only).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
// Gradient flows to the selected operand; ties route to `a`.
Tensor minimum(const Tensor& a, const Tensor& b);
Tensor maximum(const Tensor& a, const Tensor& b);

Tensor log(const Tensor& x);
Tensor exp(const Tensor& x);
// x^exponent for x >= 0. At x == 0 the derivative is taken as 0 when
// exponent > 1, exponent when exponent == 1.
Tensor power(const Tensor& x, double exponent);
Tensor sigmoid(const Tensor& x);
Tensor relu(const Tensor& x);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// [m, k] x [k, n] -> [m, n]
Tensor matmul(const Tensor& a, const Tensor& b);

// Zero-padded, stride-1 3x3 convolution.
// input [c_in, h, w], weight [c_out, c_in, 3, 3], bias [c_out] -> [c_out, h, w]
Tensor conv3x3(const Tensor& input, const Tensor& weight, const Tensor& bias);

// Structural ops.
Tensor reshape(const Tensor& x, Shape shape);
// Rows [begin, end) along axis 0.
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
// Concatenate along axis 0; trailing dimensions must agree.
Tensor concat_rows(const std::vector<Tensor>& parts);
// [r, n] -> [r, indices.size()], picking columns in the given order.
Tensor select_columns(const Tensor& x, std::span<const std::size_t> indices);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator/(const Tensor& a, const Tensor& b);
Tensor operator+(const Tensor& a, double b);
Tensor operator-(const Tensor& a, double b);
Tensor operator*(const Tensor& a, double b);
Tensor operator/(const Tensor& a, double b);
Tensor operator+(double a, const Tensor& b);
Tensor operator-(double a, const Tensor& b);
Tensor operator*(double a, const Tensor& b);
Tensor operator-(const Tensor& a);

// Nodes reachable from root, inputs before outputs. backward() walks this
// list in reverse.
std::vector<const detail::Node*> topological_order(const Tensor& root);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  bool finite = true;
  // Set when the function was non-finite at some probe.
  std::size_t nonfinite_input = 0;
  std::size_t nonfinite_index = 0;
};

using Inputs = std::vector<Tensor>;
using ScalarFn = std::function<Tensor(const Inputs&)>;

// Compares backward() against central differences on every coordinate of
// every input: max |analytic - numeric| / max(1, |numeric|). Inputs must be
// leaves; their values are perturbed in place and restored.
GradCheckResult grad_check(const ScalarFn& f, std::vector<Tensor> inputs,
                           double h = 1e-5);
GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f,
                           const Tensor& x, double h = 1e-5);

}  // namespace uadet::ad
