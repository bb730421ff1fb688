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

#include "uadet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <unordered_set>

#include "uadet/error.hpp"

namespace uadet::ad {

namespace detail {

struct Node {
  const char* op = "leaf";
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // empty until materialized
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward_fn;

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

using detail::Node;

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

void require_finite(const char* op, const Node& n) {
  for (std::size_t i = 0; i < n.value.size(); ++i) {
    if (!std::isfinite(n.value[i])) {
      std::ostringstream os;
      os << op << ": non-finite input value at index " << i << " of tensor "
         << shape_to_string(n.shape);
      throw Error(os.str());
    }
  }
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(std::string(op) + ": incompatible shapes " + shape_to_string(a) +
              " and " + shape_to_string(b));
}

}  // namespace

// Builds result nodes; the only code that touches Tensor internals besides
// Tensor itself.
struct OpBuilder {
  static const std::shared_ptr<Node>& node(const Tensor& t) {
    if (!t.node_) throw Error("operation on an undefined tensor");
    return t.node_;
  }

  static Tensor make(const char* op, Shape shape, std::vector<double> value,
                     std::vector<Tensor> inputs,
                     std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->shape = std::move(shape);
    n->value = std::move(value);
    bool any = false;
    for (const auto& in : inputs) any = any || node(in)->requires_grad;
    if (any) {
      n->requires_grad = true;
      n->inputs.reserve(inputs.size());
      for (const auto& in : inputs) n->inputs.push_back(node(in));
      n->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(n));
  }

  static Tensor make_leaf(Shape shape, std::vector<double> values, bool rg) {
    if (numel(shape) != values.size()) {
      throw Error("tensor: shape " + shape_to_string(shape) + " needs " +
                  std::to_string(numel(shape)) + " values, got " +
                  std::to_string(values.size()));
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = rg;
    return Tensor(std::move(n));
  }
};

// ---------------------------------------------------------------------------
// Tensor handle

Tensor Tensor::leaf(Shape shape, std::vector<double> values, bool requires_grad) {
  return OpBuilder::make_leaf(std::move(shape), std::move(values), requires_grad);
}

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
  return OpBuilder::make_leaf(std::move(shape), std::move(values), false);
}

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = numel(shape);
  return OpBuilder::make_leaf(std::move(shape), std::vector<double>(n, value),
                              requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return OpBuilder::make_leaf(Shape{1}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return OpBuilder::node(*this)->shape; }
std::size_t Tensor::size() const { return OpBuilder::node(*this)->value.size(); }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw Error("tensor: axis out of range");
  return s[axis];
}

bool Tensor::requires_grad() const { return OpBuilder::node(*this)->requires_grad; }
bool Tensor::is_leaf() const { return !OpBuilder::node(*this)->backward_fn; }

std::span<const double> Tensor::data() const { return OpBuilder::node(*this)->value; }

std::span<double> Tensor::mutable_data() {
  auto& n = OpBuilder::node(*this);
  if (n->backward_fn) throw Error("tensor: mutable_data on a non-leaf");
  return n->value;
}

double Tensor::item() const {
  const auto& n = OpBuilder::node(*this);
  if (n->value.size() != 1) {
    throw Error("tensor: item() on shape " + shape_to_string(n->shape));
  }
  return n->value[0];
}

double Tensor::at(std::size_t i) const { return OpBuilder::node(*this)->value.at(i); }

std::span<const double> Tensor::grad() const {
  return OpBuilder::node(*this)->ensure_grad();
}

bool Tensor::has_grad() const { return !OpBuilder::node(*this)->grad.empty(); }

void Tensor::zero_grad() {
  auto& g = OpBuilder::node(*this)->grad;
  std::fill(g.begin(), g.end(), 0.0);
}

Tensor Tensor::detach() const {
  const auto& n = OpBuilder::node(*this);
  return OpBuilder::make_leaf(n->shape, n->value, false);
}

std::vector<const Node*> topological_order(const Tensor& root) {
  std::vector<const Node*> order;
  std::unordered_set<const Node*> seen;
  // Iterative post-order DFS; child order is input order, so the result is
  // deterministic for a given graph.
  std::vector<std::pair<const Node*, std::size_t>> stack;
  stack.emplace_back(OpBuilder::node(root).get(), 0);
  seen.insert(stack.back().first);
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->inputs.size()) {
      const Node* child = n->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  return order;
}

void Tensor::backward() const {
  const auto& root = OpBuilder::node(*this);
  if (root->value.size() != 1) {
    throw Error("backward: root must be a scalar, got shape " +
                shape_to_string(root->shape));
  }
  if (!root->requires_grad) return;
  auto order = topological_order(*this);
  for (const Node* cn : order) {
    auto* n = const_cast<Node*>(cn);
    if (n->backward_fn) n->grad.assign(n->value.size(), 0.0);
  }
  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto* n = const_cast<Node*>(*it);
    if (n->backward_fn) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------------
// Elementwise

namespace {

// Broadcast helper: index into an operand that is either full-size or scalar.
inline double pick(const std::vector<double>& v, std::size_t i) {
  return v.size() == 1 ? v[0] : v[i];
}

inline void accumulate(Node& in, std::size_t i, double g) {
  auto& grad = in.ensure_grad();
  if (grad.size() == 1) {
    grad[0] += g;
  } else {
    grad[i] += g;
  }
}

Shape broadcast_shape(const char* op, const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa == sb) return sa;
  if (a.size() == 1) return sb;
  if (b.size() == 1) return sa;
  shape_error(op, sa, sb);
}

// f(x, y) and its partials, evaluated elementwise with scalar broadcasting.
template <typename F, typename DA, typename DB>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  const auto& na = OpBuilder::node(a);
  const auto& nb = OpBuilder::node(b);
  require_finite(op, *na);
  require_finite(op, *nb);
  Shape shape = broadcast_shape(op, a, b);
  const std::size_t n = numel(shape);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = f(pick(na->value, i), pick(nb->value, i));
  return OpBuilder::make(op, std::move(shape), std::move(out), {a, b}, [da, db](Node& self) {
    Node& x = *self.inputs[0];
    Node& y = *self.inputs[1];
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const double g = self.grad[i];
      if (g == 0.0) continue;
      const double xv = pick(x.value, i);
      const double yv = pick(y.value, i);
      if (x.requires_grad) accumulate(x, i, g * da(xv, yv, self.value[i]));
      if (y.requires_grad) accumulate(y, i, g * db(xv, yv, self.value[i]));
    }
  });
}

template <typename F, typename D>
Tensor unary(const char* op, const Tensor& x, F f, D d) {
  const auto& nx = OpBuilder::node(x);
  require_finite(op, *nx);
  std::vector<double> out(nx->value.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(nx->value[i]);
  return OpBuilder::make(op, nx->shape, std::move(out), {x}, [d](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      if (self.grad[i] != 0.0) g[i] += self.grad[i] * d(in.value[i], self.value[i]);
    }
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
  for (double v : b.data()) {
    if (v == 0.0) throw Error("div: zero divisor in tensor " + shape_to_string(b.shape()));
  }
  return binary(
      "div", a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Tensor minimum(const Tensor& a, const Tensor& b) {
  return binary(
      "minimum", a, b, [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y, double) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x <= y ? 0.0 : 1.0; });
}

Tensor maximum(const Tensor& a, const Tensor& b) {
  return binary(
      "maximum", a, b, [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y, double) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x >= y ? 0.0 : 1.0; });
}

Tensor log(const Tensor& x) {
  for (double v : x.data()) {
    if (!(v > 0.0)) throw Error("log: non-positive input in tensor " + shape_to_string(x.shape()));
  }
  return unary(
      "log", x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); },
      [](double, double out) { return out; });
}

Tensor power(const Tensor& x, double exponent) {
  for (double v : x.data()) {
    if (v < 0.0) throw Error("power: negative base in tensor " + shape_to_string(x.shape()));
  }
  return unary(
      "power", x, [exponent](double v) { return std::pow(v, exponent); },
      [exponent](double v, double) {
        if (v == 0.0) return exponent == 1.0 ? 1.0 : 0.0;
        return exponent * std::pow(v, exponent - 1.0);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](double v) {
        if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
        const double e = std::exp(v);
        return e / (1.0 + e);
      },
      [](double, double out) { return out * (1.0 - out); });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor sum(const Tensor& x) {
  const auto& nx = OpBuilder::node(x);
  require_finite("sum", *nx);
  double s = 0.0;
  for (double v : nx->value) s += v;
  return OpBuilder::make("sum", Shape{1}, {s}, {x}, [](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (auto& gi : g) gi += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  const auto& nx = OpBuilder::node(x);
  require_finite("mean", *nx);
  const double n = static_cast<double>(nx->value.size());
  double s = 0.0;
  for (double v : nx->value) s += v;
  return OpBuilder::make("mean", Shape{1}, {s / n}, {x}, [n](Node& self) {
    Node& in = *self.inputs[0];
    auto& g = in.ensure_grad();
    for (auto& gi : g) gi += self.grad[0] / n;
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  const auto& sa = a.shape();
  const auto& sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0]) shape_error("matmul", sa, sb);
  const auto& na = OpBuilder::node(a);
  const auto& nb = OpBuilder::node(b);
  require_finite("matmul", *na);
  require_finite("matmul", *nb);
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = na->value[i * k + p];
      const double* brow = &nb->value[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return OpBuilder::make("matmul", Shape{m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    Node& A = *self.inputs[0];
    Node& B = *self.inputs[1];
    if (A.requires_grad) {
      auto& ga = A.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += self.grad[i * n + j] * B.value[p * n + j];
          ga[i * k + p] += acc;
        }
    }
    if (B.requires_grad) {
      auto& gb = B.ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A.value[i * k + p];
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += av * self.grad[i * n + j];
        }
    }
  });
}

Tensor conv3x3(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  const auto& si = input.shape();
  const auto& sw = weight.shape();
  const auto& sb = bias.shape();
  if (si.size() != 3) shape_error("conv3x3", si, sw);
  if (sw.size() != 4 || sw[1] != si[0] || sw[2] != 3 || sw[3] != 3) shape_error("conv3x3", si, sw);
  if (sb.size() != 1 || sb[0] != sw[0]) shape_error("conv3x3", sw, sb);
  const auto& ni = OpBuilder::node(input);
  const auto& nw = OpBuilder::node(weight);
  const auto& nb = OpBuilder::node(bias);
  require_finite("conv3x3", *ni);
  require_finite("conv3x3", *nw);
  require_finite("conv3x3", *nb);

  const std::size_t cin = si[0], h = si[1], w = si[2], cout = sw[0];
  const std::size_t hw = h * w;
  std::vector<double> out(cout * hw);

  // Valid output range along one axis for kernel tap offset d in {-1,0,1}.
  auto range = [](std::size_t len, int d) {
    const std::size_t lo = d < 0 ? 1 : 0;
    const std::size_t hi = d > 0 ? len - 1 : len;
    return std::pair{lo, hi};
  };

  for (std::size_t o = 0; o < cout; ++o) {
    double* op = &out[o * hw];
    std::fill(op, op + hw, nb->value[o]);
    for (std::size_t c = 0; c < cin; ++c) {
      const double* ip = &ni->value[c * hw];
      for (int ky = 0; ky < 3; ++ky) {
        const int dy = ky - 1;
        const auto [ylo, yhi] = range(h, dy);
        for (int kx = 0; kx < 3; ++kx) {
          const int dx = kx - 1;
          const auto [xlo, xhi] = range(w, dx);
          const double wv = nw->value[((o * cin + c) * 3 + ky) * 3 + kx];
          if (wv == 0.0) continue;
          for (std::size_t y = ylo; y < yhi; ++y) {
            const double* irow = ip + (y + dy) * w + dx;
            double* orow = op + y * w;
            for (std::size_t x = xlo; x < xhi; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }

  return OpBuilder::make(
      "conv3x3", Shape{cout, h, w}, std::move(out), {input, weight, bias},
      [cin, h, w, cout, hw, range](Node& self) {
        Node& I = *self.inputs[0];
        Node& W = *self.inputs[1];
        Node& B = *self.inputs[2];
        if (B.requires_grad) {
          auto& gb = B.ensure_grad();
          for (std::size_t o = 0; o < cout; ++o) {
            double acc = 0.0;
            for (std::size_t i = 0; i < hw; ++i) acc += self.grad[o * hw + i];
            gb[o] += acc;
          }
        }
        const bool gi_on = I.requires_grad;
        const bool gw_on = W.requires_grad;
        if (!gi_on && !gw_on) return;
        std::vector<double>* gi = gi_on ? &I.ensure_grad() : nullptr;
        std::vector<double>* gw = gw_on ? &W.ensure_grad() : nullptr;
        for (std::size_t o = 0; o < cout; ++o) {
          const double* gop = &self.grad[o * hw];
          for (std::size_t c = 0; c < cin; ++c) {
            const double* ip = &I.value[c * hw];
            for (int ky = 0; ky < 3; ++ky) {
              const int dy = ky - 1;
              const auto [ylo, yhi] = range(h, dy);
              for (int kx = 0; kx < 3; ++kx) {
                const int dx = kx - 1;
                const auto [xlo, xhi] = range(w, dx);
                const std::size_t widx = ((o * cin + c) * 3 + ky) * 3 + kx;
                const double wv = W.value[widx];
                double wacc = 0.0;
                for (std::size_t y = ylo; y < yhi; ++y) {
                  const std::size_t irow = (y + dy) * w + dx;
                  const double* grow = gop + y * w;
                  if (gw_on) {
                    for (std::size_t x = xlo; x < xhi; ++x) wacc += grow[x] * ip[irow + x];
                  }
                  if (gi_on && wv != 0.0) {
                    double* girow = gi->data() + c * hw + irow;
                    for (std::size_t x = xlo; x < xhi; ++x) girow[x] += wv * grow[x];
                  }
                }
                if (gw_on) (*gw)[widx] += wacc;
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Structural

Tensor reshape(const Tensor& x, Shape shape) {
  if (numel(shape) != x.size()) shape_error("reshape", x.shape(), shape);
  const auto& nx = OpBuilder::node(x);
  return OpBuilder::make("reshape", std::move(shape), nx->value, {x}, [](Node& self) {
    auto& g = self.inputs[0]->ensure_grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  const auto& s = x.shape();
  if (s.empty() || begin >= end || end > s[0]) {
    throw Error("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                ") invalid for shape " + shape_to_string(s));
  }
  const std::size_t row = x.size() / s[0];
  Shape out_shape = s;
  out_shape[0] = end - begin;
  const auto& nx = OpBuilder::node(x);
  std::vector<double> out(nx->value.begin() + static_cast<std::ptrdiff_t>(begin * row),
                          nx->value.begin() + static_cast<std::ptrdiff_t>(end * row));
  const std::size_t offset = begin * row;
  return OpBuilder::make("slice_rows", std::move(out_shape), std::move(out), {x},
                         [offset](Node& self) {
                           auto& g = self.inputs[0]->ensure_grad();
                           for (std::size_t i = 0; i < self.grad.size(); ++i)
                             g[offset + i] += self.grad[i];
                         });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("concat_rows: no inputs");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t rows = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.empty() || Shape(s.begin() + 1, s.end()) != tail) {
      shape_error("concat_rows", parts[0].shape(), s);
    }
    rows += s[0];
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape shape{rows};
  shape.insert(shape.end(), tail.begin(), tail.end());
  return OpBuilder::make("concat_rows", std::move(shape), std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (auto& in : self.inputs) {
      const std::size_t n = in->value.size();
      if (in->requires_grad) {
        auto& g = in->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[offset + i];
      }
      offset += n;
    }
  });
}

Tensor select_columns(const Tensor& x, std::span<const std::size_t> indices) {
  const auto& s = x.shape();
  if (s.size() != 2) throw Error("select_columns: expected a 2-D tensor, got " + shape_to_string(s));
  const std::size_t rows = s[0], cols = s[1], k = indices.size();
  if (k == 0) throw Error("select_columns: empty index list");
  for (std::size_t idx : indices) {
    if (idx >= cols) {
      throw Error("select_columns: column " + std::to_string(idx) + " out of range for " +
                  shape_to_string(s));
    }
  }
  const auto& nx = OpBuilder::node(x);
  std::vector<double> out(rows * k);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = nx->value[r * cols + indices[j]];
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return OpBuilder::make("select_columns", Shape{rows, k}, std::move(out), {x},
                         [rows, cols, k, idx = std::move(idx)](Node& self) {
                           auto& g = self.inputs[0]->ensure_grad();
                           for (std::size_t r = 0; r < rows; ++r)
                             for (std::size_t j = 0; j < k; ++j)
                               g[r * cols + idx[j]] += self.grad[r * k + j];
                         });
}

// ---------------------------------------------------------------------------
// Operators

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return div(a, b); }
Tensor operator+(const Tensor& a, double b) { return add(a, Tensor::scalar(b)); }
Tensor operator-(const Tensor& a, double b) { return sub(a, Tensor::scalar(b)); }
Tensor operator*(const Tensor& a, double b) { return mul(a, Tensor::scalar(b)); }
Tensor operator/(const Tensor& a, double b) { return div(a, Tensor::scalar(b)); }
Tensor operator+(double a, const Tensor& b) { return add(Tensor::scalar(a), b); }
Tensor operator-(double a, const Tensor& b) { return sub(Tensor::scalar(a), b); }
Tensor operator*(double a, const Tensor& b) { return mul(Tensor::scalar(a), b); }
Tensor operator-(const Tensor& a) { return mul(Tensor::scalar(-1.0), a); }

// ---------------------------------------------------------------------------
// Gradient checking

GradCheckResult grad_check(const ScalarFn& f, std::vector<Tensor> inputs, double h) {
  if (!(h > 0.0)) throw Error("grad_check: step size must be positive");
  for (auto& x : inputs) {
    if (!x.is_leaf() || !x.requires_grad()) {
      throw Error("grad_check: inputs must be leaves that require grad");
    }
    x.zero_grad();
  }

  GradCheckResult result;
  auto eval = [&](std::size_t input, std::size_t index) -> std::optional<double> {
    const double v = f(inputs).item();
    if (!std::isfinite(v)) {
      result.finite = false;
      result.nonfinite_input = input;
      result.nonfinite_index = index;
      return std::nullopt;
    }
    return v;
  };

  Tensor root = f(inputs);
  if (!std::isfinite(root.item())) {
    result.finite = false;
    return result;
  }
  root.backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& x : inputs) analytic.emplace_back(x.grad().begin(), x.grad().end());
  root = Tensor();

  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto values = inputs[t].mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + h;
      const auto plus = eval(t, i);
      values[i] = orig - h;
      const auto minus = eval(t, i);
      values[i] = orig;
      if (!plus || !minus) return result;
      const double numeric = (*plus - *minus) / (2.0 * h);
      const double err = std::abs(analytic[t][i] - numeric) / std::max(1.0, std::abs(numeric));
      if (err > result.max_rel_error) {
        result.max_rel_error = err;
        result.worst_input = t;
        result.worst_index = i;
      }
    }
  }
  return result;
}

GradCheckResult grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                           double h) {
  return grad_check([&f](const std::vector<Tensor>& in) { return f(in[0]); },
                    std::vector<Tensor>{x}, h);
}

}  // namespace uadet::ad
