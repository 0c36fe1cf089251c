// Copyright 2026 The AnyFace Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "anyface/tensor.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace anyface {

namespace {

using detail::TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

using EMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EMatrix>;
using ECMap = Eigen::Map<const EMatrix>;

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << ", ";
    os << s[i];
  }
  os << ")";
  return os.str();
}

std::int64_t shape_numel(const Shape& s) {
  std::int64_t n = 1;
  for (auto e : s) n *= e;
  return n;
}

void validate_shape(const Shape& s) {
  if (s.empty()) throw ShapeError("tensor shape must have rank >= 1");
  for (auto e : s) {
    if (e <= 0) {
      throw ShapeError("tensor extents must be positive, got " +
                       shape_str(s));
    }
  }
}

NodePtr make_node(Shape shape, std::vector<double> data) {
  validate_shape(shape);
  if (static_cast<std::int64_t>(data.size()) != shape_numel(shape)) {
    throw ShapeError("data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  return node;
}

// Builds a result node; wires parents/backprop only when a parent needs
// gradients, so inference graphs carry no tape at all.
Tensor make_result(Shape shape, std::vector<double> data,
                   std::vector<NodePtr> parents,
                   std::function<void()> backprop) {
  auto node = make_node(std::move(shape), std::move(data));
  bool needs_grad = false;
  for (const auto& p : parents) {
    if (p->requires_grad) {
      needs_grad = true;
      break;
    }
  }
  if (needs_grad) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return Tensor(std::move(node));
}

void check_rank2(const Tensor& t, const char* what) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(what) + " requires a rank-2 tensor, got " +
                     shape_str(t.shape()));
  }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": shape mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

}  // namespace

namespace detail {

void assert_finite(const std::vector<double>& v, const char* context) {
  for (double x : v) {
    if (!std::isfinite(x)) {
      throw NumericError(std::string(context) + ": non-finite value");
    }
  }
}

}  // namespace detail

// ---- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto n = shape_numel(shape);
  auto node = make_node(std::move(shape), std::vector<double>(n, 0.0));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::constant(Shape shape, double value, bool requires_grad) {
  auto n = shape_numel(shape);
  auto node = make_node(std::move(shape), std::vector<double>(n, value));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  auto node = make_node(std::move(shape), std::move(data));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from_data({1}, {value}, requires_grad);
}

Tensor Tensor::randn(Shape shape, Rng& rng, double stddev, bool requires_grad) {
  auto n = shape_numel(shape);
  std::vector<double> data(n);
  for (auto& x : data) x = rng.normal() * stddev;
  return from_data(std::move(shape), std::move(data), requires_grad);
}

const Shape& Tensor::shape() const {
  if (!node_) throw InputError("use of an undefined tensor");
  return node_->shape;
}

std::int64_t Tensor::numel() const { return shape_numel(shape()); }
std::int64_t Tensor::rank() const {
  return static_cast<std::int64_t>(shape().size());
}

std::int64_t Tensor::rows() const {
  check_rank2(*this, "rows()");
  return shape()[0];
}

std::int64_t Tensor::cols() const {
  check_rank2(*this, "cols()");
  return shape()[1];
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

void Tensor::set_requires_grad(bool value) {
  if (!node_) throw InputError("use of an undefined tensor");
  if (!node_->parents.empty()) {
    throw InputError("set_requires_grad is only valid on leaf tensors");
  }
  node_->requires_grad = value;
}

const std::vector<double>& Tensor::data() const {
  if (!node_) throw InputError("use of an undefined tensor");
  return node_->data;
}

std::vector<double>& Tensor::mutable_data() {
  if (!node_) throw InputError("use of an undefined tensor");
  return node_->data;
}

double Tensor::value() const {
  if (numel() != 1) {
    throw ShapeError("value() requires a single-element tensor, got " +
                     shape_str(shape()));
  }
  return node_->data[0];
}

double Tensor::at(std::int64_t i) const {
  if (i < 0 || i >= numel()) throw InputError("tensor index out of range");
  return node_->data[static_cast<std::size_t>(i)];
}

double Tensor::at(std::int64_t r, std::int64_t c) const {
  check_rank2(*this, "at(r, c)");
  if (r < 0 || r >= shape()[0] || c < 0 || c >= shape()[1]) {
    throw InputError("tensor index out of range");
  }
  return node_->data[static_cast<std::size_t>(r * shape()[1] + c)];
}

bool Tensor::has_grad() const {
  return node_ && node_->grad.size() == node_->data.size();
}

const std::vector<double>& Tensor::grad() const {
  if (!has_grad()) {
    throw InputError("gradient not populated; run backward() first");
  }
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_) throw InputError("use of an undefined tensor");
  node_->grad.assign(node_->data.size(), 0.0);
}

void Tensor::backward() {
  if (!node_) throw InputError("use of an undefined tensor");
  if (numel() != 1) {
    throw InputError("backward() requires a single-element output, got " +
                     shape_str(shape()));
  }
  if (!node_->requires_grad) return;

  // Iterative depth-first topological order over the recorded graph.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      TensorNode* p = n->parents[next++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop();
  }
  // Leaves are the trainable surface; surface a diverging grad immediately.
  for (TensorNode* n : order) {
    if (n->parents.empty() && n->grad.size() == n->data.size()) {
      detail::assert_finite(n->grad, "backward(): leaf gradient");
    }
  }
}

Tensor Tensor::detach() const {
  if (!node_) throw InputError("use of an undefined tensor");
  return from_data(node_->shape, node_->data, /*requires_grad=*/false);
}

// ---- Elementwise ------------------------------------------------------------

namespace {

template <typename Fwd, typename Bwd>
Tensor binary_elementwise(const Tensor& a, const Tensor& b, const char* name,
                          Fwd fwd, Bwd bwd) {
  check_same_shape(a, b, name);
  const auto& ad = a.data();
  const auto& bd = b.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < ad.size(); ++i) out[i] = fwd(ad[i], bd[i]);
  NodePtr an = a.node(), bn = b.node();
  auto result = make_result(
      a.shape(), std::move(out), {an, bn}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, bn, on, bwd]() {
      const auto& g = on->grad;
      if (an->requires_grad) an->ensure_grad();
      if (bn->requires_grad) bn->ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) {
        auto [da, db] = bwd(an->data[i], bn->data[i], on->data[i]);
        if (an->requires_grad) an->grad[i] += g[i] * da;
        if (bn->requires_grad) bn->grad[i] += g[i] * db;
      }
    };
  }
  return result;
}

template <typename Fwd, typename Bwd>
Tensor unary_elementwise(const Tensor& a, Fwd fwd, Bwd bwd) {
  const auto& ad = a.data();
  std::vector<double> out(ad.size());
  for (std::size_t i = 0; i < ad.size(); ++i) out[i] = fwd(ad[i]);
  NodePtr an = a.node();
  auto result = make_result(a.shape(), std::move(out), {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, on, bwd]() {
      an->ensure_grad();
      const auto& g = on->grad;
      for (std::size_t i = 0; i < g.size(); ++i) {
        an->grad[i] += g[i] * bwd(an->data[i], on->data[i]);
      }
    };
  }
  return result;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double) { return std::pair<double, double>{1, 1}; });
}

Tensor add_rowwise(const Tensor& a, const Tensor& row) {
  check_rank2(a, "add_rowwise");
  check_rank2(row, "add_rowwise");
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_rowwise: row must be 1 x " +
                     std::to_string(a.cols()) + ", got " +
                     shape_str(row.shape()));
  }
  const std::int64_t n = a.rows();
  const std::int64_t c = a.cols();
  std::vector<double> out(a.data());
  for (std::int64_t r = 0; r < n; ++r) {
    for (std::int64_t j = 0; j < c; ++j) {
      out[static_cast<std::size_t>(r * c + j)] +=
          row.data()[static_cast<std::size_t>(j)];
    }
  }
  NodePtr an = a.node(), rn = row.node();
  auto result = make_result(a.shape(), std::move(out), {an, rn}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, rn, on, n, c]() {
      const auto& g = on->grad;
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) an->grad[i] += g[i];
      }
      if (rn->requires_grad) {
        rn->ensure_grad();
        for (std::int64_t r = 0; r < n; ++r) {
          for (std::int64_t j = 0; j < c; ++j) {
            rn->grad[static_cast<std::size_t>(j)] +=
                g[static_cast<std::size_t>(r * c + j)];
          }
        }
      }
    };
  }
  return result;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double) { return std::pair<double, double>{1, -1}; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double) {
        return std::pair<double, double>{y, x};
      });
}

Tensor div(const Tensor& a, const Tensor& b) {
  return binary_elementwise(
      a, b, "div", [](double x, double y) { return x / y; },
      [](double x, double y, double) {
        return std::pair<double, double>{1.0 / y, -x / (y * y)};
      });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary_elementwise(
      a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(const Tensor& a, double c) {
  return unary_elementwise(
      a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor tanh_t(const Tensor& a) {
  return unary_elementwise(
      a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor abs_t(const Tensor& a) {
  return unary_elementwise(
      a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Tensor log_t(const Tensor& a) {
  for (double x : a.data()) {
    if (!(x > 0.0)) {
      throw NumericError("log: input must be strictly positive");
    }
  }
  return unary_elementwise(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor relu(const Tensor& a) {
  return unary_elementwise(
      a, [](double x) { return x > 0 ? x : 0.0; },
      [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
  double s = 0;
  for (double x : a.data()) s += x;
  NodePtr an = a.node();
  auto result = make_result({1}, {s}, {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, on]() {
      an->ensure_grad();
      double g = on->grad[0];
      for (auto& v : an->grad) v += g;
    };
  }
  return result;
}

Tensor mean(const Tensor& a) {
  double s = 0;
  for (double x : a.data()) s += x;
  double inv = 1.0 / static_cast<double>(a.numel());
  NodePtr an = a.node();
  auto result = make_result({1}, {s * inv}, {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, on, inv]() {
      an->ensure_grad();
      double g = on->grad[0] * inv;
      for (auto& v : an->grad) v += g;
    };
  }
  return result;
}

// ---- Linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  check_rank2(a, "matmul");
  check_rank2(b, "matmul");
  const std::int64_t m = a.shape()[0], k = a.shape()[1];
  const std::int64_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions differ, " +
                     shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  std::vector<double> out(static_cast<std::size_t>(m * n));
  {
    ECMap A(a.data().data(), m, k);
    ECMap B(b.data().data(), k, n);
    EMap O(out.data(), m, n);
    O.noalias() = A * B;
  }
  NodePtr an = a.node(), bn = b.node();
  auto result = make_result({m, n}, std::move(out), {an, bn}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, bn, on, m, k, n]() {
      ECMap G(on->grad.data(), m, n);
      if (an->requires_grad) {
        an->ensure_grad();
        EMap dA(an->grad.data(), m, k);
        ECMap B(bn->data.data(), k, n);
        dA.noalias() += G * B.transpose();
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        EMap dB(bn->grad.data(), k, n);
        ECMap A(an->data.data(), m, k);
        dB.noalias() += A.transpose() * G;
      }
    };
  }
  return result;
}

Tensor transpose(const Tensor& a) {
  check_rank2(a, "transpose");
  const std::int64_t r = a.shape()[0], c = a.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(r * c));
  const auto& ad = a.data();
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < c; ++j) out[j * r + i] = ad[i * c + j];
  NodePtr an = a.node();
  auto result = make_result({c, r}, std::move(out), {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, on, r, c]() {
      an->ensure_grad();
      for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j)
          an->grad[i * c + j] += on->grad[j * r + i];
    };
  }
  return result;
}

// ---- Shape manipulation -----------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
  validate_shape(shape);
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: element count mismatch, " +
                     shape_str(a.shape()) + " -> " + shape_str(shape));
  }
  NodePtr an = a.node();
  auto result = make_result(std::move(shape), a.data(), {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, on]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i)
        an->grad[i] += on->grad[i];
    };
  }
  return result;
}

Tensor rows_slice(const Tensor& a, std::int64_t r0, std::int64_t r1) {
  check_rank2(a, "rows_slice");
  const std::int64_t r = a.shape()[0], c = a.shape()[1];
  if (r0 < 0 || r1 <= r0 || r1 > r) {
    throw ShapeError("rows_slice: invalid row range [" + std::to_string(r0) +
                     ", " + std::to_string(r1) + ") for " +
                     shape_str(a.shape()));
  }
  std::vector<double> out(a.data().begin() + r0 * c, a.data().begin() + r1 * c);
  NodePtr an = a.node();
  auto result = make_result({r1 - r0, c}, std::move(out), {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, on, r0, c]() {
      an->ensure_grad();
      for (std::size_t i = 0; i < on->grad.size(); ++i)
        an->grad[static_cast<std::size_t>(r0 * c) + i] += on->grad[i];
    };
  }
  return result;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  check_rank2(a, "concat_rows");
  check_rank2(b, "concat_rows");
  if (a.shape()[1] != b.shape()[1]) {
    throw ShapeError("concat_rows: column mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
  std::vector<double> out;
  out.reserve(a.data().size() + b.data().size());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  NodePtr an = a.node(), bn = b.node();
  auto result = make_result({a.shape()[0] + b.shape()[0], a.shape()[1]},
                            std::move(out), {an, bn}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    const std::size_t na = a.data().size();
    result.node()->backprop = [an, bn, on, na]() {
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < na; ++i) an->grad[i] += on->grad[i];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = na; i < on->grad.size(); ++i)
          bn->grad[i - na] += on->grad[i];
      }
    };
  }
  return result;
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw InputError("stack_rows: no rows given");
  const std::int64_t c = rows[0].numel();
  std::vector<double> out;
  out.reserve(rows.size() * static_cast<std::size_t>(c));
  std::vector<NodePtr> parents;
  parents.reserve(rows.size());
  for (const auto& rt : rows) {
    if (rt.numel() != c) {
      throw ShapeError("stack_rows: rows must have equal length");
    }
    out.insert(out.end(), rt.data().begin(), rt.data().end());
    parents.push_back(rt.node());
  }
  auto result =
      make_result({static_cast<std::int64_t>(rows.size()), c}, std::move(out),
                  parents, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [parents, on, c]() {
      for (std::size_t r = 0; r < parents.size(); ++r) {
        if (!parents[r]->requires_grad) continue;
        parents[r]->ensure_grad();
        for (std::int64_t j = 0; j < c; ++j)
          parents[r]->grad[j] += on->grad[r * c + j];
      }
    };
  }
  return result;
}

Tensor mean_rows(const Tensor& a) {
  check_rank2(a, "mean_rows");
  const std::int64_t r = a.shape()[0], c = a.shape()[1];
  std::vector<double> out(static_cast<std::size_t>(c), 0.0);
  const auto& ad = a.data();
  for (std::int64_t i = 0; i < r; ++i)
    for (std::int64_t j = 0; j < c; ++j) out[j] += ad[i * c + j];
  const double inv = 1.0 / static_cast<double>(r);
  for (auto& x : out) x *= inv;
  NodePtr an = a.node();
  auto result = make_result({1, c}, std::move(out), {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, on, r, c, inv]() {
      an->ensure_grad();
      for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j)
          an->grad[i * c + j] += on->grad[j] * inv;
    };
  }
  return result;
}

Tensor diag(const Tensor& a) {
  check_rank2(a, "diag");
  const std::int64_t n = a.shape()[0];
  if (a.shape()[1] != n) {
    throw ShapeError("diag requires a square matrix, got " +
                     shape_str(a.shape()));
  }
  std::vector<double> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out[i] = a.data()[i * n + i];
  NodePtr an = a.node();
  auto result = make_result({1, n}, std::move(out), {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, on, n]() {
      an->ensure_grad();
      for (std::int64_t i = 0; i < n; ++i)
        an->grad[i * n + i] += on->grad[i];
    };
  }
  return result;
}

Tensor embed_rows(const Tensor& table, const std::vector<int>& ids) {
  check_rank2(table, "embed_rows");
  if (ids.empty()) throw InputError("embed_rows: empty id list");
  const std::int64_t v = table.shape()[0], d = table.shape()[1];
  std::vector<double> out;
  out.reserve(ids.size() * static_cast<std::size_t>(d));
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw InputError("embed_rows: id " + std::to_string(id) +
                       " outside table of " + std::to_string(v) + " rows");
    }
    auto begin = table.data().begin() + static_cast<std::int64_t>(id) * d;
    out.insert(out.end(), begin, begin + d);
  }
  NodePtr tn = table.node();
  auto result = make_result({static_cast<std::int64_t>(ids.size()), d},
                            std::move(out), {tn}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [tn, on, ids, d]() {
      tn->ensure_grad();
      for (std::size_t r = 0; r < ids.size(); ++r)
        for (std::int64_t j = 0; j < d; ++j)
          tn->grad[static_cast<std::int64_t>(ids[r]) * d + j] +=
              on->grad[r * d + j];
    };
  }
  return result;
}

// ---- Nonlinear kernels ------------------------------------------------------

Tensor softmax(const Tensor& a, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InputError("softmax: temperature must be positive and finite");
  }
  detail::assert_finite(a.data(), "softmax input");
  const bool rank1 = a.rank() == 1;
  const std::int64_t r = rank1 ? 1 : a.shape()[0];
  const std::int64_t c = rank1 ? a.shape()[0] : a.shape()[1];
  if (!rank1) check_rank2(a, "softmax");
  std::vector<double> out(a.data().size());
  const auto& ad = a.data();
  for (std::int64_t i = 0; i < r; ++i) {
    double mx = ad[i * c];
    for (std::int64_t j = 1; j < c; ++j) mx = std::max(mx, ad[i * c + j]);
    double z = 0;
    for (std::int64_t j = 0; j < c; ++j) {
      out[i * c + j] = std::exp((ad[i * c + j] - mx) / temperature);
      z += out[i * c + j];
    }
    for (std::int64_t j = 0; j < c; ++j) out[i * c + j] /= z;
  }
  NodePtr an = a.node();
  auto result = make_result(a.shape(), std::move(out), {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, on, r, c, temperature]() {
      an->ensure_grad();
      for (std::int64_t i = 0; i < r; ++i) {
        double dot = 0;
        for (std::int64_t j = 0; j < c; ++j)
          dot += on->grad[i * c + j] * on->data[i * c + j];
        for (std::int64_t j = 0; j < c; ++j) {
          an->grad[i * c + j] += on->data[i * c + j] *
                                 (on->grad[i * c + j] - dot) / temperature;
        }
      }
    };
  }
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  check_rank2(x, "layer_norm");
  const std::int64_t r = x.shape()[0], c = x.shape()[1];
  if (gain.numel() != c || bias.numel() != c) {
    throw ShapeError("layer_norm: gain/bias must have one entry per column");
  }
  std::vector<double> out(x.data().size());
  std::vector<double> xhat(x.data().size());
  std::vector<double> inv_sigma(static_cast<std::size_t>(r));
  const auto& xd = x.data();
  const auto& gd = gain.data();
  const auto& bd = bias.data();
  for (std::int64_t i = 0; i < r; ++i) {
    double mu = 0;
    for (std::int64_t j = 0; j < c; ++j) mu += xd[i * c + j];
    mu /= static_cast<double>(c);
    double var = 0;
    for (std::int64_t j = 0; j < c; ++j) {
      double dv = xd[i * c + j] - mu;
      var += dv * dv;
    }
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_sigma[static_cast<std::size_t>(i)] = is;
    for (std::int64_t j = 0; j < c; ++j) {
      double xh = (xd[i * c + j] - mu) * is;
      xhat[i * c + j] = xh;
      out[i * c + j] = gd[j] * xh + bd[j];
    }
  }
  NodePtr xn = x.node(), gn = gain.node(), bn = bias.node();
  auto result = make_result(x.shape(), std::move(out), {xn, gn, bn}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    auto xh = std::make_shared<std::vector<double>>(std::move(xhat));
    auto is = std::make_shared<std::vector<double>>(std::move(inv_sigma));
    result.node()->backprop = [xn, gn, bn, on, xh, is, r, c]() {
      const auto& g = on->grad;
      if (gn->requires_grad) {
        gn->ensure_grad();
        for (std::int64_t i = 0; i < r; ++i)
          for (std::int64_t j = 0; j < c; ++j)
            gn->grad[j] += g[i * c + j] * (*xh)[i * c + j];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::int64_t i = 0; i < r; ++i)
          for (std::int64_t j = 0; j < c; ++j) bn->grad[j] += g[i * c + j];
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        for (std::int64_t i = 0; i < r; ++i) {
          double mean_dxhat = 0, mean_dxhat_xhat = 0;
          for (std::int64_t j = 0; j < c; ++j) {
            double dxh = g[i * c + j] * gn->data[j];
            mean_dxhat += dxh;
            mean_dxhat_xhat += dxh * (*xh)[i * c + j];
          }
          mean_dxhat /= static_cast<double>(c);
          mean_dxhat_xhat /= static_cast<double>(c);
          for (std::int64_t j = 0; j < c; ++j) {
            double dxh = g[i * c + j] * gn->data[j];
            xn->grad[i * c + j] +=
                (*is)[static_cast<std::size_t>(i)] *
                (dxh - mean_dxhat - (*xh)[i * c + j] * mean_dxhat_xhat);
          }
        }
      }
    };
  }
  return result;
}

Tensor l2_normalize_rows(const Tensor& a) {
  check_rank2(a, "l2_normalize_rows");
  const std::int64_t r = a.shape()[0], c = a.shape()[1];
  std::vector<double> out(a.data().size());
  std::vector<double> norms(static_cast<std::size_t>(r));
  const auto& ad = a.data();
  for (std::int64_t i = 0; i < r; ++i) {
    double s = 0;
    for (std::int64_t j = 0; j < c; ++j) s += ad[i * c + j] * ad[i * c + j];
    double n = std::sqrt(s);
    norms[static_cast<std::size_t>(i)] = n;
    double inv = 1.0 / (n + kCosineEps);
    for (std::int64_t j = 0; j < c; ++j) out[i * c + j] = ad[i * c + j] * inv;
  }
  NodePtr an = a.node();
  auto result = make_result(a.shape(), std::move(out), {an}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    auto nr = std::make_shared<std::vector<double>>(std::move(norms));
    result.node()->backprop = [an, on, nr, r, c]() {
      an->ensure_grad();
      for (std::int64_t i = 0; i < r; ++i) {
        const double n = (*nr)[static_cast<std::size_t>(i)];
        const double D = n + kCosineEps;
        double gx = 0;
        for (std::int64_t j = 0; j < c; ++j)
          gx += on->grad[i * c + j] * an->data[i * c + j];
        for (std::int64_t j = 0; j < c; ++j) {
          double dv = on->grad[i * c + j] / D;
          if (n > 0) dv -= an->data[i * c + j] * gx / (n * D * D);
          an->grad[i * c + j] += dv;
        }
      }
    };
  }
  return result;
}

Tensor kl_divergence(const Tensor& p, const Tensor& q) {
  if (p.numel() != q.numel()) {
    throw ShapeError("kl_divergence: length mismatch " +
                     shape_str(p.shape()) + " vs " + shape_str(q.shape()));
  }
  const auto& pd = p.data();
  const auto& qd = q.data();
  detail::assert_finite(pd, "kl_divergence p");
  detail::assert_finite(qd, "kl_divergence q");
  double ps = 0, qs = 0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    if (pd[i] < 0 || qd[i] < 0) {
      throw InputError("kl_divergence: probabilities must be non-negative");
    }
    ps += pd[i];
    qs += qd[i];
  }
  if (std::abs(ps - 1.0) > 1e-9 || std::abs(qs - 1.0) > 1e-9) {
    throw InputError("kl_divergence: inputs must each sum to 1 within 1e-9");
  }
  double kl = 0;
  for (std::size_t i = 0; i < pd.size(); ++i) {
    if (pd[i] > 0) {
      if (qd[i] == 0) {
        throw SupportError(
            "kl_divergence: q is zero at index " + std::to_string(i) +
            " where p is positive");
      }
      kl += pd[i] * std::log(pd[i] / qd[i]);
    }
  }
  NodePtr pn = p.node(), qn = q.node();
  auto result = make_result({1}, {kl}, {pn, qn}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [pn, qn, on]() {
      const double g = on->grad[0];
      if (pn->requires_grad) {
        pn->ensure_grad();
        for (std::size_t i = 0; i < pn->data.size(); ++i) {
          if (pn->data[i] > 0)
            pn->grad[i] += g * (std::log(pn->data[i] / qn->data[i]) + 1.0);
        }
      }
      if (qn->requires_grad) {
        qn->ensure_grad();
        for (std::size_t i = 0; i < qn->data.size(); ++i) {
          if (pn->data[i] > 0)
            qn->grad[i] -= g * pn->data[i] / qn->data[i];
        }
      }
    };
  }
  return result;
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) {
    throw ShapeError("cosine_similarity: size mismatch " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  const auto& ad = a.data();
  const auto& bd = b.data();
  double dot = 0, na2 = 0, nb2 = 0;
  for (std::size_t i = 0; i < ad.size(); ++i) {
    dot += ad[i] * bd[i];
    na2 += ad[i] * ad[i];
    nb2 += bd[i] * bd[i];
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double denom = na * nb + kCosineEps;
  const double cosv = dot / denom;
  NodePtr an = a.node(), bn = b.node();
  auto result = make_result({1}, {cosv}, {an, bn}, nullptr);
  if (result.requires_grad()) {
    TensorNode* on = result.node().get();
    result.node()->backprop = [an, bn, on, dot, na, nb, denom]() {
      const double g = on->grad[0];
      if (an->requires_grad) {
        an->ensure_grad();
        for (std::size_t i = 0; i < an->data.size(); ++i) {
          double d = bn->data[i] / denom;
          if (na > 0) d -= dot * nb * an->data[i] / (na * denom * denom);
          an->grad[i] += g * d;
        }
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (std::size_t i = 0; i < bn->data.size(); ++i) {
          double d = an->data[i] / denom;
          if (nb > 0) d -= dot * na * bn->data[i] / (nb * denom * denom);
          bn->grad[i] += g * d;
        }
      }
    };
  }
  return result;
}

}  // namespace anyface
