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
//
// A dense float64 tensor with tape-based reverse-mode automatic
// differentiation.  Every operation that consumes tensors with
// requires_grad records its inputs and a backward closure; calling
// backward() on a scalar output walks the recorded graph in reverse
// topological order and accumulates gradients into every reachable
// requires-grad leaf.  Graphs are rebuilt from scratch on every forward
// pass and released when the output goes out of scope.
//
// Tensors are value types sharing ownership of their storage; copies are
// cheap handles.  A graph must be used from one thread at a time, but
// unrelated tensors/graphs are safe to use concurrently.

#ifndef ANYFACE_TENSOR_HPP_
#define ANYFACE_TENSOR_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "anyface/errors.hpp"
#include "anyface/rng.hpp"

namespace anyface {

using Shape = std::vector<std::int64_t>;

// Epsilon guard used by cosine similarity and the triplet ratio.
// Small enough that guarded cosines and ratios match hand arithmetic well
// inside 1e-9 on unit vectors, while still breaking exact-zero denominators.
inline constexpr double kCosineEps = 1e-12;
// Epsilon inside layer normalization's variance square root.
inline constexpr double kLayerNormEps = 1e-5;

namespace detail {

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated lazily, same length as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Reads this->grad, writes parents' grads.  Closures hold parents by
  // shared_ptr but their own node by raw pointer: an owning self-capture
  // would cycle and leak every graph.  Safe because backward() only runs
  // closures on nodes kept alive by the root's parent chain.
  std::function<void()> backprop;

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor constant(Shape shape, double value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  // I.i.d. N(0, stddev^2) entries drawn from `rng`.
  static Tensor randn(Shape shape, Rng& rng, double stddev = 1.0,
                      bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::int64_t numel() const;
  std::int64_t rank() const;
  // Rank-2 helpers.
  std::int64_t rows() const;
  std::int64_t cols() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);  // leaves only

  const std::vector<double>& data() const;
  std::vector<double>& mutable_data();  // in-place updates (optimizers)
  double value() const;                 // single-element tensors
  double at(std::int64_t i) const;
  double at(std::int64_t r, std::int64_t c) const;

  bool has_grad() const;
  const std::vector<double>& grad() const;
  void zero_grad();

  // Reverse-mode sweep from a single-element output.  Verifies that every
  // populated leaf gradient is finite.
  void backward();

  // A leaf copy of the current values, detached from the graph.
  Tensor detach() const;

  std::shared_ptr<detail::TensorNode> node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::TensorNode> node)
      : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::TensorNode> node_;
};

// ---- Elementwise and reduction operations ----------------------------------

Tensor add(const Tensor& a, const Tensor& b);
// a (n x c) + row (1 x c) broadcast over rows.
Tensor add_rowwise(const Tensor& a, const Tensor& row);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor add_scalar(const Tensor& a, double c);
Tensor mul_scalar(const Tensor& a, double c);
Tensor tanh_t(const Tensor& a);
Tensor abs_t(const Tensor& a);
Tensor log_t(const Tensor& a);   // requires strictly positive input
Tensor relu(const Tensor& a);
Tensor sum(const Tensor& a);     // -> shape {1}
Tensor mean(const Tensor& a);    // -> shape {1}

// ---- Linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// ---- Shape manipulation -----------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape);
// Rows [r0, r1) of a rank-2 tensor; r0 < r1.
Tensor rows_slice(const Tensor& a, std::int64_t r0, std::int64_t r1);
Tensor concat_rows(const Tensor& a, const Tensor& b);
// Stack single-row tensors into an n-row matrix.
Tensor stack_rows(const std::vector<Tensor>& rows);
// Column means of a rank-2 tensor -> 1 x cols.
Tensor mean_rows(const Tensor& a);
// Main diagonal of a square matrix -> 1 x n.
Tensor diag(const Tensor& a);
// Row gather from an embedding table (rank-2): ids index table rows.
Tensor embed_rows(const Tensor& table, const std::vector<int>& ids);

// ---- Nonlinear kernels ------------------------------------------------------

// Row-wise softmax with temperature (each row sums to 1).  Throws
// NumericError on non-finite input and InputError on temperature <= 0.
Tensor softmax(const Tensor& a, double temperature = 1.0);

// Per-row layer normalization with learned gain/bias (both 1 x cols).
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = kLayerNormEps);

// Rows scaled to unit L2 norm (with kCosineEps guard in the denominator).
Tensor l2_normalize_rows(const Tensor& a);

// D_KL(p || q) of two probability vectors (sum 1 within 1e-9, entries >= 0;
// the 0*log 0 = 0 convention applies).  Throws SupportError when q_i = 0 at
// a point where p_i > 0 and ShapeError on length mismatch.
Tensor kl_divergence(const Tensor& p, const Tensor& q);

// Cosine similarity of two equally sized tensors, flattened:
// <a, b> / (|a||b| + kCosineEps).  All-zero pairs yield 0.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

// ---- Non-differentiable numeric kernels ------------------------------------

// Symmetric PSD matrix square root via eigendecomposition: returns symmetric
// S with S*S ~= A.  Small negative eigenvalues (>= -1e-9 * |max|) are
// clamped to zero; anything more negative is a NumericError.  Not recorded
// on the autodiff tape.
Tensor matrix_sqrt_psd(const Tensor& a);

namespace detail {
void assert_finite(const std::vector<double>& v, const char* context);
}

}  // namespace anyface

#endif  // ANYFACE_TENSOR_HPP_
