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

#include "anyface/linalg.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace anyface {

namespace {

using EMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

EMatrix to_eigen(const Tensor& t) {
  if (t.rank() != 2) throw ShapeError("expected a rank-2 tensor");
  return Eigen::Map<const EMatrix>(t.data().data(), t.shape()[0],
                                   t.shape()[1]);
}

Tensor from_eigen(const EMatrix& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return Tensor::from_data({m.rows(), m.cols()}, std::move(data));
}

}  // namespace

Tensor matrix_sqrt_psd(const Tensor& a) {
  if (a.rank() != 2 || a.shape()[0] != a.shape()[1]) {
    throw ShapeError("matrix_sqrt_psd requires a square matrix");
  }
  detail::assert_finite(a.data(), "matrix_sqrt_psd input");
  EMatrix m = to_eigen(a);
  // Symmetrize first: callers hand in products that are symmetric only up
  // to round-off.
  EMatrix sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<EMatrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw NumericError("matrix_sqrt_psd: eigendecomposition failed");
  }
  Eigen::VectorXd ev = es.eigenvalues();
  const double max_ev = std::max(ev.maxCoeff(), 0.0);
  const double tol = 1e-9 * std::max(max_ev, 1.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < -tol) {
      throw NumericError(
          "matrix_sqrt_psd: matrix is not positive semi-definite "
          "(eigenvalue " +
          std::to_string(ev[i]) + ")");
    }
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  EMatrix s =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  // Force exact symmetry of the result.
  s = 0.5 * (s + s.transpose());
  return from_eigen(s);
}

Tensor least_squares_pinv(const Tensor& a) {
  EMatrix m = to_eigen(a);
  if (m.rows() < m.cols()) {
    throw ShapeError("least_squares_pinv requires rows >= cols");
  }
  EMatrix gram = m.transpose() * m;
  Eigen::LDLT<EMatrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    throw NumericError("least_squares_pinv: rank-deficient matrix");
  }
  EMatrix pinv = ldlt.solve(m.transpose());
  return from_eigen(pinv);
}

std::pair<double, double> gram_eigen_range(const Tensor& a) {
  EMatrix m = to_eigen(a);
  EMatrix gram = m.transpose() * m;
  Eigen::SelfAdjointEigenSolver<EMatrix> es(gram);
  if (es.info() != Eigen::Success) {
    throw NumericError("gram_eigen_range: eigendecomposition failed");
  }
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

bool has_full_column_rank(const Tensor& a, double tol) {
  auto [mn, mx] = gram_eigen_range(a);
  if (mx <= 0) return false;
  // Eigenvalues of A^T A are squared singular values.
  return mn > tol * tol * mx;
}

}  // namespace anyface
