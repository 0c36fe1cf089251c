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
// Plain (non-autodiff) dense linear algebra used by the frozen world and
// the evaluation metrics.

#ifndef ANYFACE_LINALG_HPP_
#define ANYFACE_LINALG_HPP_

#include "anyface/tensor.hpp"

namespace anyface {

// Least-squares pseudo-inverse P = (A^T A)^{-1} A^T of a full-column-rank
// matrix (rows >= cols).  Throws NumericError when A^T A is numerically
// singular.
Tensor least_squares_pinv(const Tensor& a);

// Smallest and largest eigenvalues of the symmetric matrix A^T A; used for
// rank checks.
std::pair<double, double> gram_eigen_range(const Tensor& a);

// Singular-value condition check: true when A has full column rank with
// sigma_min > tol * sigma_max.
bool has_full_column_rank(const Tensor& a, double tol = 1e-8);

}  // namespace anyface

#endif  // ANYFACE_LINALG_HPP_
