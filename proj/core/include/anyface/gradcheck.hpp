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

#ifndef ANYFACE_GRADCHECK_HPP_
#define ANYFACE_GRADCHECK_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "anyface/tensor.hpp"

namespace anyface {

struct FiniteDiffOptions {
  double step = 1e-5;  // central-difference half step
  // Coordinates to probe; -1 probes every coordinate of x.
  std::int64_t max_coords = -1;
  std::uint64_t coord_seed = 0;
  // One-sided slopes disagreeing by more than this fraction of their own
  // magnitude flag a kink.  Central differences stay exact through even-
  // order terms, so smooth coordinates sit far below this no matter the
  // curvature; only genuine non-smoothness inside [x-h, x+h] trips it.
  double kink_rel = 0.02;
};

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::int64_t coords_checked = 0;
  std::vector<std::int64_t> kink_coords;  // flagged and excluded
  std::int64_t worst_coord = -1;
  double worst_autodiff = 0.0;
  double worst_numeric = 0.0;

  bool pass(double tol) const { return max_rel_error <= tol; }
};

// Compares reverse-mode gradients of the scalar-valued f against central
// finite differences at x0.  Coordinates where the two one-sided slopes
// disagree (hinge boundaries and the like) are flagged and excluded from
// the error statistic.  Throws NumericError when f produces a non-finite
// value.
FiniteDiffReport finite_diff_check(
    const std::function<Tensor(const Tensor&)>& f, const Tensor& x0,
    const FiniteDiffOptions& options = {});

struct GradSuiteCase {
  std::string name;
  FiniteDiffReport report;
  double tolerance = 1e-4;
  bool passed = false;
};

// Runs finite-difference verification across every differentiable kernel,
// every loss, and the model forwards (latent mapper, decoder, encoders),
// at `points` random inputs per case.  High-dimensional forwards probe a
// random subset of coordinates per point; losses probe every coordinate.
std::vector<GradSuiteCase> run_gradient_suite(int points, std::uint64_t seed);

}  // namespace anyface

#endif  // ANYFACE_GRADCHECK_HPP_
