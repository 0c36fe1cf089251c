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

#include "anyface/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "anyface/cmd.hpp"
#include "anyface/encoders.hpp"
#include "anyface/errors.hpp"
#include "anyface/losses.hpp"
#include "anyface/world.hpp"

namespace anyface {
namespace {

double eval_scalar(const std::function<Tensor(const Tensor&)>& f,
                   const Tensor& x) {
  Tensor y = f(x);
  if (!y.defined() || y.numel() != 1) {
    throw ShapeError("gradient-check target must return a single element");
  }
  const double v = y.value();
  if (!std::isfinite(v)) {
    throw NumericError("gradient-check target produced a non-finite value");
  }
  return v;
}

}  // namespace

FiniteDiffReport finite_diff_check(
    const std::function<Tensor(const Tensor&)>& f, const Tensor& x0,
    const FiniteDiffOptions& options) {
  if (!x0.defined() || x0.numel() == 0) {
    throw InputError("gradient check needs a non-empty input point");
  }
  if (!(options.step > 0.0) || !std::isfinite(options.step)) {
    throw InputError("finite-difference step must be positive and finite");
  }

  Tensor x = x0.detach();
  x.set_requires_grad(true);

  Tensor y = f(x);
  if (!y.defined() || y.numel() != 1) {
    throw ShapeError("gradient-check target must return a single element");
  }
  const double f0 = y.value();
  if (!std::isfinite(f0)) {
    throw NumericError("gradient-check target produced a non-finite value");
  }
  y.backward();
  std::vector<double> analytic(static_cast<std::size_t>(x.numel()), 0.0);
  if (x.has_grad()) analytic = x.grad();

  const std::int64_t n = x.numel();
  std::vector<std::int64_t> coords(static_cast<std::size_t>(n));
  std::iota(coords.begin(), coords.end(), std::int64_t{0});
  if (options.max_coords >= 0 && options.max_coords < n) {
    Rng rng(options.coord_seed);
    for (std::int64_t i = 0; i < options.max_coords; ++i) {
      const std::int64_t j =
          i + static_cast<std::int64_t>(
                  rng.uniform_index(static_cast<std::uint64_t>(n - i)));
      std::swap(coords[static_cast<std::size_t>(i)],
                coords[static_cast<std::size_t>(j)]);
    }
    coords.resize(static_cast<std::size_t>(options.max_coords));
  }

  FiniteDiffReport report;
  const double h = options.step;
  std::vector<double>& values = x.mutable_data();
  for (const std::int64_t coord : coords) {
    const std::size_t c = static_cast<std::size_t>(coord);
    const double saved = values[c];
    values[c] = saved + h;
    const double f_plus = eval_scalar(f, x);
    values[c] = saved - h;
    const double f_minus = eval_scalar(f, x);
    values[c] = saved;

    // A hinge or |.| boundary between x-h and x+h makes the two one-sided
    // slopes disagree; such coordinates carry no usable central difference.
    // The disagreement is judged against the slopes themselves (not the
    // gradient-tolerance scale): mean-normalized losses have per-coordinate
    // slopes of order 1/n, and a kink there is just as fatal.  The floor
    // absorbs evaluation noise on numerically flat coordinates.
    const double slope_plus = (f_plus - f0) / h;
    const double slope_minus = (f0 - f_minus) / h;
    const double scale =
        std::max({std::abs(slope_plus), std::abs(slope_minus), 1e-6});
    if (std::abs(slope_plus - slope_minus) > options.kink_rel * scale) {
      report.kink_coords.push_back(coord);
      continue;
    }

    const double numeric = (f_plus - f_minus) / (2.0 * h);
    const double a = analytic[c];
    const double rel =
        std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1.0});
    ++report.coords_checked;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_coord = coord;
      report.worst_autodiff = a;
      report.worst_numeric = numeric;
    }
  }
  return report;
}

namespace {

// One suite entry: builds a fresh (input point, scalar function) pair from
// the per-point RNG.  Fixed co-inputs are redrawn every point as well, so a
// hundred points genuinely cover a hundred configurations.
struct CaseSpec {
  std::string name;
  std::function<std::pair<Tensor, std::function<Tensor(const Tensor&)>>(Rng&)>
      make;
  std::int64_t max_coords = -1;  // -1 probes every coordinate
};

// Random linear functional turning a tensor-valued op into a scalar target
// with informative gradients everywhere.
Tensor probe(const Tensor& t, const Tensor& weights) {
  return sum(mul(t, weights));
}

Tensor from_fn(Shape shape, const std::function<double()>& draw) {
  std::int64_t n = 1;
  for (const std::int64_t e : shape) n *= e;
  std::vector<double> data(static_cast<std::size_t>(n));
  for (double& v : data) v = draw();
  return Tensor::from_data(std::move(shape), std::move(data));
}

// Entries uniform in [lo, hi].
Tensor positive(Rng& rng, Shape shape, double lo, double hi) {
  return from_fn(std::move(shape),
                 [&] { return lo + (hi - lo) * rng.uniform(); });
}

// Entries with magnitude in [lo, hi] and random sign; keeps denominators
// and log arguments a safe distance from their singularities.
Tensor signed_away(Rng& rng, Shape shape, double lo, double hi) {
  return from_fn(std::move(shape), [&] {
    const double m = lo + (hi - lo) * rng.uniform();
    return rng.bernoulli(0.5) ? m : -m;
  });
}

}  // namespace

std::vector<GradSuiteCase> run_gradient_suite(int points,
                                              std::uint64_t seed) {
  if (points < 1) {
    throw InputError("gradient suite needs at least one point per case");
  }

  // Shared frozen fixtures; the suite differentiates through their forwards
  // with respect to the inputs, which exercises every internal kernel's
  // backward closure along the real training paths.
  const WorldConfig world_config;
  const World world(world_config);
  const TextEncoder text_enc(32, 64, 32, substream(seed, "suite.text"));
  const ImageEncoder image_enc(world.pixels(), 128, 32,
                               substream(seed, "suite.image"));
  const CmdConfig cmd_config;
  const CmdModule cmd(cmd_config, substream(seed, "suite.cmd"));
  const int kL = world.latent_rows();
  const int kD = world.latent_dim();

  using Point = std::pair<Tensor, std::function<Tensor(const Tensor&)>>;
  std::vector<CaseSpec> specs;
  const Shape s34{3, 4};

  const auto binary_case = [&](const std::string& name,
                               Tensor (*op)(const Tensor&, const Tensor&),
                               bool lhs) {
    specs.push_back({name, [=](Rng& rng) -> Point {
                       Tensor x = Tensor::randn(s34, rng);
                       Tensor other = Tensor::randn(s34, rng);
                       Tensor r = Tensor::randn(s34, rng);
                       return {x, [=](const Tensor& v) {
                                 return probe(lhs ? op(v, other)
                                                  : op(other, v),
                                              r);
                               }};
                     }});
  };
  binary_case("add/lhs", add, true);
  binary_case("add/rhs", add, false);
  binary_case("sub/lhs", sub, true);
  binary_case("sub/rhs", sub, false);
  binary_case("mul/lhs", mul, true);
  binary_case("mul/rhs", mul, false);

  specs.push_back({"add-rowwise/matrix", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor row = Tensor::randn({1, 4}, rng);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(add_rowwise(v, row), r);
                             }};
                   }});
  specs.push_back({"add-rowwise/row", [=](Rng& rng) -> Point {
                     Tensor a = Tensor::randn(s34, rng);
                     Tensor x = Tensor::randn({1, 4}, rng);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(add_rowwise(a, v), r);
                             }};
                   }});
  specs.push_back({"div/numerator", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor den = signed_away(rng, s34, 0.75, 1.75);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(div(v, den), r);
                             }};
                   }});
  specs.push_back({"div/denominator", [=](Rng& rng) -> Point {
                     Tensor num = Tensor::randn(s34, rng);
                     Tensor x = signed_away(rng, s34, 0.75, 1.75);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(div(num, v), r);
                             }};
                   }});
  specs.push_back({"add-scalar", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor r = Tensor::randn(s34, rng);
                     const double c = rng.normal();
                     return {x, [=](const Tensor& v) {
                               return probe(add_scalar(v, c), r);
                             }};
                   }});
  specs.push_back({"mul-scalar", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor r = Tensor::randn(s34, rng);
                     const double c = rng.normal();
                     return {x, [=](const Tensor& v) {
                               return probe(mul_scalar(v, c), r);
                             }};
                   }});

  const auto unary_case = [&](const std::string& name,
                              Tensor (*op)(const Tensor&)) {
    specs.push_back({name, [=](Rng& rng) -> Point {
                       Tensor x = Tensor::randn(s34, rng);
                       Tensor r = Tensor::randn(s34, rng);
                       return {x, [=](const Tensor& v) {
                                 return probe(op(v), r);
                               }};
                     }});
  };
  unary_case("tanh", tanh_t);
  unary_case("abs", abs_t);
  unary_case("relu", relu);
  unary_case("l2-normalize", l2_normalize_rows);
  specs.push_back({"log", [=](Rng& rng) -> Point {
                     Tensor x = positive(rng, s34, 0.4, 2.4);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(log_t(v), r);
                             }};
                   }});
  specs.push_back({"sum", [=](Rng& rng) -> Point {
                     return {Tensor::randn(s34, rng),
                             [](const Tensor& v) { return sum(v); }};
                   }});
  specs.push_back({"mean", [=](Rng& rng) -> Point {
                     return {Tensor::randn(s34, rng),
                             [](const Tensor& v) { return mean(v); }};
                   }});

  specs.push_back({"matmul/lhs", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({3, 4}, rng);
                     Tensor b = Tensor::randn({4, 5}, rng);
                     Tensor r = Tensor::randn({3, 5}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(matmul(v, b), r);
                             }};
                   }});
  specs.push_back({"matmul/rhs", [=](Rng& rng) -> Point {
                     Tensor a = Tensor::randn({3, 4}, rng);
                     Tensor x = Tensor::randn({4, 5}, rng);
                     Tensor r = Tensor::randn({3, 5}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(matmul(a, v), r);
                             }};
                   }});
  specs.push_back({"transpose", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor r = Tensor::randn({4, 3}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(transpose(v), r);
                             }};
                   }});
  specs.push_back({"reshape", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor r = Tensor::randn({2, 6}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(reshape(v, {2, 6}), r);
                             }};
                   }});
  specs.push_back({"rows-slice", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor r = Tensor::randn({2, 4}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(rows_slice(v, 1, 3), r);
                             }};
                   }});
  specs.push_back({"concat-rows/top", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor b = Tensor::randn({2, 4}, rng);
                     Tensor r = Tensor::randn({5, 4}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(concat_rows(v, b), r);
                             }};
                   }});
  specs.push_back({"concat-rows/bottom", [=](Rng& rng) -> Point {
                     Tensor a = Tensor::randn({2, 4}, rng);
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor r = Tensor::randn({5, 4}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(concat_rows(a, v), r);
                             }};
                   }});
  specs.push_back({"stack-rows", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               std::vector<Tensor> rows;
                               for (std::int64_t i = 0; i < 3; ++i) {
                                 rows.push_back(rows_slice(v, i, i + 1));
                               }
                               return probe(stack_rows(rows), r);
                             }};
                   }});
  specs.push_back({"mean-rows", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor r = Tensor::randn({1, 4}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(mean_rows(v), r);
                             }};
                   }});
  specs.push_back({"diag", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({4, 4}, rng);
                     Tensor r = Tensor::randn({1, 4}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(diag(v), r);
                             }};
                   }});
  specs.push_back({"embed-rows", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({6, 4}, rng);
                     const std::vector<int> ids{0, 3, 3, 5, 1};
                     Tensor r = Tensor::randn({5, 4}, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(embed_rows(v, ids), r);
                             }};
                   }});
  specs.push_back({"softmax", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(softmax(v, 0.5), r);
                             }};
                   }});
  specs.push_back({"layer-norm/input", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor g = Tensor::randn({1, 4}, rng);
                     Tensor b = Tensor::randn({1, 4}, rng);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(layer_norm(v, g, b), r);
                             }};
                   }});
  specs.push_back({"layer-norm/gain", [=](Rng& rng) -> Point {
                     Tensor a = Tensor::randn(s34, rng);
                     Tensor x = Tensor::randn({1, 4}, rng);
                     Tensor b = Tensor::randn({1, 4}, rng);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(layer_norm(a, v, b), r);
                             }};
                   }});
  specs.push_back({"layer-norm/bias", [=](Rng& rng) -> Point {
                     Tensor a = Tensor::randn(s34, rng);
                     Tensor g = Tensor::randn({1, 4}, rng);
                     Tensor x = Tensor::randn({1, 4}, rng);
                     Tensor r = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return probe(layer_norm(a, g, v), r);
                             }};
                   }});
  specs.push_back({"kl/lhs", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({1, 6}, rng);
                     Tensor q = softmax(Tensor::randn({1, 6}, rng));
                     return {x, [=](const Tensor& v) {
                               return kl_divergence(softmax(v), q);
                             }};
                   }});
  specs.push_back({"kl/rhs", [=](Rng& rng) -> Point {
                     Tensor p = softmax(Tensor::randn({1, 6}, rng));
                     Tensor x = Tensor::randn({1, 6}, rng);
                     return {x, [=](const Tensor& v) {
                               return kl_divergence(p, softmax(v));
                             }};
                   }});
  specs.push_back({"cosine/lhs", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor b = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return cosine_similarity(v, b);
                             }};
                   }});
  specs.push_back({"cosine/rhs", [=](Rng& rng) -> Point {
                     Tensor a = Tensor::randn(s34, rng);
                     Tensor x = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return cosine_similarity(a, v);
                             }};
                   }});

  // ---- Losses (the target side of the distillation loss is detached by
  // design, so only the student side is differentiable). ----
  specs.push_back({"loss/distill-student", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({1, 32}, rng);
                     Tensor target = Tensor::randn({1, 32}, rng);
                     return {x, [=](const Tensor& v) {
                               return cmt_loss(v, target);
                             }};
                   }});
  specs.push_back({"loss/pair-abs", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({kL, kD}, rng);
                     Tensor w = Tensor::randn({kL, kD}, rng);
                     return {x, [=](const Tensor& v) {
                               return pair_loss(v, w, 1);
                             }};
                   }});
  specs.push_back({"loss/pair-square", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({kL, kD}, rng);
                     Tensor w = Tensor::randn({kL, kD}, rng);
                     return {x, [=](const Tensor& v) {
                               return pair_loss(v, w, 2);
                             }};
                   }});
  specs.push_back({"loss/pair-square/rhs", [=](Rng& rng) -> Point {
                     Tensor a = Tensor::randn({kL, kD}, rng);
                     Tensor x = Tensor::randn({kL, kD}, rng);
                     return {x, [=](const Tensor& v) {
                               return pair_loss(a, v, 2);
                             }};
                   }});

  // Triplet-ratio inputs are drawn correlated with the anchor, mirroring
  // training (the produced latent starts at the population average), so the
  // ratio denominators stay well away from zero.  The large margin keeps
  // the hinge active; the hinge boundary itself is kink-filtered anyway.
  struct TripletPoint {
    Tensor w_t, w_neg, w, w_avg;
  };
  const auto triplet_point = [kL, kD](Rng& rng) {
    TripletPoint p;
    p.w_avg = Tensor::randn({kL, kD}, rng);
    p.w = add(p.w_avg, Tensor::randn({kL, kD}, rng, 0.7));
    p.w_t = add(p.w, Tensor::randn({kL, kD}, rng, 0.5));
    p.w_neg = add(mul_scalar(p.w_avg, 0.5), Tensor::randn({kL, kD}, rng));
    return p;
  };
  const auto triplet_case = [&](const std::string& name, int which,
                                TripletOrientation orientation) {
    specs.push_back({name, [=](Rng& rng) -> Point {
                       TripletPoint p = triplet_point(rng);
                       Tensor x = which == 0   ? p.w
                                  : which == 1 ? p.w_t
                                  : which == 2 ? p.w_neg
                                               : p.w_avg;
                       return {x, [=](const Tensor& v) {
                                 return dt_loss(
                                     which == 1 ? v : p.w_t,
                                     which == 2 ? v : p.w_neg,
                                     which == 0 ? v : p.w,
                                     which == 3 ? v : p.w_avg, 2.0,
                                     orientation);
                               }};
                     }});
  };
  triplet_case("loss/triplet/latent", 0, TripletOrientation::kProse);
  triplet_case("loss/triplet/target", 1, TripletOrientation::kProse);
  triplet_case("loss/triplet/negative", 2, TripletOrientation::kProse);
  triplet_case("loss/triplet/average", 3, TripletOrientation::kProse);
  triplet_case("loss/triplet/as-written", 0, TripletOrientation::kAsWritten);

  specs.push_back({"loss/clip/text", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({1, 32}, rng);
                     Tensor f = Tensor::randn({1, 32}, rng);
                     return {x, [=](const Tensor& v) {
                               return clip_loss(v, f);
                             }};
                   }});
  specs.push_back({"loss/clip/image", [=](Rng& rng) -> Point {
                     Tensor f = Tensor::randn({1, 32}, rng);
                     Tensor x = Tensor::randn({1, 32}, rng);
                     return {x, [=](const Tensor& v) {
                               return clip_loss(f, v);
                             }};
                   }});
  specs.push_back({"loss/reconstruction", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor t = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return rec_loss(v, t);
                             }};
                   }});
  specs.push_back({"loss/mse", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn(s34, rng);
                     Tensor t = Tensor::randn(s34, rng);
                     return {x, [=](const Tensor& v) {
                               return mse_loss(v, t);
                             }};
                   }});
  specs.push_back({"loss/synthesis-objective", [=](Rng& rng) -> Point {
                     Tensor x = positive(rng, {3, 1}, 0.1, 2.0);
                     LossWeights w;
                     w.lambda_cmt = 0.7;
                     w.lambda_clip = 1.3;
                     return {x, [=](const Tensor& v) {
                               return synthesis_objective(
                                   rows_slice(v, 0, 1), rows_slice(v, 1, 2),
                                   rows_slice(v, 2, 3), w);
                             }};
                   }});
  specs.push_back({"loss/reconstruction-objective", [=](Rng& rng) -> Point {
                     Tensor x = positive(rng, {3, 1}, 0.1, 2.0);
                     LossWeights w;
                     w.lambda_cmt = 0.7;
                     w.lambda_rec = 1.3;
                     return {x, [=](const Tensor& v) {
                               return reconstruction_objective(
                                   rows_slice(v, 0, 1), rows_slice(v, 1, 2),
                                   rows_slice(v, 2, 3), w);
                             }};
                   }});
  specs.push_back({"loss/contrastive-batch/text", [=](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({4, 32}, rng);
                     Tensor img = Tensor::randn({4, 32}, rng);
                     return {x, [=](const Tensor& v) {
                               return clip_batch_loss(v, img, 0.07);
                             }};
                   }});
  specs.push_back({"loss/contrastive-batch/image", [=](Rng& rng) -> Point {
                     Tensor txt = Tensor::randn({4, 32}, rng);
                     Tensor x = Tensor::randn({4, 32}, rng);
                     return {x, [=](const Tensor& v) {
                               return clip_batch_loss(txt, v, 0.07);
                             }};
                   }});

  // ---- Model forwards (subset of coordinates per point). ----
  specs.push_back({"forward/mapping-network", [&world](Rng& rng) -> Point {
                     Tensor x =
                         Tensor::randn({1, world.config().noise_dim}, rng);
                     Tensor r = Tensor::randn(
                         {world.latent_rows(), world.latent_dim()}, rng);
                     return {x, [&world, r](const Tensor& v) {
                               return probe(
                                   world.mapping_network(
                                       v, world.latent_rows()),
                                   r);
                             }};
                   }});
  specs.push_back({"forward/decoder",
                   [&world, kL, kD](Rng& rng) -> Point {
                     Tensor x = add(world.average_latent(),
                                    Tensor::randn({kL, kD}, rng, 0.5));
                     Tensor r = Tensor::randn(
                         {world.config().image_height,
                          world.config().image_width,
                          world.config().image_channels},
                         rng);
                     return {x, [&world, r](const Tensor& v) {
                               return probe(world.decode(v), r);
                             }};
                   },
                   12});
  specs.push_back({"forward/text-encoder", [&text_enc](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({2, 32}, rng);
                     Tensor r = Tensor::randn({2, 32}, rng);
                     return {x, [&text_enc, r](const Tensor& v) {
                               return probe(text_enc.project(v), r);
                             }};
                   },
                   16});
  specs.push_back({"forward/image-encoder",
                   [&image_enc, &world](Rng& rng) -> Point {
                     Tensor x = from_fn({2, world.pixels()}, [&] {
                       return std::tanh(rng.normal());
                     });
                     Tensor r = Tensor::randn({2, 32}, rng);
                     return {x, [&image_enc, r](const Tensor& v) {
                               return probe(image_enc.project(v), r);
                             }};
                   },
                   12});
  specs.push_back({"forward/conditioner",
                   [&cmd, kL, kD](Rng& rng) -> Point {
                     Tensor x = Tensor::randn({2, 32}, rng);
                     Tensor r_latent = Tensor::randn({kL, kD}, rng);
                     Tensor r_hidden = Tensor::randn({1, 32}, rng);
                     return {x, [&cmd, r_latent, r_hidden](const Tensor& v) {
                               const CmdOutput out = cmd.forward(v);
                               return add(probe(out.latent, r_latent),
                                          probe(out.hidden, r_hidden));
                             }};
                   },
                   12});

  // ---- End-to-end training paths. ----
  specs.push_back(
      {"path/synthesis",
       [&cmd, &world, &image_enc](Rng& rng) -> Point {
         Tensor x = Tensor::randn({1, 32}, rng);
         Tensor f_text = Tensor::randn({1, 32}, rng);
         Tensor style = world.style_from_seed(rng.next_u64(), 2);
         return {x, [&cmd, &world, &image_enc, f_text,
                     style](const Tensor& v) {
                   const CmdOutput out = cmd.forward(v);
                   Tensor composed = compose_latent(out.latent, style,
                                                    world.latent_rows() - 2,
                                                    2);
                   Tensor image = world.decode(composed);
                   Tensor flat = reshape(image, {1, world.pixels()});
                   return clip_loss(f_text, image_enc.project(flat));
                 }};
       },
       8});
  specs.push_back(
      {"path/reconstruction",
       [&cmd, &world, &image_enc](Rng& rng) -> Point {
         Tensor source = add(world.average_latent(),
                             Tensor::randn({world.latent_rows(),
                                            world.latent_dim()},
                                           rng, 0.5));
         Tensor x = world.decode(source).detach();
         Tensor target = Tensor::randn(
             {world.latent_rows(), world.latent_dim()}, rng);
         return {x, [&cmd, &world, &image_enc, target](const Tensor& v) {
                   Tensor flat = reshape(v, {1, world.pixels()});
                   const CmdOutput out = cmd.forward(image_enc.project(flat));
                   Tensor fit = mse_loss(out.latent, target);
                   Tensor cycle = rec_loss(world.decode(out.latent), v);
                   return add(fit, cycle);
                 }};
       },
       8});

  std::vector<GradSuiteCase> cases;
  cases.reserve(specs.size());
  for (const CaseSpec& spec : specs) {
    GradSuiteCase result;
    result.name = spec.name;
    for (int p = 0; p < points; ++p) {
      Rng rng(substream(seed, "suite.case." + spec.name,
                        static_cast<std::uint64_t>(p)));
      auto [x0, f] = spec.make(rng);
      FiniteDiffOptions options;
      options.max_coords = spec.max_coords;
      options.coord_seed = substream(seed, "suite.coords." + spec.name,
                                     static_cast<std::uint64_t>(p));
      const FiniteDiffReport report = finite_diff_check(f, x0, options);
      result.report.coords_checked += report.coords_checked;
      result.report.kink_coords.insert(result.report.kink_coords.end(),
                                       report.kink_coords.begin(),
                                       report.kink_coords.end());
      if (report.max_rel_error > result.report.max_rel_error) {
        result.report.max_rel_error = report.max_rel_error;
        result.report.worst_coord = report.worst_coord;
        result.report.worst_autodiff = report.worst_autodiff;
        result.report.worst_numeric = report.worst_numeric;
      }
    }
    result.passed = result.report.pass(result.tolerance);
    cases.push_back(std::move(result));
  }
  return cases;
}

}  // namespace anyface
