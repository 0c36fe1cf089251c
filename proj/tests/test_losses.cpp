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
// Hand-arithmetic oracles for every loss, frozen as exact constants; the
// broader finite-difference coverage lives in the gradient suite.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "anyface/errors.hpp"
#include "anyface/losses.hpp"
#include "anyface/rng.hpp"
#include "anyface/tensor.hpp"

using namespace anyface;

namespace {

Tensor row(std::vector<double> v) {
  return Tensor::from_data({1, static_cast<std::int64_t>(v.size())},
                           std::move(v));
}

}  // namespace

TEST_CASE("kl_divergence hand cases") {
  CHECK(kl_divergence(row({0.5, 0.5}), row({0.5, 0.5})).value() ==
        doctest::Approx(0.0).epsilon(1e-12));
  const double expected = 0.5 * std::log(4.0 / 3.0);
  CHECK(std::abs(kl_divergence(row({0.5, 0.5}), row({0.25, 0.75})).value() -
                 expected) < 1e-9);
  // Non-negativity over random probability pairs.
  Rng rng(41);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> p(4), q(4);
    double sp = 0, sq = 0;
    for (int j = 0; j < 4; ++j) {
      p[j] = rng.uniform() + 1e-6;
      q[j] = rng.uniform() + 1e-6;
      sp += p[j];
      sq += q[j];
    }
    for (int j = 0; j < 4; ++j) {
      p[j] /= sp;
      q[j] /= sq;
    }
    CHECK(kl_divergence(row(p), row(q)).value() >= -1e-12);
  }
  CHECK_THROWS_AS(kl_divergence(row({0.5, 0.5}), row({1.0, 0.0})),
                  SupportError);
  CHECK_THROWS_AS(kl_divergence(row({0.3, 0.3}), row({0.5, 0.5})),
                  InputError);
}

TEST_CASE("cosine_similarity hand cases") {
  CHECK(cosine_similarity(row({1, 0}), row({1, 0})).value() ==
        doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::abs(cosine_similarity(row({1, 0}), row({0, 1})).value()) <
        1e-12);
  CHECK(std::abs(cosine_similarity(row({3, 4}), row({4, 3})).value() -
                 24.0 / 25.0) < 1e-9);
  CHECK(cosine_similarity(row({0, 0}), row({1, 1})).value() == 0.0);
}

TEST_CASE("cmt_loss composes softmax with kl") {
  Tensor h = row({0.3, -1.2, 0.88});
  CHECK(cmt_loss(h, h).value() == doctest::Approx(0.0).epsilon(1e-12));

  // softmax([0,0]) = [.5,.5], softmax([0,ln3]) = [.25,.75].
  const double expected = 0.5 * std::log(4.0 / 3.0);
  CHECK(std::abs(cmt_loss(row({0.0, 0.0}), row({0.0, std::log(3.0)})).value() -
                 expected) < 1e-9);
}

TEST_CASE("cmt_loss gradient reaches the student only") {
  Rng rng(7);
  Tensor hs = Tensor::randn({1, 6}, rng, 1.0, true);
  Tensor ht = Tensor::randn({1, 6}, rng, 1.0, true);
  Tensor loss = cmt_loss(hs, ht);
  loss.backward();
  REQUIRE(hs.has_grad());
  double hs_norm = 0.0;
  for (double g : hs.grad()) hs_norm += g * g;
  CHECK(hs_norm > 0.0);
  // The target side is detached inside the loss; no gradient flows back.
  bool ht_touched = false;
  if (ht.has_grad()) {
    for (double g : ht.grad()) ht_touched |= (g != 0.0);
  }
  CHECK(!ht_touched);

  const double h = 1e-6;
  for (std::int64_t i = 0; i < hs.numel(); ++i) {
    std::vector<double> b = hs.data();
    b[static_cast<std::size_t>(i)] += h;
    const double up = cmt_loss(Tensor::from_data({1, 6}, b), ht).value();
    b[static_cast<std::size_t>(i)] -= 2 * h;
    const double dn = cmt_loss(Tensor::from_data({1, 6}, b), ht).value();
    const double fd = (up - dn) / (2 * h);
    CHECK(std::abs(fd - hs.grad()[static_cast<std::size_t>(i)]) <=
          1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("pair_loss hand cases") {
  Tensor w = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  CHECK(pair_loss(w, w).value() == doctest::Approx(0.0));

  Tensor wt = Tensor::from_data({2, 2}, {2, 1, 5, 4});  // diff [1,-1,2,0]
  CHECK(pair_loss(wt, w, 1).value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pair_loss(wt, w, 2).value() == doctest::Approx(1.5).epsilon(1e-12));
  CHECK_THROWS_AS(pair_loss(wt, w, 3), ConfigError);
  CHECK_THROWS_AS(pair_loss(wt, Tensor::zeros({1, 4})), ShapeError);
}

TEST_CASE("dt_loss pinned hand cases") {
  const double s2 = 1.0 / std::sqrt(2.0), s10 = 1.0 / std::sqrt(10.0);
  Tensor w = row({1, 0});
  Tensor w_avg = row({0, 1});
  Tensor w_t = row({s2, s2});
  Tensor w_neg = row({s10, 3 * s10});

  // ratio(w_t) = 1, ratio(w_neg) = 1/3; prose hinge is empty.
  CHECK(std::abs(dt_loss(w_t, w_neg, w, w_avg, 0.1).value()) < 1e-9);
  // Swapped roles open the hinge: 1 - 1/3 + 0.1 = 23/30.
  CHECK(std::abs(dt_loss(w_neg, w_t, w, w_avg, 0.1).value() - 23.0 / 30.0) <
        1e-9);
  // The as-written orientation mirrors the sign convention.
  CHECK(std::abs(dt_loss(w_t, w_neg, w, w_avg, 0.1,
                         TripletOrientation::kAsWritten)
                     .value() -
                 23.0 / 30.0) < 1e-9);

  // w_t = w_neg degenerates to the margin under either orientation.
  CHECK(dt_loss(w_t, w_t, w, w_avg, 0.2).value() ==
        doctest::Approx(0.2).epsilon(1e-9));
  CHECK(dt_loss(w_t, w_t, w, w_avg, 0.2, TripletOrientation::kAsWritten)
            .value() == doctest::Approx(0.2).epsilon(1e-9));
  CHECK(dt_loss(w_t, w_t, w, w_avg, 0.0).value() ==
        doctest::Approx(0.0).epsilon(1e-12));

  CHECK_THROWS_AS(dt_loss(w_t, w_neg, w, w_avg, -0.1), ConfigError);
}

TEST_CASE("dt_loss never increases while w_t rotates toward its target") {
  // Rotate w_t along the great circle toward w at 100 random admissible
  // configurations and check the collapse regime: as long as the moving
  // latent is angularly at least as close to the average as to its target
  // (cos to w <= cos to w_avg, both positive), the positive sample's
  // ratio cannot fall, so the prose hinge is non-increasing.  Past that
  // crossover the denominator's rate may dominate, so the walk stops
  // there; the loss near the target is governed by the hinge closing
  // instead.
  Rng rng(97);
  const std::int64_t n = 6;
  auto cosine = [&](const std::vector<double>& a,
                    const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::int64_t i = 0; i < n; ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return dot / std::sqrt(na * nb);
  };
  auto draw = [&]() {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.normal();
    return v;
  };
  int accepted = 0;
  int draws = 0;
  while (accepted < 100) {
    REQUIRE(++draws < 100000);
    std::vector<double> wv = draw(), av = draw(), tv = draw(), gv = draw();
    if (cosine(tv, wv) < 0.1) continue;

    // Normalize and build the great-circle path from w_t toward w.
    auto unit = [&](std::vector<double> v) {
      double norm = 0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      for (auto& x : v) x /= norm;
      return v;
    };
    std::vector<double> u = unit(tv), v = unit(wv);
    double c = cosine(u, v);
    const double theta = std::acos(std::min(1.0, std::max(-1.0, c)));
    if (theta < 1e-3) continue;

    std::vector<std::vector<double>> path;
    bool admissible = true;
    for (int k = 0; k <= 16; ++k) {
      const double a = static_cast<double>(k) / 16.0;
      const double s = std::sin(theta);
      std::vector<double> x(static_cast<std::size_t>(n));
      for (std::int64_t i = 0; i < n; ++i) {
        x[i] = (std::sin((1.0 - a) * theta) * u[i] +
                std::sin(a * theta) * v[i]) /
               s;
      }
      const double to_avg = cosine(x, av);
      if (to_avg < 0.05) {
        admissible = false;
        break;
      }
      if (cosine(x, wv) > to_avg) break;  // crossover: leave collapse regime
      path.push_back(std::move(x));
    }
    if (!admissible || path.size() < 3) continue;

    Tensor w = Tensor::from_data({2, 3}, wv);
    Tensor w_avg = Tensor::from_data({2, 3}, av);
    Tensor w_neg = Tensor::from_data({2, 3}, gv);
    double prev = dt_loss(Tensor::from_data({2, 3}, path[0]), w_neg, w,
                          w_avg, 0.2)
                      .value();
    for (std::size_t k = 1; k < path.size(); ++k) {
      const double cur =
          dt_loss(Tensor::from_data({2, 3}, path[k]), w_neg, w, w_avg, 0.2)
              .value();
      CHECK(cur <= prev + 1e-9);
      prev = cur;
    }
    ++accepted;
  }
  CHECK(accepted == 100);
}

TEST_CASE("clip_loss hand cases") {
  Tensor f = row({3, 4});
  CHECK(clip_loss(f, f).value() == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(clip_loss(row({1, 0}), row({0, 1})).value() ==
        doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(clip_loss(row({3, 4}), row({4, 3})).value() - 0.04) < 1e-9);
}

TEST_CASE("rec_loss hand cases") {
  Tensor a = Tensor::constant({4, 4, 3}, 0.0);
  Tensor b = Tensor::constant({4, 4, 3}, 0.5);
  CHECK(rec_loss(a, a).value() == doctest::Approx(0.0));
  CHECK(rec_loss(a, b).value() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rec_loss(a, b).value() == doctest::Approx(rec_loss(b, a).value()));
}

TEST_CASE("mse_loss hand cases") {
  Tensor a = row({1, 2});
  Tensor z = row({0, 0});
  CHECK(mse_loss(a, a).value() == doctest::Approx(0.0));
  CHECK(mse_loss(a, z).value() == doctest::Approx(2.5).epsilon(1e-12));
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    Tensor x = Tensor::randn({2, 5}, rng);
    Tensor y = Tensor::randn({2, 5}, rng);
    CHECK(mse_loss(x, y).value() >= 0.0);
  }
}

TEST_CASE("objective weighting") {
  LossWeights w;
  Tensor dt = Tensor::scalar(0.2);
  Tensor cmt = Tensor::scalar(0.1);
  Tensor clip = Tensor::scalar(0.3);
  CHECK(synthesis_objective(dt, cmt, clip, w).value() ==
        doctest::Approx(0.6).epsilon(1e-12));

  w.lambda_cmt = 0.0;
  w.lambda_clip = 0.0;
  CHECK(synthesis_objective(dt, cmt, clip, w).value() ==
        doctest::Approx(0.2).epsilon(1e-12));

  LossWeights w2;
  w2.lambda_clip = 2.0;
  CHECK(synthesis_objective(dt, cmt, clip, w2).value() ==
        doctest::Approx(0.9).epsilon(1e-12));

  Tensor mse = Tensor::scalar(0.4);
  Tensor rec = Tensor::scalar(0.2);
  LossWeights w3;
  CHECK(reconstruction_objective(mse, cmt, rec, w3).value() ==
        doctest::Approx(0.7).epsilon(1e-12));
  w3.lambda_cmt = 0.0;
  w3.lambda_rec = 0.0;
  CHECK(reconstruction_objective(mse, cmt, rec, w3).value() ==
        doctest::Approx(0.4).epsilon(1e-12));
  CHECK(reconstruction_objective(mse, cmt, rec, LossWeights{}).value() >=
        mse.value());
}

TEST_CASE("degenerate synthesis objective is identically zero") {
  // With both couplings off, zero margin, and the negative equal to the
  // positive, nothing is left to optimize.
  Rng rng(13);
  for (int i = 0; i < 10; ++i) {
    Tensor w = Tensor::randn({2, 4}, rng);
    Tensor w_avg = Tensor::randn({2, 4}, rng);
    Tensor w_t = Tensor::randn({2, 4}, rng);
    LossWeights weights;
    weights.lambda_cmt = 0.0;
    weights.lambda_clip = 0.0;
    Tensor dt = dt_loss(w_t, w_t, w, w_avg, 0.0);
    Tensor total = synthesis_objective(dt, Tensor::scalar(9.0),
                                       Tensor::scalar(9.0), weights);
    CHECK(total.value() == doctest::Approx(0.0).epsilon(1e-12));
  }
}
