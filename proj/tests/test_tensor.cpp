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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <memory>
#include <vector>

#include "anyface/errors.hpp"
#include "anyface/rng.hpp"
#include "anyface/tensor.hpp"

using namespace anyface;

TEST_CASE("construction and element access") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.rows() == 2);
  CHECK(z.cols() == 3);
  CHECK(z.at(1, 2) == 0.0);

  Tensor c = Tensor::constant({4}, 2.5);
  for (std::int64_t i = 0; i < 4; ++i) CHECK(c.at(i) == 2.5);

  Tensor s = Tensor::scalar(-1.25);
  CHECK(s.value() == -1.25);

  CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("matmul hand cases") {
  // Identity times identity.
  Tensor i2 = Tensor::from_data({2, 2}, {1, 0, 0, 1});
  Tensor p = matmul(i2, i2);
  CHECK(p.at(0, 0) == 1.0);
  CHECK(p.at(0, 1) == 0.0);
  CHECK(p.at(1, 0) == 0.0);
  CHECK(p.at(1, 1) == 1.0);

  // [[1,2],[3,4]] * [[0],[1]] = [[2],[4]].
  Tensor a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  Tensor b = Tensor::from_data({2, 1}, {0, 1});
  Tensor ab = matmul(a, b);
  CHECK(ab.at(0, 0) == 2.0);
  CHECK(ab.at(1, 0) == 4.0);

  CHECK_THROWS_AS(matmul(a, Tensor::zeros({3, 2})), ShapeError);
}

TEST_CASE("matmul gradient matches central finite differences") {
  Rng rng(123);
  Tensor a = Tensor::randn({3, 4}, rng, 1.0, true);
  Tensor b = Tensor::randn({4, 2}, rng, 1.0, false);
  Tensor loss = sum(matmul(a, b));
  loss.backward();

  const double h = 1e-6;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    std::vector<double> bumped = a.data();
    bumped[static_cast<std::size_t>(i)] += h;
    Tensor ap = Tensor::from_data({3, 4}, bumped);
    bumped[static_cast<std::size_t>(i)] -= 2 * h;
    Tensor am = Tensor::from_data({3, 4}, bumped);
    const double fd =
        (sum(matmul(ap, b)).value() - sum(matmul(am, b)).value()) / (2 * h);
    const double an = a.grad()[static_cast<std::size_t>(i)];
    CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("softmax values and shift invariance") {
  Tensor x = Tensor::from_data({1, 2}, {0.0, 0.0});
  Tensor s = softmax(x);
  CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  Tensor y = Tensor::from_data({1, 2}, {0.0, std::log(3.0)});
  Tensor sy = softmax(y);
  CHECK(sy.at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(sy.at(0, 1) == doctest::Approx(0.75).epsilon(1e-12));

  Tensor shifted = softmax(add_scalar(y, 17.0));
  for (std::int64_t i = 0; i < 2; ++i) {
    CHECK(shifted.at(0, i) == doctest::Approx(sy.at(0, i)).epsilon(1e-12));
  }
}

TEST_CASE("rowwise softmax normalizes every row") {
  Rng rng(5);
  Tensor x = Tensor::randn({4, 7}, rng);
  Tensor s = softmax(x);
  for (std::int64_t r = 0; r < 4; ++r) {
    double total = 0.0;
    for (std::int64_t c = 0; c < 7; ++c) {
      CHECK(s.at(r, c) > 0.0);
      total += s.at(r, c);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("layer_norm produces zero mean and unit variance per row") {
  Rng rng(17);
  Tensor x = Tensor::randn({3, 16}, rng, 2.0);
  Tensor g = Tensor::constant({1, 16}, 1.0);
  Tensor b = Tensor::zeros({1, 16});
  Tensor y = layer_norm(x, g, b);
  for (std::int64_t r = 0; r < 3; ++r) {
    double mean = 0.0, var = 0.0;
    for (std::int64_t c = 0; c < 16; ++c) mean += y.at(r, c);
    mean /= 16.0;
    for (std::int64_t c = 0; c < 16; ++c) {
      var += (y.at(r, c) - mean) * (y.at(r, c) - mean);
    }
    var /= 16.0;
    CHECK(std::abs(mean) < 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("backward populates finite gradients for every reachable leaf") {
  Rng rng(29);
  Tensor a = Tensor::randn({2, 5}, rng, 1.0, true);
  Tensor b = Tensor::randn({5, 3}, rng, 1.0, true);
  Tensor g = Tensor::constant({1, 3}, 1.0, true);
  Tensor bias = Tensor::zeros({1, 3}, true);
  Tensor y = mean(layer_norm(tanh_t(matmul(a, b)), g, bias));
  y.backward();
  for (const Tensor* t : {&a, &b, &g, &bias}) {
    REQUIRE(t->has_grad());
    for (double v : t->grad()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("detach blocks gradient flow") {
  Tensor a = Tensor::from_data({1, 2}, {1.0, 2.0}, true);
  Tensor y = sum(mul(a.detach(), a));
  y.backward();
  // d/da of sum(const * a) is the detached value, not 2a.
  CHECK(a.grad()[0] == doctest::Approx(1.0));
  CHECK(a.grad()[1] == doctest::Approx(2.0));
}

TEST_CASE("graph nodes are reclaimed once tensors go out of scope") {
  std::weak_ptr<detail::TensorNode> probe;
  {
    Tensor a = Tensor::from_data({1, 2}, {0.5, -0.5}, true);
    Tensor y = sum(tanh_t(mul(a, a)));
    probe = y.node();
    y.backward();
    CHECK(!probe.expired());
  }
  CHECK(probe.expired());
}

TEST_CASE("elementwise op values") {
  Tensor a = Tensor::from_data({1, 3}, {1.0, -2.0, 3.0});
  Tensor b = Tensor::from_data({1, 3}, {4.0, 5.0, -6.0});
  Tensor s = add(a, b);
  CHECK(s.at(0, 1) == 3.0);
  Tensor d = sub(a, b);
  CHECK(d.at(0, 2) == 9.0);
  Tensor m = mul(a, b);
  CHECK(m.at(0, 0) == 4.0);
  Tensor q = div(a, b);
  CHECK(q.at(0, 1) == doctest::Approx(-0.4));
  CHECK(abs_t(a).at(0, 1) == 2.0);
  CHECK(relu(a).at(0, 1) == 0.0);
  CHECK(relu(a).at(0, 2) == 3.0);
  CHECK(mean(a).value() == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(add(a, Tensor::zeros({1, 4})), ShapeError);
  CHECK_THROWS_AS(log_t(Tensor::from_data({1}, {-1.0})), NumericError);
}

TEST_CASE("row manipulation ops") {
  Tensor a = Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor top = rows_slice(a, 0, 1);
  CHECK(top.rows() == 1);
  CHECK(top.at(0, 1) == 2.0);

  Tensor cat = concat_rows(top, a);
  CHECK(cat.rows() == 4);
  CHECK(cat.at(3, 0) == 5.0);

  Tensor mr = mean_rows(a);
  CHECK(mr.rows() == 1);
  CHECK(mr.at(0, 0) == doctest::Approx(3.0));
  CHECK(mr.at(0, 1) == doctest::Approx(4.0));

  Tensor st = stack_rows({rows_slice(a, 2, 3), rows_slice(a, 0, 1)});
  CHECK(st.at(0, 0) == 5.0);
  CHECK(st.at(1, 0) == 1.0);

  Tensor t = transpose(a);
  CHECK(t.rows() == 2);
  CHECK(t.at(0, 2) == 5.0);

  Tensor r = reshape(a, {2, 3});
  CHECK(r.at(1, 0) == 4.0);
  CHECK_THROWS_AS(reshape(a, {4, 2}), ShapeError);
}

TEST_CASE("embed_rows gathers and routes gradients to the table") {
  Tensor table = Tensor::from_data({3, 2}, {0, 1, 10, 11, 20, 21}, true);
  Tensor picked = embed_rows(table, {2, 0, 2});
  CHECK(picked.at(0, 1) == 21.0);
  CHECK(picked.at(1, 0) == 0.0);
  sum(picked).backward();
  // Row 2 was gathered twice, row 1 never.
  CHECK(table.grad()[4] == 2.0);
  CHECK(table.grad()[2] == 0.0);
  CHECK_THROWS_AS(embed_rows(table, {3}), InputError);
}

TEST_CASE("reused subexpressions accumulate gradient once per path") {
  Tensor x = Tensor::from_data({1}, {3.0}, true);
  Tensor y = add(mul(x, x), x);  // x^2 + x, dy/dx = 2x + 1 = 7
  y.backward();
  CHECK(x.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("tanh and log values with gradients") {
  Tensor x = Tensor::from_data({1}, {0.5}, true);
  Tensor y = tanh_t(x);
  y.backward();
  CHECK(y.value() == doctest::Approx(std::tanh(0.5)).epsilon(1e-12));
  CHECK(x.grad()[0] ==
        doctest::Approx(1.0 - std::tanh(0.5) * std::tanh(0.5)).epsilon(1e-12));

  Tensor z = Tensor::from_data({1}, {2.0}, true);
  Tensor ly = log_t(z);
  ly.backward();
  CHECK(ly.value() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(z.grad()[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("diag extracts the main diagonal with gradient routing") {
  Tensor m = Tensor::from_data({2, 2}, {4.0, 7.0, 8.0, 9.0}, true);
  Tensor d = diag(m);
  CHECK(d.rows() == 1);
  CHECK(d.at(0, 0) == 4.0);
  CHECK(d.at(0, 1) == 9.0);
  sum(d).backward();
  CHECK(m.grad()[0] == 1.0);
  CHECK(m.grad()[1] == 0.0);
  CHECK_THROWS_AS(diag(Tensor::zeros({2, 3})), ShapeError);
}
