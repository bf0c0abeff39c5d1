// Copyright 2026 The ATS Authors
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

#include <cmath>

#include "doctest.h"

#include "ats/error.hpp"
#include "ats/kernels.hpp"
#include "ats/math.hpp"
#include "helpers.hpp"

using namespace ats;

TEST_CASE("gelu closed form") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(0.5) == doctest::Approx(0.5 * 0.6914624612740131).epsilon(1e-12));
  CHECK(std::abs(gelu(10.0) - 10.0) < 1e-6);
  CHECK(gelu(-30.0) == doctest::Approx(0.0));
  CHECK(gelu(30.0) == doctest::Approx(30.0));
}

TEST_CASE("gelu and relu derivatives match finite differences") {
  for (double x : {-2.5, -0.3, 0.1, 0.7, 3.0}) {
    const double h = 1e-6;
    CHECK(gelu_grad(x) == doctest::Approx((gelu(x + h) - gelu(x - h)) / (2 * h)).epsilon(1e-7));
    CHECK(relu_grad(x) == (x > 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("softmax") {
  const Vector y = softmax(Vector{0.0, std::log(3.0)});
  CHECK(y[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(0.75).epsilon(1e-15));

  const Vector big = softmax(Vector{1000.0, 1000.0, 1000.0});
  for (double v : big) CHECK(v == doctest::Approx(1.0 / 3.0));

  Rng rng(3);
  Vector x(7), w(7);
  for (auto& v : x) v = rng.normal();
  for (auto& v : w) v = rng.normal();
  auto f = [&](std::span<const double> p) {
    const Vector s = softmax(p);
    return dot(s, w);
  };
  const Vector num = finite_difference_gradient(f, x);
  const Vector ana = softmax_backward(softmax(x), w);
  CHECK(max_relative_error(num, ana) < 1e-6);
}

TEST_CASE("layer norm forward and backward") {
  const Vector x{1.0, 2.0, 3.0, 4.0};
  const Vector g{1.0, 1.0, 1.0, 1.0}, b{0.0, 0.0, 0.0, 0.0};
  const Vector y = layer_norm(x, g, b, 0.0);
  double mean = 0.0, var = 0.0;
  for (double v : y) mean += v / 4;
  for (double v : y) var += (v - mean) * (v - mean) / 4;
  CHECK(mean == doctest::Approx(0.0));
  CHECK(var == doctest::Approx(1.0));

  Rng rng(5);
  Vector xs(6), gain(6), bias(6), up(6);
  for (auto* v : {&xs, &gain, &bias, &up})
    for (auto& e : *v) e = rng.normal();
  LayerNormCache cache;
  layer_norm(xs, gain, bias, 1e-5, &cache);
  const LayerNormGrads grads = layer_norm_backward(cache, gain, up);
  auto fx = [&](std::span<const double> p) { return dot(layer_norm(p, gain, bias, 1e-5), up); };
  auto fg = [&](std::span<const double> p) { return dot(layer_norm(xs, p, bias, 1e-5), up); };
  auto fb = [&](std::span<const double> p) { return dot(layer_norm(xs, gain, p, 1e-5), up); };
  CHECK(max_relative_error(finite_difference_gradient(fx, xs), grads.dx) < 1e-6);
  CHECK(max_relative_error(finite_difference_gradient(fg, gain), grads.dgain) < 1e-6);
  CHECK(max_relative_error(finite_difference_gradient(fb, bias), grads.dbias) < 1e-6);
}

TEST_CASE("l2 normalization") {
  const Matrix m{{3.0, 4.0}, {0.0, 0.0}};
  const NormalizedRows n = l2_normalize_rows(m);
  CHECK(n.unit(0, 0) == doctest::Approx(0.6));
  CHECK(n.unit(0, 1) == doctest::Approx(0.8));
  CHECK(n.norms[0] == doctest::Approx(5.0));
  CHECK_FALSE(n.degenerate[0]);
  CHECK(n.degenerate[1]);
  CHECK(n.any_degenerate());
  CHECK(n.unit(1, 0) == 0.0);

  Rng rng(9);
  Matrix x = test::random_matrix(3, 4, rng);
  const Matrix w = test::random_matrix(3, 4, rng);
  const Matrix back = l2_normalize_rows_backward(l2_normalize_rows(x), w);
  const Vector num = test::numeric_grad(x.flat(), [&] {
    return test::weighted_sum(l2_normalize_rows(x).unit, w);
  });
  CHECK(max_relative_error(num, back.values()) < 1e-6);
}

TEST_CASE("cosine similarity matrix") {
  const Matrix a{{1.0, 0.0}, {1.0, 1.0}};
  const Matrix s = cosine_similarity_matrix(a, a);
  CHECK(s(0, 0) == doctest::Approx(1.0));
  CHECK(s(0, 1) == doctest::Approx(std::sqrt(0.5)));
  CHECK(s(1, 0) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("finite difference oracle") {
  auto f = [](std::span<const double> p) { return p[0] * p[0] + 3.0 * p[1]; };
  const Vector g = finite_difference_gradient(f, Vector{2.0, -1.0});
  CHECK(g[0] == doctest::Approx(4.0));
  CHECK(g[1] == doctest::Approx(3.0));

  auto bad = [](std::span<const double> p) { return p[1] > 0.5 ? std::nan("") : 1.0; };
  CHECK_THROWS_AS(finite_difference_gradient(bad, Vector{0.0, 0.5}), NumericError);
  CHECK(max_relative_error(Vector{1.0, 0.0}, Vector{1.0, 0.0}) == 0.0);
}

TEST_CASE("matrix shape checks") {
  CHECK_THROWS_AS(Matrix(2, 2, Vector{1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS((Matrix{{1.0, 2.0}, {3.0}}), ShapeError);
  const Matrix m{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(m.transposed()(0, 1) == 3.0);
  const std::size_t idx[] = {1, 1};
  const Matrix g = m.gather_rows(idx);
  CHECK(g(1, 0) == 3.0);
  const std::size_t bad[] = {2};
  CHECK_THROWS_AS(m.gather_rows(bad), ShapeError);
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  Rng rng(21);
  for (auto [m, k, n] : {std::tuple{3, 4, 5}, std::tuple{64, 300, 70}, std::tuple{1, 1, 1}}) {
    const Matrix a = test::random_matrix(m, k, rng);
    const Matrix b = test::random_matrix(k, n, rng);
    const Matrix bt = b.transposed();
    const Matrix at = a.transposed();
    const Matrix ref = kernels::serial::matmul(a, b);
    CHECK(kernels::parallel::matmul(a, b) == ref);
    CHECK(kernels::serial::matmul_abt(a, bt) == ref);
    CHECK(kernels::parallel::matmul_abt(a, bt) == ref);
    CHECK(kernels::serial::matmul_atb(at, b) == ref);
    CHECK(kernels::parallel::matmul_atb(at, b) == ref);
  }
  const Matrix a{{1.0, 2.0}, {3.0, 4.0}};
  const Matrix want{{7.0, 10.0}, {15.0, 22.0}};
  CHECK(matmul(a, a) == want);
  CHECK_THROWS_AS(matmul(a, Matrix(3, 2)), ShapeError);
}

TEST_CASE("rng streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(Rng(42).child("x").next_u64() != Rng(42).child("y").next_u64());
  CHECK(Rng(42).child("x", 1).next_u64() != Rng(42).child("x", 2).next_u64());
  CHECK(Rng(42).child("x", 1).next_u64() == Rng(42).child("x", 1).next_u64());

  Rng r(7);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = r.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.05);
  for (int i = 0; i < 1000; ++i) {
    CHECK(r.below(7) < 7);
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
  }
  std::vector<int> items{0, 1, 2, 3, 4, 5};
  r.shuffle(std::span<int>(items));
  std::vector<int> sorted = items;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5});
}
