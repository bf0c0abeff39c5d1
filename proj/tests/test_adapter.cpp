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

#include "doctest.h"

#include "ats/adapter.hpp"
#include "ats/error.hpp"
#include "gradcheck.hpp"

using namespace ats;

namespace {

AdapterConfig small(std::size_t in, std::size_t bottleneck, std::size_t out) {
  AdapterConfig c;
  c.in_dim = in;
  c.bottleneck_dim = bottleneck;
  c.out_dim = out;
  return c;
}

}  // namespace

TEST_CASE("init shapes, determinism and scale") {
  const AdapterConfig c = small(4, 2, 4);
  Rng a(1), b(1);
  const AdapterParams p = init_adapter(c, a);
  CHECK(p.w_down.rows() == 2);
  CHECK(p.w_down.cols() == 4);
  CHECK(p.w_up.rows() == 4);
  CHECK(p.w_up.cols() == 2);
  CHECK(p.ln_gain.empty());
  const AdapterParams q = init_adapter(c, b);
  CHECK(p.w_down == q.w_down);
  CHECK(p.w_up == q.w_up);

  // 100 x 100 weights: Glorot limit sqrt(6/200), variance limit^2 / 3.
  Rng r(2);
  const AdapterParams big = init_adapter(small(100, 100, 100), r);
  double sum = 0.0, sq = 0.0;
  for (double v : big.w_down.flat()) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(big.w_down.size());
  const double var = sq / n - (sum / n) * (sum / n);
  const double want = (6.0 / 200.0) / 3.0;
  CHECK(std::abs(var - want) / want < 0.2);
  const double limit = std::sqrt(6.0 / 200.0);
  for (double v : big.w_down.flat()) CHECK(std::abs(v) <= limit);
}

TEST_CASE("config validation") {
  AdapterConfig c = small(4, 0, 4);
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small(4, 2, 3);
  c.use_residual = true;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = small(4, 2, 4);
  c.dropout_rate = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(activation_from_string("relu") == Activation::kRelu);
  CHECK(to_string(Activation::kNone) == "none");
  CHECK_THROWS_AS(activation_from_string("tanh"), ConfigError);
}

TEST_CASE("parameter count and ratio") {
  AdapterConfig c = small(1024, 256, 1024);
  CHECK(c.compression_ratio() == 0.25);
  CHECK(c.parameter_count() == 1024 * 256 * 2);
  c.use_layernorm = true;
  CHECK(c.parameter_count() == 1024 * 256 * 2 + 2 * 1024);
}

TEST_CASE("zero weights: zero map without residual, identity with") {
  Rng rng(3);
  AdapterConfig c = small(5, 2, 5);
  AdapterParams p = init_adapter(c, rng);
  p.w_down.fill(0.0);
  const Matrix h = test::random_matrix(4, 5, rng);
  const Matrix z = adapter_forward(p, c, h, nullptr, false).z;
  for (double v : z.flat()) CHECK(v == 0.0);
  c.use_residual = true;
  CHECK(adapter_forward(p, c, h, nullptr, false).z == h);
}

TEST_CASE("scalar GELU example") {
  const AdapterConfig c = small(3, 1, 2);
  AdapterParams p;
  p.w_down = Matrix{{1.0, 0.0, 0.0}};
  p.w_up = Matrix{{1.0}, {2.0}};
  const Matrix z = adapter_forward(p, c, Matrix{{0.5, 9.0, 9.0}}, nullptr, false).z;
  // Exact-erf GELU: 0.5 * Phi(0.5) = 0.3457312.
  CHECK(z(0, 0) == gelu(0.5));
  CHECK(z(0, 1) == 2.0 * gelu(0.5));
  CHECK(z(0, 0) == doctest::Approx(0.345731).epsilon(1e-6));
}

TEST_CASE("forward errors") {
  Rng rng(4);
  AdapterConfig c = small(4, 2, 4);
  const AdapterParams p = init_adapter(c, rng);
  CHECK_THROWS_AS(adapter_forward(p, c, Matrix(2, 5), nullptr, false), ShapeError);
  c.dropout_rate = 0.5;
  CHECK_THROWS_AS(adapter_forward(p, c, Matrix(2, 4), nullptr, true), std::invalid_argument);
  CHECK_NOTHROW(adapter_forward(p, c, Matrix(2, 4), nullptr, false));
}

TEST_CASE("eval mode is batch-order equivariant") {
  Rng rng(5);
  AdapterConfig c = small(6, 3, 4);
  c.use_layernorm = true;
  c.dropout_rate = 0.3;
  const AdapterParams p = init_adapter(c, rng);
  const Matrix h = test::random_matrix(5, 6, rng);
  const std::vector<std::size_t> perm{3, 0, 4, 1, 2};
  const Matrix z = adapter_forward(p, c, h, nullptr, false).z;
  const Matrix zp = adapter_forward(p, c, h.gather_rows(perm), nullptr, false).z;
  CHECK(zp == z.gather_rows(perm));
}

TEST_CASE("dropout is inverted and reused by backward") {
  Rng rng(6);
  AdapterConfig c = small(8, 4, 8);
  c.dropout_rate = 0.5;
  const AdapterParams p = init_adapter(c, rng);
  const Matrix h = test::random_matrix(3, 8, rng);
  Rng d1(10), d2(10);
  AdapterForward a = adapter_forward(p, c, h, &d1, true);
  const AdapterForward b = adapter_forward(p, c, h, &d2, true);
  CHECK(a.z == b.z);
  const Matrix eval = adapter_forward(p, c, h, nullptr, false).z;
  for (std::size_t i = 0; i < a.z.size(); ++i) {
    const double v = a.z.flat()[i];
    CHECK((v == 0.0 || v == doctest::Approx(2.0 * eval.flat()[i])));
  }
  // Backward through the cached mask: gradient only reaches kept units.
  Matrix up(3, 8);
  up.fill(1.0);
  const AdapterBackward bw = adapter_backward(p, a.cache, up);
  CHECK(bw.grads.w_up.all_finite());
}

TEST_CASE("backward: zero upstream gives zero gradients") {
  Rng rng(7);
  AdapterConfig c = small(5, 4, 3);
  c.use_layernorm = true;
  const AdapterParams p = init_adapter(c, rng);
  AdapterForward f = adapter_forward(p, c, test::random_matrix(2, 5, rng), nullptr, false);
  const AdapterBackward bw = adapter_backward(p, f.cache, Matrix(2, 3));
  for (double v : bw.grads.w_down.flat()) CHECK(v == 0.0);
  for (double v : bw.grads.w_up.flat()) CHECK(v == 0.0);
  for (double v : bw.grads.ln_gain) CHECK(v == 0.0);
  for (double v : bw.dh.flat()) CHECK(v == 0.0);
}

TEST_CASE("backward: stale cache") {
  Rng rng(8);
  const AdapterConfig c = small(4, 2, 4);
  AdapterParams p = init_adapter(c, rng);
  AdapterForward f = adapter_forward(p, c, test::random_matrix(2, 4, rng), nullptr, false);
  adapter_backward(p, f.cache, Matrix(2, 4));
  CHECK_THROWS_AS(adapter_backward(p, f.cache, Matrix(2, 4)), StaleCacheError);

  AdapterForward g = adapter_forward(p, c, test::random_matrix(2, 4, rng), nullptr, false);
  p.w_up(0, 0) += 1.0;
  CHECK_THROWS_AS(adapter_backward(p, g.cache, Matrix(2, 4)), StaleCacheError);
}

TEST_CASE("gradients match finite differences for every toggle combination") {
  for (bool residual : {false, true})
    for (bool ln : {false, true})
      for (Activation act : {Activation::kGelu, Activation::kRelu}) {
        AdapterConfig c = small(5, 4, residual ? 5 : 3);
        c.use_residual = residual;
        c.use_layernorm = ln;
        c.activation = act;
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
          CAPTURE(residual);
          CAPTURE(ln);
          CAPTURE(seed);
          CHECK(test::adapter_gradcheck(c, 3, seed) < 1e-5);
        }
      }
  AdapterConfig none = small(5, 4, 3);
  none.activation = Activation::kNone;
  CHECK(test::adapter_gradcheck(none, 3, 11) < 1e-5);
}
