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

#include "ats/encoder.hpp"
#include "ats/error.hpp"
#include "gradcheck.hpp"

using namespace ats;

namespace {

EncoderConfig small(std::size_t c, std::size_t t, bool attention = true) {
  EncoderConfig e;
  e.channels = c;
  e.time_steps = t;
  e.hidden_dim = 4;
  e.out_dim = 4;
  e.use_temporal_attention = attention;
  return e;
}

}  // namespace

TEST_CASE("fresh init is uniform attention") {
  Rng rng(1);
  const EncoderConfig c = small(3, 5);
  const EncoderParams p = init_encoder(c, rng);
  const Vector prof = attention_profile(p);
  REQUIRE(prof.size() == 5);
  for (double v : prof) CHECK(std::abs(v - 0.2) < 1e-12);
  CHECK(attention_mass(prof, 0, 5) == doctest::Approx(1.0));
  CHECK(attention_mass(prof, 1, 3) == doctest::Approx(0.4));
}

TEST_CASE("closed-form reweighting") {
  Rng rng(2);
  const EncoderConfig c = small(1, 2);
  EncoderParams p = init_encoder(c, rng);
  p.alpha = {0.0, std::log(3.0)};
  const EncoderForward f = encoder_forward(p, c, Matrix{{4.0, 8.0}});
  CHECK(f.cache.weighted(0, 0) == doctest::Approx(1.0));
  CHECK(f.cache.weighted(0, 1) == doctest::Approx(6.0));
}

TEST_CASE("attention at zero equals the baseline with W1 scaled by 1/T") {
  Rng rng(3);
  const EncoderConfig on = small(3, 5, true);
  const EncoderConfig off = small(3, 5, false);
  const EncoderParams p = init_encoder(on, rng);
  EncoderParams scaled = p;
  for (double& v : scaled.w1.flat()) v /= 5.0;
  const Matrix x = test::random_matrix(4, 15, rng);
  const Matrix a = encoder_forward(p, on, x).z;
  const Matrix b = encoder_forward(scaled, off, x).z;
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.flat()[i] - b.flat()[i]) < 1e-10);
}

TEST_CASE("attention is shared: scaling a sample scales its reweighted input") {
  Rng rng(4);
  const EncoderConfig c = small(2, 3);
  EncoderParams p = init_encoder(c, rng);
  p.alpha = {0.3, -1.0, 2.0};
  Matrix x = test::random_matrix(1, 6, rng);
  const Matrix w = encoder_forward(p, c, x).cache.weighted;
  for (double& v : x.flat()) v *= 2.5;
  const Matrix w2 = encoder_forward(p, c, x).cache.weighted;
  for (std::size_t i = 0; i < w.size(); ++i) CHECK(w2.flat()[i] == doctest::Approx(2.5 * w.flat()[i]));
}

TEST_CASE("batch equivariance") {
  Rng rng(5);
  const EncoderConfig c = small(2, 4);
  const EncoderParams p = init_encoder(c, rng);
  const Matrix x = test::random_matrix(4, 8, rng);
  const std::vector<std::size_t> perm{2, 3, 0, 1};
  CHECK(encoder_forward(p, c, x.gather_rows(perm)).z == encoder_forward(p, c, x).z.gather_rows(perm));
}

TEST_CASE("shape errors and stale caches") {
  Rng rng(6);
  const EncoderConfig c = small(2, 4);
  EncoderParams p = init_encoder(c, rng);
  CHECK_THROWS_AS(encoder_forward(p, c, Matrix(2, 7)), ShapeError);
  EncoderForward f = encoder_forward(p, c, test::random_matrix(2, 8, rng));
  encoder_backward(p, f.cache, Matrix(2, 4));
  CHECK_THROWS_AS(encoder_backward(p, f.cache, Matrix(2, 4)), StaleCacheError);
  EncoderForward g = encoder_forward(p, c, test::random_matrix(2, 8, rng));
  p.alpha[0] = 1.0;
  CHECK_THROWS_AS(encoder_backward(p, g.cache, Matrix(2, 4)), StaleCacheError);
}

TEST_CASE("zero upstream and dead attention") {
  Rng rng(7);
  const EncoderConfig c = small(3, 5, false);
  const EncoderParams p = init_encoder(c, rng);
  EncoderForward f = encoder_forward(p, c, test::random_matrix(3, 15, rng));
  Matrix up = test::random_matrix(3, 4, rng);
  const EncoderBackward bw = encoder_backward(p, f.cache, up);
  for (double v : bw.grads.alpha) CHECK(v == 0.0);

  EncoderForward g = encoder_forward(p, c, test::random_matrix(3, 15, rng));
  const EncoderBackward zero = encoder_backward(p, g.cache, Matrix(3, 4));
  for (double v : zero.grads.w1.flat()) CHECK(v == 0.0);
  for (double v : zero.grads.b2) CHECK(v == 0.0);
}

TEST_CASE("gradients match finite differences") {
  for (bool attention : {true, false})
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      CAPTURE(attention);
      CAPTURE(seed);
      CHECK(test::encoder_gradcheck(small(3, 5, attention), 3, seed) < 1e-5);
    }
}
