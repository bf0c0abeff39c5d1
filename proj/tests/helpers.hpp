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

#pragma once

#include <functional>
#include <vector>

#include "ats/math.hpp"
#include "ats/matrix.hpp"
#include "ats/rng.hpp"

namespace ats::test {

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double sd = 1.0) {
  Matrix m(r, c);
  for (double& v : m.flat()) v = sd * rng.normal();
  return m;
}

// Finite-difference gradient of f with respect to the entries of `target`,
// which f reads through the reference it captured.
inline Vector numeric_grad(std::span<double> target, const std::function<double()>& f,
                           double h = 1e-5) {
  Vector x(target.begin(), target.end());
  auto wrapped = [&](std::span<const double> p) {
    std::copy(p.begin(), p.end(), target.begin());
    return f();
  };
  Vector g = finite_difference_gradient(wrapped, x, h);
  std::copy(x.begin(), x.end(), target.begin());
  return g;
}

// Random upstream gradient, used to reduce a matrix output to a scalar.
inline double weighted_sum(const Matrix& out, const Matrix& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.flat().size(); ++i) s += out.flat()[i] * w.flat()[i];
  return s;
}

}  // namespace ats::test
