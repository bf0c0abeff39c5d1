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
#include <span>
#include <vector>

#include "ats/matrix.hpp"

namespace ats {

// ---- activations -----------------------------------------------------------

// Exact-erf GELU: x * Phi(x).
double gelu(double x);
// d/dx gelu = Phi(x) + x * phi(x).
double gelu_grad(double x);
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

// Max-subtracted softmax.
Vector softmax(std::span<const double> v);
// Given y = softmax(x) and dL/dy, returns dL/dx = y * (dy - <y, dy>).
Vector softmax_backward(std::span<const double> y, std::span<const double> dy);

// ---- layer norm ------------------------------------------------------------

struct LayerNormCache {
  Vector xhat;
  double inv_std = 0.0;
};

// y = gain * (x - mean) / sqrt(var + eps) + bias, biased variance.
Vector layer_norm(std::span<const double> x, std::span<const double> gain,
                  std::span<const double> bias, double eps, LayerNormCache* cache = nullptr);

struct LayerNormGrads {
  Vector dx;
  Vector dgain;
  Vector dbias;
};

LayerNormGrads layer_norm_backward(const LayerNormCache& cache, std::span<const double> gain,
                                   std::span<const double> dy);

// Row-wise layer norm over a batch. Caches are appended per row.
Matrix layer_norm_rows(const Matrix& x, std::span<const double> gain,
                       std::span<const double> bias, double eps,
                       std::vector<LayerNormCache>* caches = nullptr);

// Accumulates dgain/dbias over rows and returns dx.
Matrix layer_norm_rows_backward(const std::vector<LayerNormCache>& caches,
                                std::span<const double> gain, const Matrix& dy, Vector& dgain,
                                Vector& dbias);

// ---- normalization and similarity ------------------------------------------

struct NormalizedRows {
  Matrix unit;                    // rows scaled to unit norm
  Vector norms;                   // original Euclidean row norms
  std::vector<bool> degenerate;   // norm < eps; such rows are passed through unchanged
  bool any_degenerate() const;
};

NormalizedRows l2_normalize_rows(const Matrix& m, double eps = 1e-12);

// Back-propagates through row normalization: dx = (du - u <u, du>) / |x|.
Matrix l2_normalize_rows_backward(const NormalizedRows& n, const Matrix& dunit);

// (i, j) = cosine(a_i, b_j).
Matrix cosine_similarity_matrix(const Matrix& a, const Matrix& b);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

// ---- gradient oracle -------------------------------------------------------

using ScalarFn = std::function<double(std::span<const double>)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
// Throws NumericError naming the coordinate if f is non-finite.
Vector finite_difference_gradient(const ScalarFn& f, std::span<const double> x, double h = 1e-5);

// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor)
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = 1e-6);

}  // namespace ats
