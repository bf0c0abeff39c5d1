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

#include "ats/math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ats/error.hpp"
#include "ats/kernels.hpp"

namespace ats {

double gelu(double x) { return 0.5 * x * std::erfc(-x / std::numbers::sqrt2); }

double gelu_grad(double x) {
  const double cdf = 0.5 * std::erfc(-x / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

Vector softmax(std::span<const double> v) {
  Vector out(v.size());
  if (v.empty()) return out;
  const double mx = *std::max_element(v.begin(), v.end());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    total += out[i];
  }
  for (double& o : out) o /= total;
  return out;
}

Vector softmax_backward(std::span<const double> y, std::span<const double> dy) {
  const double inner = dot(y, dy);
  Vector dx(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = y[i] * (dy[i] - inner);
  return dx;
}

Vector layer_norm(std::span<const double> x, std::span<const double> gain,
                  std::span<const double> bias, double eps, LayerNormCache* cache) {
  if (gain.size() != x.size() || bias.size() != x.size()) {
    throw ShapeError("layer_norm: length mismatch (x=" + std::to_string(x.size()) +
                     ", gain=" + std::to_string(gain.size()) +
                     ", bias=" + std::to_string(bias.size()) + ")");
  }
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv_std = 1.0 / std::sqrt(var + eps);
  Vector y(x.size());
  Vector xhat(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xhat[i] = (x[i] - mean) * inv_std;
    y[i] = gain[i] * xhat[i] + bias[i];
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = inv_std;
  }
  return y;
}

LayerNormGrads layer_norm_backward(const LayerNormCache& cache, std::span<const double> gain,
                                   std::span<const double> dy) {
  const std::size_t n = cache.xhat.size();
  LayerNormGrads g{Vector(n), Vector(n), Vector(n)};
  Vector dxhat(n);
  double sum_dxhat = 0.0;
  double sum_dxhat_xhat = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g.dgain[i] = dy[i] * cache.xhat[i];
    g.dbias[i] = dy[i];
    dxhat[i] = dy[i] * gain[i];
    sum_dxhat += dxhat[i];
    sum_dxhat_xhat += dxhat[i] * cache.xhat[i];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    g.dx[i] = cache.inv_std *
              (dxhat[i] - inv_n * sum_dxhat - cache.xhat[i] * inv_n * sum_dxhat_xhat);
  }
  return g;
}

Matrix layer_norm_rows(const Matrix& x, std::span<const double> gain,
                       std::span<const double> bias, double eps,
                       std::vector<LayerNormCache>* caches) {
  Matrix y(x.rows(), x.cols());
  if (caches) caches->assign(x.rows(), {});
  for (std::size_t r = 0; r < x.rows(); ++r) {
    Vector out = layer_norm(x.row(r), gain, bias, eps, caches ? &(*caches)[r] : nullptr);
    std::copy(out.begin(), out.end(), y.row(r).begin());
  }
  return y;
}

Matrix layer_norm_rows_backward(const std::vector<LayerNormCache>& caches,
                                std::span<const double> gain, const Matrix& dy, Vector& dgain,
                                Vector& dbias) {
  Matrix dx(dy.rows(), dy.cols());
  dgain.assign(dy.cols(), 0.0);
  dbias.assign(dy.cols(), 0.0);
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    LayerNormGrads g = layer_norm_backward(caches[r], gain, dy.row(r));
    std::copy(g.dx.begin(), g.dx.end(), dx.row(r).begin());
    for (std::size_t c = 0; c < dy.cols(); ++c) {
      dgain[c] += g.dgain[c];
      dbias[c] += g.dbias[c];
    }
  }
  return dx;
}

bool NormalizedRows::any_degenerate() const {
  return std::find(degenerate.begin(), degenerate.end(), true) != degenerate.end();
}

NormalizedRows l2_normalize_rows(const Matrix& m, double eps) {
  NormalizedRows out{m, Vector(m.rows()), std::vector<bool>(m.rows(), false)};
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double n = norm2(m.row(r));
    out.norms[r] = n;
    if (n < eps) {
      out.degenerate[r] = true;
      continue;
    }
    for (double& v : out.unit.row(r)) v /= n;
  }
  return out;
}

Matrix l2_normalize_rows_backward(const NormalizedRows& n, const Matrix& dunit) {
  Matrix dx(dunit.rows(), dunit.cols());
  for (std::size_t r = 0; r < dunit.rows(); ++r) {
    auto u = n.unit.row(r);
    auto du = dunit.row(r);
    auto out = dx.row(r);
    if (n.degenerate[r]) {
      std::copy(du.begin(), du.end(), out.begin());
      continue;
    }
    const double inner = dot(u, du);
    const double inv = 1.0 / n.norms[r];
    for (std::size_t c = 0; c < u.size(); ++c) out[c] = (du[c] - u[c] * inner) * inv;
  }
  return dx;
}

Matrix cosine_similarity_matrix(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("cosine_similarity_matrix: dimension mismatch " + a.shape_string() +
                     " vs " + b.shape_string());
  }
  return matmul_abt(l2_normalize_rows(a).unit, l2_normalize_rows(b).unit);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

Vector finite_difference_gradient(const ScalarFn& f, std::span<const double> x, double h) {
  Vector probe(x.begin(), x.end());
  Vector grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = f(probe);
    probe[i] = orig - h;
    const double fm = f(probe);
    probe[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_difference_gradient: non-finite value at coordinate " +
                         std::to_string(i));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b, double floor) {
  if (a.size() != b.size()) throw ShapeError("max_relative_error: length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double scale = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  }
  return worst;
}

}  // namespace ats
