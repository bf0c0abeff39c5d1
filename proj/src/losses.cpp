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

#include "ats/losses.hpp"

#include <algorithm>
#include <string>

#include "ats/error.hpp"
#include "ats/kernels.hpp"
#include "ats/math.hpp"

namespace ats {
namespace {

NormalizedRows normalize_or_throw(const Matrix& m, const char* what) {
  NormalizedRows n = l2_normalize_rows(m);
  for (std::size_t r = 0; r < n.degenerate.size(); ++r) {
    if (n.degenerate[r]) {
      throw NumericError(std::string(what) + ": zero-norm row " + std::to_string(r));
    }
  }
  return n;
}

}  // namespace

void TemperatureParam::clamp() { logit_scale = std::clamp(logit_scale, kMinScale, kMaxScale); }

LossOutput sce_loss(const Matrix& zv, const Matrix& zb, const TemperatureParam& temp) {
  if (zv.rows() != zb.rows() || zv.cols() != zb.cols()) {
    throw ShapeError("sce_loss: shape mismatch " + zv.shape_string() + " vs " +
                     zb.shape_string());
  }
  const std::size_t n = zv.rows();
  if (n == 0) throw ShapeError("sce_loss: empty batch");

  const NormalizedRows v = normalize_or_throw(zv, "sce_loss(zv)");
  const NormalizedRows b = normalize_or_throw(zb, "sce_loss(zb)");
  const Matrix cos = matmul_abt(v.unit, b.unit);
  const double scale = temp.scale();

  Matrix logits(n, n);
  for (std::size_t i = 0; i < cos.size(); ++i) logits.data()[i] = cos.data()[i] * scale;

  // Row direction: teacher i against all students k. Column direction:
  // student i against all teachers k.
  Matrix p_row(n, n);
  Matrix p_col(n, n);
  double row_term = 0.0;
  double col_term = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Vector r(logits.row(i).begin(), logits.row(i).end());
    const double mx = *std::max_element(r.begin(), r.end());
    double total = 0.0;
    for (double x : r) total += std::exp(x - mx);
    const double lse = mx + std::log(total);
    row_term += logits(i, i) - lse;
    for (std::size_t k = 0; k < n; ++k) p_row(i, k) = std::exp(logits(i, k) - lse);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double mx = logits(0, i);
    for (std::size_t k = 1; k < n; ++k) mx = std::max(mx, logits(k, i));
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) total += std::exp(logits(k, i) - mx);
    const double lse = mx + std::log(total);
    col_term += logits(i, i) - lse;
    for (std::size_t k = 0; k < n; ++k) p_col(k, i) = std::exp(logits(k, i) - lse);
  }

  LossOutput out;
  const double inv = 1.0 / (2.0 * static_cast<double>(n));
  out.sce = -(row_term + col_term) * inv;
  out.value = out.sce;

  Matrix d_logits(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const double delta = i == k ? 2.0 : 0.0;
      d_logits(i, k) = (p_row(i, k) + p_col(i, k) - delta) * inv;
    }
  }
  double ds = 0.0;
  Matrix d_cos(n, n);
  for (std::size_t i = 0; i < d_logits.size(); ++i) {
    ds += d_logits.data()[i] * logits.data()[i];
    d_cos.data()[i] = d_logits.data()[i] * scale;
  }
  out.d_scale = ds;
  out.d_zv = l2_normalize_rows_backward(v, matmul(d_cos, b.unit));
  out.d_zb = l2_normalize_rows_backward(b, matmul_atb(d_cos, v.unit));
  return out;
}

ConsistencyOutput consistency_loss(const Matrix& h, const Matrix& z) {
  if (h.rows() != z.rows()) {
    throw ShapeError("consistency_loss: row mismatch " + h.shape_string() + " vs " +
                     z.shape_string());
  }
  if (h.rows() < 2) throw ShapeError("consistency_loss: batch size must be >= 2");

  const NormalizedRows hn = normalize_or_throw(h, "consistency_loss(h)");
  const NormalizedRows zn = normalize_or_throw(z, "consistency_loss(z)");
  const Matrix mh = matmul_abt(hn.unit, hn.unit);
  const Matrix mz = matmul_abt(zn.unit, zn.unit);

  const double inner = dot(mh.flat(), mz.flat());
  const double nh = norm2(mh.flat());
  const double nz = norm2(mz.flat());
  const double cos = inner / (nh * nz);

  ConsistencyOutput out;
  out.value = 1.0 - cos;

  // d(1 - cos)/dM_Z = -(M_H / (|M_H||M_Z|) - cos * M_Z / |M_Z|^2)
  const std::size_t n = mz.rows();
  Matrix g(n, n);
  for (std::size_t i = 0; i < g.size(); ++i) {
    g.data()[i] = -(mh.data()[i] / (nh * nz) - cos * mz.data()[i] / (nz * nz));
  }
  // M_Z = U U^T, so dU = (G + G^T) U.
  Matrix sym(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sym(i, j) = g(i, j) + g(j, i);
  out.d_z = l2_normalize_rows_backward(zn, matmul(sym, zn.unit));
  return out;
}

LossOutput total_loss(const Matrix& zv, const Matrix& zb, const TemperatureParam& temp,
                      const Matrix& h, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("total_loss: lambda must be >= 0");
  LossOutput out = sce_loss(zv, zb, temp);
  if (zv.rows() < 2) return out;
  ConsistencyOutput c = consistency_loss(h, zv);
  out.consistency = c.value;
  if (lambda == 0.0) return out;
  out.value = out.sce + lambda * c.value;
  for (std::size_t i = 0; i < out.d_zv.size(); ++i) out.d_zv.data()[i] += lambda * c.d_z.data()[i];
  return out;
}

}  // namespace ats
