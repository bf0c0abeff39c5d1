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

#include <cmath>

#include "ats/matrix.hpp"

namespace ats {

// Learnable temperature stored as a logit scale s, tau = exp(-s).
// s is clamped to [ln 1, ln 100], so tau stays in [0.01, 1].
struct TemperatureParam {
  static constexpr double kMinScale = 0.0;
  static inline const double kMaxScale = std::log(100.0);

  double logit_scale = std::log(1.0 / 0.07);

  static TemperatureParam from_tau(double tau) { return {std::log(1.0 / tau)}; }
  double tau() const { return std::exp(-logit_scale); }
  double scale() const { return std::exp(logit_scale); }
  void clamp();
};

struct LossOutput {
  double value = 0.0;
  double sce = 0.0;
  double consistency = 0.0;
  Matrix d_zv;
  Matrix d_zb;
  double d_scale = 0.0;  // dL/ds
};

// Symmetric in-batch contrastive loss. Rows are L2-normalized inside; the
// logits are cos(zv_i, zb_k) / tau and the loss averages the row-wise and
// column-wise cross-entropies of the diagonal:
//
//   L = -1/(2N) sum_i [ log softmax_k(S_ik)_i + log softmax_k(S_ki)_i ]
//
// Throws NumericError on a zero-norm row.
LossOutput sce_loss(const Matrix& zv, const Matrix& zb, const TemperatureParam& temp);

struct ConsistencyOutput {
  double value = 0.0;
  Matrix d_z;
};

// 1 - cos(vec(M_H), vec(M_Z)) where M_X is the self cosine-similarity
// matrix of X (diagonal included). H is treated as a constant.
ConsistencyOutput consistency_loss(const Matrix& h, const Matrix& z);

// sce_loss + lambda * consistency_loss(h, zv). With lambda == 0 the result is
// the SCE output unchanged; the consistency term is still reported.
LossOutput total_loss(const Matrix& zv, const Matrix& zb, const TemperatureParam& temp,
                      const Matrix& h, double lambda);

}  // namespace ats
