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

// Analytic-vs-numeric gradient comparisons shared by the unit tests and the
// acceptance runner. Each function returns the worst relative error seen.

#include <algorithm>

#include "ats/adapter.hpp"
#include "ats/encoder.hpp"
#include "ats/losses.hpp"
#include "helpers.hpp"

namespace ats::test {

inline double worst(double a, std::span<const double> num, std::span<const double> ana) {
  return std::max(a, max_relative_error(num, ana));
}

inline double adapter_gradcheck(const AdapterConfig& cfg, std::size_t batch, std::uint64_t seed) {
  Rng rng(seed);
  AdapterParams p = init_adapter(cfg, rng);
  for (double& v : p.ln_gain) v = 1.0 + 0.3 * rng.normal();
  for (double& v : p.ln_bias) v = 0.3 * rng.normal();
  Matrix h = random_matrix(batch, cfg.in_dim, rng);
  const Matrix up = random_matrix(batch, cfg.out_dim, rng);

  auto f = [&] { return weighted_sum(adapter_forward(p, cfg, h, nullptr, false).z, up); };
  AdapterForward fw = adapter_forward(p, cfg, h, nullptr, false);
  const AdapterBackward bw = adapter_backward(p, fw.cache, up);

  double err = 0.0;
  err = worst(err, numeric_grad(p.w_down.flat(), f), bw.grads.w_down.flat());
  err = worst(err, numeric_grad(p.w_up.flat(), f), bw.grads.w_up.flat());
  if (cfg.use_layernorm) {
    err = worst(err, numeric_grad(p.ln_gain, f), bw.grads.ln_gain);
    err = worst(err, numeric_grad(p.ln_bias, f), bw.grads.ln_bias);
  }
  err = worst(err, numeric_grad(h.flat(), f), bw.dh.flat());
  return err;
}

inline double encoder_gradcheck(const EncoderConfig& cfg, std::size_t batch, std::uint64_t seed) {
  Rng rng(seed);
  EncoderParams p = init_encoder(cfg, rng);
  for (double& v : p.alpha) v = rng.normal();
  for (double& v : p.b1) v = 0.3 * rng.normal();
  for (double& v : p.b2) v = 0.3 * rng.normal();
  for (double& v : p.ln_gain) v = 1.0 + 0.3 * rng.normal();
  for (double& v : p.ln_bias) v = 0.3 * rng.normal();
  Matrix x = random_matrix(batch, cfg.input_dim(), rng);
  const Matrix up = random_matrix(batch, cfg.out_dim, rng);

  auto f = [&] { return weighted_sum(encoder_forward(p, cfg, x).z, up); };
  EncoderForward fw = encoder_forward(p, cfg, x);
  const EncoderBackward bw = encoder_backward(p, fw.cache, up);

  double err = 0.0;
  if (cfg.use_temporal_attention) err = worst(err, numeric_grad(p.alpha, f), bw.grads.alpha);
  err = worst(err, numeric_grad(p.w1.flat(), f), bw.grads.w1.flat());
  err = worst(err, numeric_grad(p.b1, f), bw.grads.b1);
  err = worst(err, numeric_grad(p.w2.flat(), f), bw.grads.w2.flat());
  err = worst(err, numeric_grad(p.b2, f), bw.grads.b2);
  err = worst(err, numeric_grad(p.ln_gain, f), bw.grads.ln_gain);
  err = worst(err, numeric_grad(p.ln_bias, f), bw.grads.ln_bias);
  err = worst(err, numeric_grad(x.flat(), f), bw.dx.flat());
  return err;
}

// Checks dZv, dZb and d(logit scale) of total_loss. lambda == 0 is plain SCE.
inline double loss_gradcheck(std::size_t n, std::size_t d, double lambda, std::uint64_t seed) {
  Rng rng(seed);
  Matrix zv = random_matrix(n, d, rng);
  Matrix zb = random_matrix(n, d, rng);
  const Matrix h = random_matrix(n, d + 1, rng);
  TemperatureParam temp{rng.uniform(0.5, 3.0)};

  auto f = [&] { return total_loss(zv, zb, temp, h, lambda).value; };
  const LossOutput out = total_loss(zv, zb, temp, h, lambda);
  double err = 0.0;
  err = worst(err, numeric_grad(zv.flat(), f), out.d_zv.flat());
  err = worst(err, numeric_grad(zb.flat(), f), out.d_zb.flat());
  double s = temp.logit_scale;
  const Vector ds = numeric_grad(std::span<double>(&temp.logit_scale, 1), f);
  temp.logit_scale = s;
  err = worst(err, ds, Vector{out.d_scale});
  return err;
}

inline double consistency_gradcheck(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  const Matrix h = random_matrix(n, d, rng);
  Matrix z = random_matrix(n, d, rng);
  auto f = [&] { return consistency_loss(h, z).value; };
  const ConsistencyOutput out = consistency_loss(h, z);
  return max_relative_error(numeric_grad(z.flat(), f), out.d_z.flat());
}

}  // namespace ats::test
