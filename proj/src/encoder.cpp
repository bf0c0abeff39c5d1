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

#include "ats/encoder.hpp"

#include <bit>
#include <cmath>

#include "ats/error.hpp"
#include "ats/kernels.hpp"

namespace ats {
namespace {

void fold(std::uint64_t& h, std::span<const double> values) {
  for (double v : values) {
    h ^= std::bit_cast<std::uint64_t>(v);
    h *= 0x100000001b3ULL;
  }
}

bool finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

void EncoderConfig::validate() const {
  if (channels < 1) throw ConfigError("encoder.channels must be >= 1");
  if (time_steps < 2) throw ConfigError("encoder.time_steps must be >= 2");
  if (hidden_dim < 1) throw ConfigError("encoder.hidden_dim must be >= 1");
  if (out_dim < 1) throw ConfigError("encoder.out_dim must be >= 1");
  if (!(layernorm_eps > 0.0)) throw ConfigError("encoder.layernorm_eps must be > 0");
}

EncoderParams EncoderParams::zeros_like() const {
  return {Vector(alpha.size(), 0.0),   Matrix(w1.rows(), w1.cols()), Vector(b1.size(), 0.0),
          Matrix(w2.rows(), w2.cols()), Vector(b2.size(), 0.0),       Vector(ln_gain.size(), 0.0),
          Vector(ln_bias.size(), 0.0)};
}

std::uint64_t EncoderParams::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fold(h, alpha);
  fold(h, w1.flat());
  fold(h, b1);
  fold(h, w2.flat());
  fold(h, b2);
  fold(h, ln_gain);
  fold(h, ln_bias);
  return h;
}

bool EncoderParams::all_finite() const {
  return finite(alpha) && w1.all_finite() && finite(b1) && w2.all_finite() && finite(b2) &&
         finite(ln_gain) && finite(ln_bias);
}

EncoderParams init_encoder(const EncoderConfig& config, Rng& rng) {
  config.validate();
  EncoderParams p;
  p.alpha.assign(config.time_steps, 0.0);
  p.w1 = glorot(config.hidden_dim, config.input_dim(), rng);
  p.b1.assign(config.hidden_dim, 0.0);
  p.w2 = glorot(config.out_dim, config.hidden_dim, rng);
  p.b2.assign(config.out_dim, 0.0);
  p.ln_gain.assign(config.out_dim, 1.0);
  p.ln_bias.assign(config.out_dim, 0.0);
  return p;
}

EncoderForward encoder_forward(const EncoderParams& params, const EncoderConfig& config,
                               const Matrix& x) {
  if (x.cols() != config.input_dim()) {
    throw ShapeError("encoder_forward: input " + x.shape_string() + " is not C*T = " +
                     std::to_string(config.channels) + "*" + std::to_string(config.time_steps));
  }
  if (params.alpha.size() != config.time_steps || params.w1.cols() != config.input_dim() ||
      params.w1.rows() != config.hidden_dim || params.w2.rows() != config.out_dim ||
      params.w2.cols() != config.hidden_dim) {
    throw ShapeError("encoder_forward: parameter shapes do not match config");
  }
  EncoderForward out;
  EncoderCache& c = out.cache;
  c.config = config;
  c.params_fingerprint = params.fingerprint();
  c.input = x;
  const std::size_t T = config.time_steps;
  if (config.use_temporal_attention) {
    c.weights = softmax(params.alpha);
    c.weighted = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto row = c.weighted.row(r);
      for (std::size_t i = 0; i < row.size(); ++i) row[i] *= c.weights[i % T];
    }
  } else {
    c.weights.assign(T, 1.0);
    c.weighted = x;
  }

  c.pre_hidden = matmul_abt(c.weighted, params.w1);
  for (std::size_t r = 0; r < c.pre_hidden.rows(); ++r) {
    auto row = c.pre_hidden.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += params.b1[j];
  }
  c.hidden = c.pre_hidden;
  for (double& v : c.hidden.flat()) v = gelu(v);

  Matrix o = matmul_abt(c.hidden, params.w2);
  for (std::size_t r = 0; r < o.rows(); ++r) {
    auto row = o.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += params.b2[j];
  }
  out.z = layer_norm_rows(o, params.ln_gain, params.ln_bias, config.layernorm_eps, &c.ln);
  return out;
}

EncoderBackward encoder_backward(const EncoderParams& params, EncoderCache& cache,
                                 const Matrix& dz) {
  if (cache.consumed) throw StaleCacheError("encoder_backward: cache already consumed");
  if (cache.params_fingerprint != params.fingerprint()) {
    throw StaleCacheError("encoder_backward: parameters changed since forward");
  }
  const EncoderConfig& cfg = cache.config;
  if (dz.rows() != cache.input.rows() || dz.cols() != cfg.out_dim) {
    throw ShapeError("encoder_backward: upstream gradient " + dz.shape_string() +
                     " does not match forward output");
  }
  cache.consumed = true;

  EncoderBackward out;
  EncoderParams& g = out.grads;
  g = params.zeros_like();

  Matrix d_o = layer_norm_rows_backward(cache.ln, params.ln_gain, dz, g.ln_gain, g.ln_bias);
  g.w2 = matmul_atb(d_o, cache.hidden);
  for (std::size_t r = 0; r < d_o.rows(); ++r) {
    auto row = d_o.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) g.b2[j] += row[j];
  }
  Matrix d_h = matmul(d_o, params.w2);
  for (std::size_t i = 0; i < d_h.size(); ++i) d_h.data()[i] *= gelu_grad(cache.pre_hidden.data()[i]);
  g.w1 = matmul_atb(d_h, cache.weighted);
  for (std::size_t r = 0; r < d_h.rows(); ++r) {
    auto row = d_h.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) g.b1[j] += row[j];
  }
  Matrix d_weighted = matmul(d_h, params.w1);

  const std::size_t T = cfg.time_steps;
  out.dx = d_weighted;
  if (cfg.use_temporal_attention) {
    Vector d_w(T, 0.0);
    for (std::size_t r = 0; r < d_weighted.rows(); ++r) {
      auto dxr = out.dx.row(r);
      auto xr = cache.input.row(r);
      for (std::size_t i = 0; i < dxr.size(); ++i) {
        d_w[i % T] += dxr[i] * xr[i];
        dxr[i] *= cache.weights[i % T];
      }
    }
    g.alpha = softmax_backward(cache.weights, d_w);
  }
  return out;
}

Vector attention_profile(const EncoderParams& params) { return softmax(params.alpha); }

double attention_mass(std::span<const double> profile, std::size_t begin, std::size_t end) {
  double m = 0.0;
  for (std::size_t t = begin; t < end && t < profile.size(); ++t) m += profile[t];
  return m;
}

}  // namespace ats
