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

#include "ats/adapter.hpp"

#include <bit>
#include <cmath>

#include "ats/error.hpp"
#include "ats/kernels.hpp"

namespace ats {
namespace {

double apply_act(Activation a, double x) {
  switch (a) {
    case Activation::kGelu: return gelu(x);
    case Activation::kRelu: return relu(x);
    case Activation::kNone: return x;
  }
  return x;
}

double act_grad(Activation a, double x) {
  switch (a) {
    case Activation::kGelu: return gelu_grad(x);
    case Activation::kRelu: return relu_grad(x);
    case Activation::kNone: return 1.0;
  }
  return 1.0;
}

void fold(std::uint64_t& h, std::span<const double> values) {
  for (double v : values) {
    h ^= std::bit_cast<std::uint64_t>(v);
    h *= 0x100000001b3ULL;
  }
}

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kGelu: return "gelu";
    case Activation::kRelu: return "relu";
    case Activation::kNone: return "none";
  }
  return "?";
}

Activation activation_from_string(const std::string& s) {
  if (s == "gelu") return Activation::kGelu;
  if (s == "relu") return Activation::kRelu;
  if (s == "none") return Activation::kNone;
  throw ConfigError("adapter.activation: unknown activation '" + s + "'");
}

void AdapterConfig::validate() const {
  if (in_dim == 0) throw ConfigError("adapter.in_dim must be >= 1");
  if (bottleneck_dim == 0) throw ConfigError("adapter.bottleneck_dim must be >= 1");
  if (out_dim == 0) throw ConfigError("adapter.out_dim must be >= 1");
  if (use_residual && out_dim != in_dim) {
    throw ConfigError("adapter.use_residual requires out_dim == in_dim (" +
                      std::to_string(out_dim) + " != " + std::to_string(in_dim) + ")");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ConfigError("adapter.dropout_rate must lie in [0, 1)");
  }
  if (!(layernorm_eps > 0.0)) throw ConfigError("adapter.layernorm_eps must be > 0");
}

double AdapterConfig::compression_ratio() const {
  return static_cast<double>(bottleneck_dim) / static_cast<double>(in_dim);
}

std::size_t AdapterConfig::parameter_count() const {
  return in_dim * bottleneck_dim + bottleneck_dim * out_dim + (use_layernorm ? 2 * out_dim : 0);
}

AdapterParams AdapterParams::zeros_like() const {
  return {Matrix(w_down.rows(), w_down.cols()), Matrix(w_up.rows(), w_up.cols()),
          Vector(ln_gain.size(), 0.0), Vector(ln_bias.size(), 0.0)};
}

std::uint64_t AdapterParams::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fold(h, w_down.flat());
  fold(h, w_up.flat());
  fold(h, ln_gain);
  fold(h, ln_bias);
  return h;
}

bool AdapterParams::all_finite() const {
  auto finite = [](const Vector& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return w_down.all_finite() && w_up.all_finite() && finite(ln_gain) && finite(ln_bias);
}

AdapterParams init_adapter(const AdapterConfig& config, Rng& rng) {
  config.validate();
  AdapterParams p;
  p.w_down = glorot(config.bottleneck_dim, config.in_dim, rng);
  p.w_up = glorot(config.out_dim, config.bottleneck_dim, rng);
  if (config.use_layernorm) {
    p.ln_gain.assign(config.out_dim, 1.0);
    p.ln_bias.assign(config.out_dim, 0.0);
  }
  return p;
}

AdapterForward adapter_forward(const AdapterParams& params, const AdapterConfig& config,
                               const Matrix& h, Rng* dropout_rng, bool train_mode) {
  if (h.cols() != config.in_dim) {
    throw ShapeError("adapter_forward: input " + h.shape_string() + " does not match in_dim " +
                     std::to_string(config.in_dim));
  }
  if (params.w_down.rows() != config.bottleneck_dim || params.w_down.cols() != config.in_dim ||
      params.w_up.rows() != config.out_dim || params.w_up.cols() != config.bottleneck_dim) {
    throw ShapeError("adapter_forward: parameter shapes do not match config");
  }
  const bool dropout = train_mode && config.dropout_rate > 0.0;
  if (dropout && dropout_rng == nullptr) {
    throw std::invalid_argument("adapter_forward: train-mode dropout requires an rng");
  }

  AdapterForward out;
  AdapterCache& c = out.cache;
  c.config = config;
  c.params_fingerprint = params.fingerprint();
  c.input = h;
  c.pre_act = matmul_abt(h, params.w_down);
  c.act = c.pre_act;
  for (double& v : c.act.flat()) v = apply_act(config.activation, v);

  Matrix z = matmul_abt(c.act, params.w_up);
  if (config.use_layernorm) {
    z = layer_norm_rows(z, params.ln_gain, params.ln_bias, config.layernorm_eps, &c.ln);
  }
  if (dropout) {
    const double keep = 1.0 - config.dropout_rate;
    c.dropout_mask = Matrix(z.rows(), z.cols());
    for (double& m : c.dropout_mask.flat()) m = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] *= c.dropout_mask.data()[i];
  }
  if (config.use_residual) {
    for (std::size_t i = 0; i < z.size(); ++i) z.data()[i] += h.data()[i];
  }
  out.z = std::move(z);
  return out;
}

AdapterBackward adapter_backward(const AdapterParams& params, AdapterCache& cache,
                                 const Matrix& dz) {
  if (cache.consumed) throw StaleCacheError("adapter_backward: cache already consumed");
  if (cache.params_fingerprint != params.fingerprint()) {
    throw StaleCacheError("adapter_backward: parameters changed since forward");
  }
  const AdapterConfig& cfg = cache.config;
  if (dz.rows() != cache.input.rows() || dz.cols() != cfg.out_dim) {
    throw ShapeError("adapter_backward: upstream gradient " + dz.shape_string() +
                     " does not match forward output");
  }
  cache.consumed = true;

  AdapterBackward out;
  out.grads = params.zeros_like();

  Matrix d = dz;
  if (!cache.dropout_mask.empty()) {
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] *= cache.dropout_mask.data()[i];
  }
  if (cfg.use_layernorm) {
    d = layer_norm_rows_backward(cache.ln, params.ln_gain, d, out.grads.ln_gain,
                                 out.grads.ln_bias);
  }
  // d is now dL/d(up-projection output).
  out.grads.w_up = matmul_atb(d, cache.act);
  Matrix dact = matmul(d, params.w_up);
  for (std::size_t i = 0; i < dact.size(); ++i) {
    dact.data()[i] *= act_grad(cfg.activation, cache.pre_act.data()[i]);
  }
  out.grads.w_down = matmul_atb(dact, cache.input);
  out.dh = matmul(dact, params.w_down);
  if (cfg.use_residual) {
    for (std::size_t i = 0; i < out.dh.size(); ++i) out.dh.data()[i] += dz.data()[i];
  }
  return out;
}

}  // namespace ats
