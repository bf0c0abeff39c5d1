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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ats/math.hpp"
#include "ats/matrix.hpp"
#include "ats/rng.hpp"

namespace ats {

enum class Activation { kGelu, kRelu, kNone };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& s);

// Teacher-side bottleneck adapter
//
//   z = W_up * act(W_down * h)  [-> LayerNorm] [-> dropout] [+ h]
//
// The residual-free form with GELU and no normalization is the plain
// shrink map. The toggles cover the residual baseline and the component
// ablations. Component order is fixed: down, activation, up, LayerNorm,
// dropout (train only, inverted scaling), residual add. Adding the residual
// last keeps "identity at zero weights" exact.
struct AdapterConfig {
  std::size_t in_dim = 128;
  std::size_t bottleneck_dim = 32;
  std::size_t out_dim = 128;
  bool use_residual = false;
  Activation activation = Activation::kGelu;
  bool use_layernorm = false;
  double dropout_rate = 0.0;
  double layernorm_eps = 1e-5;

  // Throws ConfigError on an inconsistent config.
  void validate() const;
  // d_bottleneck / d_in.
  double compression_ratio() const;
  std::size_t parameter_count() const;
};

struct AdapterParams {
  Matrix w_down;  // bottleneck x in
  Matrix w_up;    // out x bottleneck
  Vector ln_gain;  // empty when LayerNorm is off
  Vector ln_bias;

  // Same-shaped zero tensors.
  AdapterParams zeros_like() const;
  // Bit-level fingerprint, used to detect stale caches.
  std::uint64_t fingerprint() const;
  bool all_finite() const;
};

// Glorot-uniform weights, LayerNorm gain 1 / bias 0.
AdapterParams init_adapter(const AdapterConfig& config, Rng& rng);

struct AdapterCache {
  AdapterConfig config;
  std::uint64_t params_fingerprint = 0;
  Matrix input;        // H
  Matrix pre_act;      // H W_down^T
  Matrix act;          // act(pre_act)
  std::vector<LayerNormCache> ln;
  Matrix dropout_mask;  // scaled keep mask; empty when dropout inactive
  bool consumed = false;
};

struct AdapterForward {
  Matrix z;
  AdapterCache cache;
};

// `dropout_rng` is required only when train_mode is set and dropout_rate > 0.
AdapterForward adapter_forward(const AdapterParams& params, const AdapterConfig& config,
                               const Matrix& h, Rng* dropout_rng, bool train_mode);

struct AdapterBackward {
  AdapterParams grads;
  Matrix dh;
};

// Consumes the cache; a second call, or a call after params changed, throws
// StaleCacheError.
AdapterBackward adapter_backward(const AdapterParams& params, AdapterCache& cache,
                                 const Matrix& dz);

}  // namespace ats
