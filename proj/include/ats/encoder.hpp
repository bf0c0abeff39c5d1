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
#include <vector>

#include "ats/math.hpp"
#include "ats/matrix.hpp"
#include "ats/rng.hpp"

namespace ats {

// Student-side encoder. Each input row holds one C x T signal flattened
// channel-major (index c * T + t). With temporal attention on, every channel
// is reweighted by the same softmax(alpha) over time before the projection
// head:
//
//   x' = x (*) softmax(alpha)       broadcast over channels
//   z  = LayerNorm(W2 GELU(W1 x' + b1) + b2)
//
// With attention off the reweighting is skipped, which gives the plain
// flatten-and-project baseline. Outputs are not L2-normalized.
struct EncoderConfig {
  std::size_t channels = 16;
  std::size_t time_steps = 100;
  std::size_t hidden_dim = 64;
  std::size_t out_dim = 128;
  bool use_temporal_attention = true;
  double layernorm_eps = 1e-5;

  void validate() const;
  std::size_t input_dim() const { return channels * time_steps; }
};

struct EncoderParams {
  Vector alpha;  // time_steps attention logits
  Matrix w1;     // hidden x (C*T)
  Vector b1;
  Matrix w2;     // out x hidden
  Vector b2;
  Vector ln_gain;
  Vector ln_bias;

  EncoderParams zeros_like() const;
  std::uint64_t fingerprint() const;
  bool all_finite() const;
};

// alpha = 0, Glorot-uniform weights, zero biases, LayerNorm gain 1 / bias 0.
EncoderParams init_encoder(const EncoderConfig& config, Rng& rng);

struct EncoderCache {
  EncoderConfig config;
  std::uint64_t params_fingerprint = 0;
  Matrix input;      // x
  Vector weights;    // softmax(alpha); all ones when attention is off
  Matrix weighted;   // x'
  Matrix pre_hidden; // W1 x' + b1
  Matrix hidden;     // GELU(pre_hidden)
  std::vector<LayerNormCache> ln;
  bool consumed = false;
};

struct EncoderForward {
  Matrix z;
  EncoderCache cache;
};

EncoderForward encoder_forward(const EncoderParams& params, const EncoderConfig& config,
                               const Matrix& x);

struct EncoderBackward {
  EncoderParams grads;
  Matrix dx;
};

EncoderBackward encoder_backward(const EncoderParams& params, EncoderCache& cache,
                                 const Matrix& dz);

// softmax(alpha).
Vector attention_profile(const EncoderParams& params);

// Fraction of attention mass inside [begin, end).
double attention_mass(std::span<const double> profile, std::size_t begin, std::size_t end);

}  // namespace ats
