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

#include <span>
#include <string>
#include <vector>

#include "ats/adapter.hpp"
#include "ats/encoder.hpp"
#include "ats/eval.hpp"
#include "ats/losses.hpp"
#include "ats/synthetic.hpp"

namespace ats {

// The jointly trained pieces: teacher adapter, student encoder, temperature.
struct ModelConfig {
  AdapterConfig adapter;
  EncoderConfig encoder;

  void validate() const;
};

struct ModelParams {
  AdapterParams adapter;
  EncoderParams encoder;
  TemperatureParam temperature;

  ModelParams zeros_like() const;
};

ModelParams init_model(const ModelConfig& config, std::uint64_t seed, double initial_tau);

// Named, shaped view of one parameter tensor.
struct ParamView {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::span<double> values;
  bool weight_decay = true;
};

// Fixed order; attention logits and temperature are excluded from decay.
std::vector<ParamView> param_views(ModelParams& p);

// Eval-mode embeddings.
Matrix embed_teacher(const ModelParams& p, const ModelConfig& c, const Matrix& features);
Matrix embed_student(const ModelParams& p, const ModelConfig& c, const Matrix& signals);

// Zero-shot style retrieval on one split: student queries against adapted
// teacher candidates, grouped so each task holds one sample per class.
EvalReport evaluate_split(const ModelParams& p, const ModelConfig& c, const SyntheticDataset& d,
                          Split split);

}  // namespace ats
