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

#include "ats/model.hpp"

#include "ats/error.hpp"

namespace ats {

void ModelConfig::validate() const {
  adapter.validate();
  encoder.validate();
  if (adapter.out_dim != encoder.out_dim) {
    throw ConfigError("adapter.out_dim (" + std::to_string(adapter.out_dim) +
                      ") must equal encoder.out_dim (" + std::to_string(encoder.out_dim) +
                      "): both map into the shared latent space");
  }
}

ModelParams ModelParams::zeros_like() const {
  return {adapter.zeros_like(), encoder.zeros_like(), TemperatureParam{0.0}};
}

ModelParams init_model(const ModelConfig& config, std::uint64_t seed, double initial_tau) {
  config.validate();
  const Rng root(seed);
  Rng arng = root.child("init-adapter");
  Rng erng = root.child("init-encoder");
  ModelParams p{init_adapter(config.adapter, arng), init_encoder(config.encoder, erng),
                TemperatureParam::from_tau(initial_tau)};
  p.temperature.clamp();
  return p;
}

std::vector<ParamView> param_views(ModelParams& p) {
  auto mat = [](std::string name, Matrix& m) {
    return ParamView{std::move(name), m.rows(), m.cols(), m.flat(), true};
  };
  auto vec = [](std::string name, Vector& v, bool decay = true) {
    return ParamView{std::move(name), v.size(), 1, std::span<double>(v), decay};
  };
  std::vector<ParamView> views;
  views.push_back(mat("adapter.w_down", p.adapter.w_down));
  views.push_back(mat("adapter.w_up", p.adapter.w_up));
  views.push_back(vec("adapter.ln_gain", p.adapter.ln_gain));
  views.push_back(vec("adapter.ln_bias", p.adapter.ln_bias));
  views.push_back(vec("encoder.alpha", p.encoder.alpha, false));
  views.push_back(mat("encoder.w1", p.encoder.w1));
  views.push_back(vec("encoder.b1", p.encoder.b1));
  views.push_back(mat("encoder.w2", p.encoder.w2));
  views.push_back(vec("encoder.b2", p.encoder.b2));
  views.push_back(vec("encoder.ln_gain", p.encoder.ln_gain));
  views.push_back(vec("encoder.ln_bias", p.encoder.ln_bias));
  views.push_back(ParamView{"temperature.logit_scale", 1, 1,
                            std::span<double>(&p.temperature.logit_scale, 1), false});
  return views;
}

Matrix embed_teacher(const ModelParams& p, const ModelConfig& c, const Matrix& features) {
  return adapter_forward(p.adapter, c.adapter, features, nullptr, false).z;
}

Matrix embed_student(const ModelParams& p, const ModelConfig& c, const Matrix& signals) {
  return encoder_forward(p.encoder, c.encoder, signals).z;
}

EvalReport evaluate_split(const ModelParams& p, const ModelConfig& c, const SyntheticDataset& d,
                          Split split) {
  const auto idx = d.indices(split);
  if (idx.empty()) throw std::invalid_argument("evaluate_split: split '" + to_string(split) + "' is empty");
  std::vector<std::size_t> local(d.size(), 0);
  for (std::size_t i = 0; i < idx.size(); ++i) local[idx[i]] = i;
  auto groups = d.retrieval_groups(split);
  for (auto& g : groups)
    for (auto& i : g) i = local[i];
  const Matrix zv = embed_teacher(p, c, d.teacher_features.gather_rows(idx));
  const Matrix zb = embed_student(p, c, d.student_signals.gather_rows(idx));
  return evaluate_groups(zb, zv, groups);
}

}  // namespace ats
