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

#include "ats/config.hpp"

#include <cstdio>
#include <set>

#include "ats/binary_io.hpp"
#include "ats/error.hpp"
#include "ats/rng.hpp"

namespace ats {
namespace {

using nlohmann::json;

// Reads keys from one JSON section and rejects anything it did not consume.
class SectionReader {
 public:
  SectionReader(const json& root, std::string name) : name_(std::move(name)) {
    if (!root.contains(name_)) return;
    obj_ = &root.at(name_);
    if (!obj_->is_object()) throw ConfigError("config section '" + name_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    consumed_.insert(key);
    if (!obj_ || !obj_->contains(key)) return;
    const json& v = obj_->at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError("");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (std::is_unsigned_v<T> && v.get<long long>() < 0)) {
          throw ConfigError("");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError("");
      }
      out = v.get<T>();
    } catch (const std::exception&) {
      throw ConfigError("config field '" + name_ + "." + key + "' has the wrong type");
    }
  }

  void read_activation(const char* key, Activation& out) {
    std::string s = to_string(out);
    read(key, s);
    try {
      out = activation_from_string(s);
    } catch (const ConfigError&) {
      throw ConfigError("config field '" + name_ + "." + key + "': unknown activation '" + s + "'");
    }
  }

  void finish() const {
    if (!obj_) return;
    for (const auto& [k, _] : obj_->items()) {
      if (!consumed_.count(k)) throw ConfigError("unknown config key '" + name_ + "." + k + "'");
    }
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::set<std::string> consumed_;
};

json gen_json(const GenConfig& g) {
  return {{"n_seen_classes", g.n_seen_classes},
          {"n_unseen_classes", g.n_unseen_classes},
          {"images_per_class", g.images_per_class},
          {"repetitions", g.repetitions},
          {"teacher_dim", g.teacher_dim},
          {"semantic_rank", g.semantic_rank},
          {"channels", g.channels},
          {"time_steps", g.time_steps},
          {"window_begin", g.window_begin},
          {"window_end", g.window_end},
          {"mixing_bandwidth", g.mixing_bandwidth},
          {"alias_strength", g.alias_strength},
          {"noise_sigma", g.noise_sigma},
          {"intra_class_jitter", g.intra_class_jitter},
          {"nuisance_scale", g.nuisance_scale},
          {"seed", g.seed}};
}

json adapter_json(const AdapterConfig& a) {
  return {{"in_dim", a.in_dim},
          {"bottleneck_dim", a.bottleneck_dim},
          {"out_dim", a.out_dim},
          {"use_residual", a.use_residual},
          {"activation", to_string(a.activation)},
          {"use_layernorm", a.use_layernorm},
          {"dropout_rate", a.dropout_rate},
          {"layernorm_eps", a.layernorm_eps}};
}

json encoder_json(const EncoderConfig& e) {
  return {{"channels", e.channels},
          {"time_steps", e.time_steps},
          {"hidden_dim", e.hidden_dim},
          {"out_dim", e.out_dim},
          {"use_temporal_attention", e.use_temporal_attention},
          {"layernorm_eps", e.layernorm_eps}};
}

json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr", t.lr},
          {"weight_decay", t.weight_decay},
          {"lr_decay_factor", t.lr_decay_factor},
          {"lr_decay_every", t.lr_decay_every},
          {"early_stop_patience", t.early_stop_patience},
          {"lambda", t.lambda},
          {"initial_tau", t.initial_tau},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"adam_eps", t.adam_eps},
          {"attention_lr_scale", t.attention_lr_scale},
          {"adapter_lr_scale", t.adapter_lr_scale},
          {"seed", t.seed}};
}

}  // namespace

void RunConfig::validate() const {
  gen.validate();
  model.validate();
  train.validate();
  if (model.adapter.in_dim != gen.teacher_dim) {
    throw ConfigError("adapter.in_dim (" + std::to_string(model.adapter.in_dim) +
                      ") must equal gen.teacher_dim (" + std::to_string(gen.teacher_dim) + ")");
  }
  if (model.encoder.channels != gen.channels || model.encoder.time_steps != gen.time_steps) {
    throw ConfigError("encoder.channels/time_steps must match gen.channels/time_steps");
  }
}

json RunConfig::to_json() const {
  return {{"gen", gen_json(gen)},
          {"adapter", adapter_json(model.adapter)},
          {"encoder", encoder_json(model.encoder)},
          {"train", train_json(train)}};
}

RunConfig apply_patch(const RunConfig& base, const json& patch) {
  if (!patch.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [k, _] : patch.items()) {
    if (k != "gen" && k != "adapter" && k != "encoder" && k != "train") {
      throw ConfigError("unknown config section '" + k + "'");
    }
  }
  RunConfig c = base;

  SectionReader g(patch, "gen");
  g.read("n_seen_classes", c.gen.n_seen_classes);
  g.read("n_unseen_classes", c.gen.n_unseen_classes);
  g.read("images_per_class", c.gen.images_per_class);
  g.read("repetitions", c.gen.repetitions);
  g.read("teacher_dim", c.gen.teacher_dim);
  g.read("semantic_rank", c.gen.semantic_rank);
  g.read("channels", c.gen.channels);
  g.read("time_steps", c.gen.time_steps);
  g.read("window_begin", c.gen.window_begin);
  g.read("window_end", c.gen.window_end);
  g.read("mixing_bandwidth", c.gen.mixing_bandwidth);
  g.read("alias_strength", c.gen.alias_strength);
  g.read("noise_sigma", c.gen.noise_sigma);
  g.read("intra_class_jitter", c.gen.intra_class_jitter);
  g.read("nuisance_scale", c.gen.nuisance_scale);
  g.read("seed", c.gen.seed);
  g.finish();

  SectionReader a(patch, "adapter");
  a.read("in_dim", c.model.adapter.in_dim);
  a.read("bottleneck_dim", c.model.adapter.bottleneck_dim);
  a.read("out_dim", c.model.adapter.out_dim);
  a.read("use_residual", c.model.adapter.use_residual);
  a.read_activation("activation", c.model.adapter.activation);
  a.read("use_layernorm", c.model.adapter.use_layernorm);
  a.read("dropout_rate", c.model.adapter.dropout_rate);
  a.read("layernorm_eps", c.model.adapter.layernorm_eps);
  a.finish();

  SectionReader e(patch, "encoder");
  e.read("channels", c.model.encoder.channels);
  e.read("time_steps", c.model.encoder.time_steps);
  e.read("hidden_dim", c.model.encoder.hidden_dim);
  e.read("out_dim", c.model.encoder.out_dim);
  e.read("use_temporal_attention", c.model.encoder.use_temporal_attention);
  e.read("layernorm_eps", c.model.encoder.layernorm_eps);
  e.finish();

  SectionReader t(patch, "train");
  t.read("epochs", c.train.epochs);
  t.read("batch_size", c.train.batch_size);
  t.read("lr", c.train.lr);
  t.read("weight_decay", c.train.weight_decay);
  t.read("lr_decay_factor", c.train.lr_decay_factor);
  t.read("lr_decay_every", c.train.lr_decay_every);
  t.read("early_stop_patience", c.train.early_stop_patience);
  t.read("lambda", c.train.lambda);
  t.read("initial_tau", c.train.initial_tau);
  t.read("beta1", c.train.beta1);
  t.read("beta2", c.train.beta2);
  t.read("adam_eps", c.train.adam_eps);
  t.read("attention_lr_scale", c.train.attention_lr_scale);
  t.read("adapter_lr_scale", c.train.adapter_lr_scale);
  t.read("seed", c.train.seed);
  t.finish();
  return c;
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c = apply_patch(desk_config(), j);
  c.validate();
  return c;
}

std::uint64_t RunConfig::digest() const { return fnv1a64(to_json().dump()); }

std::uint64_t RunConfig::arch_digest() const {
  const json j = {{"adapter", adapter_json(model.adapter)}, {"encoder", encoder_json(model.encoder)}};
  return fnv1a64(j.dump());
}

RunConfig desk_config() {
  RunConfig c;
  c.model.adapter.in_dim = c.gen.teacher_dim;
  c.model.adapter.out_dim = c.gen.teacher_dim;
  c.model.adapter.bottleneck_dim = c.gen.teacher_dim / 4;
  c.model.adapter.dropout_rate = 0.1;
  c.model.encoder.channels = c.gen.channels;
  c.model.encoder.time_steps = c.gen.time_steps;
  c.model.encoder.out_dim = c.gen.teacher_dim;
  c.train.epochs = 30;
  c.train.batch_size = 32;
  c.train.lr = 2e-3;
  c.train.attention_lr_scale = 25.0;
  c.train.adapter_lr_scale = 6.0;
  c.train.lr_decay_every = 20;
  c.train.early_stop_patience = 20;
  return c;
}

RunConfig load_run_config(const std::string& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return RunConfig::from_json(j);
}

std::string digest_hex(std::uint64_t d) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(d));
  return buf;
}

}  // namespace ats
