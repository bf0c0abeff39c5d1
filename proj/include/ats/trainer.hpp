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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ats/model.hpp"
#include "ats/synthetic.hpp"

namespace ats {

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 256;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_every = 50;
  std::size_t early_stop_patience = 20;
  double lambda = 0.0;  // consistency weight
  double initial_tau = 0.07;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Multiplier on the learning rate of the attention logits only.
  double attention_lr_scale = 1.0;
  // Multiplier on the learning rate of the adapter weights.
  double adapter_lr_scale = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  // lr * factor^floor(epoch / every), epoch 0-based.
  double lr_at(std::size_t epoch) const;
};

struct AdamWOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

// One bias-corrected AdamW update of a single tensor. `step` is the 1-based
// update count. Decay is decoupled: p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p).
void adamw_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
                std::span<double> v, std::uint64_t step, const AdamWOptions& opt,
                bool apply_decay = true);

struct TrainState {
  ModelParams current;
  ModelParams best;
  std::vector<Vector> moment1;  // aligned with param_views order
  std::vector<Vector> moment2;
  std::uint64_t step = 0;
  std::size_t epoch = 0;  // completed epochs
  double best_val_top1 = -1.0;
  std::size_t best_epoch = 0;
  std::size_t epochs_since_improvement = 0;
  bool stopped = false;
};

TrainState init_train_state(const ModelConfig& model, const TrainConfig& train);

struct HistoryRow {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;
  double sce = 0.0;
  double consistency = 0.0;
  double val_top1 = 0.0;
  double tau = 0.0;
  double lr = 0.0;
};

std::string history_csv_header();
std::string history_csv_row(const HistoryRow& row);

struct TrainResult {
  TrainState state;
  std::vector<HistoryRow> history;
};

// Called after every completed epoch.
using EpochCallback = std::function<void(const TrainState&, const HistoryRow&)>;

// Joint optimization of adapter, encoder and temperature on the train split
// with per-epoch validation and early stopping. Passing `resume` continues
// from its epoch; the run is a pure function of (data, configs, resume).
// Throws NumericError on a non-finite loss.
TrainResult train(const SyntheticDataset& data, const ModelConfig& model,
                  const TrainConfig& config, std::optional<TrainState> resume = std::nullopt,
                  const EpochCallback& on_epoch = {});

// ---- checkpoint ------------------------------------------------------------
//
// "ATSC", u16 version, u64 config digest, u64 architecture digest, the run
// configuration JSON, counters, then named f64 parameter blocks for the
// current and best parameters and both Adam moments.

struct Checkpoint {
  std::string config_json;
  std::uint64_t config_digest = 0;
  std::uint64_t arch_digest = 0;
  TrainState state;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ats
