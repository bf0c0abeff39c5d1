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

#include "ats/trainer.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "ats/error.hpp"

namespace ats {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("train.batch_size must be >= 2");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (!(lr_decay_factor > 0.0)) throw ConfigError("train.lr_decay_factor must be > 0");
  if (lr_decay_every < 1) throw ConfigError("train.lr_decay_every must be >= 1");
  if (early_stop_patience < 1) throw ConfigError("train.early_stop_patience must be >= 1");
  if (!(lambda >= 0.0)) throw ConfigError("train.lambda must be >= 0");
  if (!(initial_tau >= 0.01 && initial_tau <= 1.0)) {
    throw ConfigError("train.initial_tau must lie in [0.01, 1]");
  }
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train.beta1/beta2 must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be > 0");
  if (!(attention_lr_scale > 0.0)) throw ConfigError("train.attention_lr_scale must be > 0");
  if (!(adapter_lr_scale > 0.0)) throw ConfigError("train.adapter_lr_scale must be > 0");
}

double TrainConfig::lr_at(std::size_t epoch) const {
  return lr * std::pow(lr_decay_factor, static_cast<double>(epoch / lr_decay_every));
}

void adamw_step(std::span<double> params, std::span<const double> grads, std::span<double> m,
                std::span<double> v, std::uint64_t step, const AdamWOptions& opt,
                bool apply_decay) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw ShapeError("adamw_step: params/grads/moments length mismatch");
  }
  if (step < 1) throw std::invalid_argument("adamw_step: step is 1-based");
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(opt.beta1, t);
  const double c2 = 1.0 - std::pow(opt.beta2, t);
  const double decay = apply_decay ? opt.weight_decay : 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * grads[i];
    v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * grads[i] * grads[i];
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    params[i] -= opt.lr * (mhat / (std::sqrt(vhat) + opt.eps) + decay * params[i]);
  }
}

TrainState init_train_state(const ModelConfig& model, const TrainConfig& train) {
  TrainState s;
  s.current = init_model(model, train.seed, train.initial_tau);
  s.best = s.current;
  for (const auto& view : param_views(s.current)) {
    s.moment1.emplace_back(view.values.size(), 0.0);
    s.moment2.emplace_back(view.values.size(), 0.0);
  }
  return s;
}

std::string history_csv_header() { return "epoch,loss,sce,consistency,val_top1,tau,lr"; }

std::string history_csv_row(const HistoryRow& r) {
  std::ostringstream out;
  out.precision(17);
  out << r.epoch << ',' << r.loss << ',' << r.sce << ',' << r.consistency << ',' << r.val_top1
      << ',' << r.tau << ',' << r.lr;
  return out.str();
}

namespace {

void check_state_shapes(TrainState& s, const ModelConfig& model) {
  ModelParams probe = init_model(model, 0, 0.07);
  auto want = param_views(probe);
  auto have = param_views(s.current);
  if (want.size() != have.size() || s.moment1.size() != want.size() ||
      s.moment2.size() != want.size()) {
    throw CompatibilityError("resume state does not match model configuration");
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].values.size() != have[i].values.size() ||
        s.moment1[i].size() != want[i].values.size() ||
        s.moment2[i].size() != want[i].values.size()) {
      throw CompatibilityError("resume state tensor '" + want[i].name +
                               "' does not match model configuration");
    }
  }
}

std::string loss_diagnostics(std::size_t epoch, std::size_t batch, const LossOutput& l) {
  std::ostringstream out;
  out << "non-finite loss at epoch " << epoch + 1 << ", batch " << batch << " (total=" << l.value
      << ", sce=" << l.sce << ", consistency=" << l.consistency << ")";
  return out.str();
}

}  // namespace

TrainResult train(const SyntheticDataset& data, const ModelConfig& model,
                  const TrainConfig& config, std::optional<TrainState> resume,
                  const EpochCallback& on_epoch) {
  model.validate();
  config.validate();
  data.validate();
  if (data.teacher_features.cols() != model.adapter.in_dim) {
    throw ConfigError("teacher feature width " + std::to_string(data.teacher_features.cols()) +
                      " does not match adapter.in_dim " + std::to_string(model.adapter.in_dim));
  }
  if (data.channels != model.encoder.channels || data.time_steps != model.encoder.time_steps) {
    throw ConfigError("signal shape C=" + std::to_string(data.channels) +
                      ", T=" + std::to_string(data.time_steps) + " does not match the encoder");
  }

  const auto train_idx = data.indices(Split::kTrain);
  if (train_idx.empty()) throw ConfigError("dataset has no train samples");
  if (data.indices(Split::kVal).empty()) throw ConfigError("dataset has no val samples");
  if (train_idx.size() < config.batch_size) {
    throw ConfigError("train.batch_size " + std::to_string(config.batch_size) +
                      " exceeds the train split (" + std::to_string(train_idx.size()) + ")");
  }

  TrainResult result;
  if (resume) {
    result.state = std::move(*resume);
    check_state_shapes(result.state, model);
  } else {
    result.state = init_train_state(model, config);
  }
  TrainState& st = result.state;
  const Rng root(config.seed);
  const std::size_t n_batches = train_idx.size() / config.batch_size;

  while (!st.stopped && st.epoch < config.epochs) {
    const std::size_t epoch = st.epoch;
    const double lr = config.lr_at(epoch);
    AdamWOptions opt{lr, config.beta1, config.beta2, config.adam_eps, config.weight_decay};

    std::vector<std::size_t> order = train_idx;
    Rng shuffle_rng = root.child("shuffle", epoch);
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0, sce_sum = 0.0, cons_sum = 0.0;
    std::size_t used = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      std::span<const std::size_t> batch(order.data() + b * config.batch_size, config.batch_size);
      std::set<int> classes;
      for (std::size_t i : batch) classes.insert(data.labels[i]);
      if (classes.size() < 2) continue;

      const Matrix h = data.teacher_features.gather_rows(batch);
      const Matrix x = data.student_signals.gather_rows(batch);
      Rng dropout_rng = root.child("dropout", st.step);
      AdapterForward af = adapter_forward(st.current.adapter, model.adapter, h, &dropout_rng, true);
      EncoderForward ef = encoder_forward(st.current.encoder, model.encoder, x);
      LossOutput loss = total_loss(af.z, ef.z, st.current.temperature, h, config.lambda);
      if (!std::isfinite(loss.value)) throw NumericError(loss_diagnostics(epoch, b, loss));

      ModelParams grads = st.current.zeros_like();
      grads.adapter = adapter_backward(st.current.adapter, af.cache, loss.d_zv).grads;
      grads.encoder = encoder_backward(st.current.encoder, ef.cache, loss.d_zb).grads;
      grads.temperature.logit_scale = loss.d_scale;

      ++st.step;
      auto pv = param_views(st.current);
      auto gv = param_views(grads);
      for (std::size_t i = 0; i < pv.size(); ++i) {
        AdamWOptions o = opt;
        if (pv[i].name == "encoder.alpha") o.lr *= config.attention_lr_scale;
        if (pv[i].name.rfind("adapter.", 0) == 0) o.lr *= config.adapter_lr_scale;
        adamw_step(pv[i].values, gv[i].values, st.moment1[i], st.moment2[i], st.step, o,
                   pv[i].weight_decay);
      }
      st.current.temperature.clamp();

      loss_sum += loss.value;
      sce_sum += loss.sce;
      cons_sum += loss.consistency;
      ++used;
    }
    if (used == 0) {
      throw ConfigError("epoch " + std::to_string(epoch + 1) +
                        ": no batch had two distinct classes");
    }

    const EvalReport val = evaluate_split(st.current, model, data, Split::kVal);
    st.epoch = epoch + 1;
    if (val.top1 > st.best_val_top1) {
      st.best_val_top1 = val.top1;
      st.best_epoch = st.epoch;
      st.best = st.current;
      st.epochs_since_improvement = 0;
    } else if (++st.epochs_since_improvement >= config.early_stop_patience) {
      st.stopped = true;
    }

    const double n = static_cast<double>(used);
    HistoryRow row{st.epoch, loss_sum / n, sce_sum / n, cons_sum / n,
                   val.top1, st.current.temperature.tau(), lr};
    result.history.push_back(row);
    if (on_epoch) on_epoch(st, row);
  }
  return result;
}

}  // namespace ats
