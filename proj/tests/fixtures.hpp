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

#include "ats/config.hpp"

namespace ats::test {

// A run small enough to train in well under a second.
inline RunConfig tiny_run() {
  RunConfig c = desk_config();
  c.gen.n_seen_classes = 8;
  c.gen.n_unseen_classes = 4;
  c.gen.images_per_class = 5;
  c.gen.teacher_dim = 16;
  c.gen.semantic_rank = 4;
  c.gen.channels = 3;
  c.gen.time_steps = 12;
  c.gen.window_begin = 2;
  c.gen.window_end = 8;
  c.model.adapter.in_dim = 16;
  c.model.adapter.bottleneck_dim = 4;
  c.model.adapter.out_dim = 8;
  c.model.adapter.use_layernorm = true;
  c.model.adapter.dropout_rate = 0.1;
  c.model.encoder.channels = 3;
  c.model.encoder.time_steps = 12;
  c.model.encoder.hidden_dim = 6;
  c.model.encoder.out_dim = 8;
  c.train.epochs = 6;
  c.train.batch_size = 8;
  c.train.lambda = 0.3;
  c.validate();
  return c;
}

}  // namespace ats::test
