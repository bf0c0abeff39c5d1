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
#include <string>

#include "json.hpp"

#include "ats/model.hpp"
#include "ats/synthetic.hpp"
#include "ats/trainer.hpp"

namespace ats {

// Complete description of a run. Serialized as JSON with sections
// "gen", "adapter", "encoder" and "train"; unknown keys are rejected and
// missing keys take the defaults below.
struct RunConfig {
  GenConfig gen;
  ModelConfig model;
  TrainConfig train;

  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  // FNV-1a 64 of the canonical (sorted-key, compact) JSON.
  std::uint64_t digest() const;
  // Digest of the adapter and encoder sections only.
  std::uint64_t arch_digest() const;
};

// Desk-scale defaults: the synthetic benchmark shapes plus a short,
// higher-learning-rate protocol that trains in seconds.
RunConfig desk_config();

// Patch `base` with the keys present in `patch` (same strictness rules).
RunConfig apply_patch(const RunConfig& base, const nlohmann::json& patch);

RunConfig load_run_config(const std::string& path);

std::string digest_hex(std::uint64_t d);

}  // namespace ats
