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
#include <string>
#include <vector>

#include "ats/matrix.hpp"

namespace ats {

enum class Split { kTrain, kVal, kTestUnseen };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

// Generator for paired (teacher feature, student signal, label) samples with
// an explicit fidelity gap (channel blur, temporal aliasing, sensor noise with
// repetition averaging) and semantic gap (the student only sees a rank-r
// projection of the class prototype; the teacher carries extra structure the
// student cannot observe).
struct GenConfig {
  std::size_t n_seen_classes = 64;
  std::size_t n_unseen_classes = 16;
  std::size_t images_per_class = 10;
  std::size_t repetitions = 4;
  std::size_t teacher_dim = 128;
  std::size_t semantic_rank = 16;
  std::size_t channels = 16;
  std::size_t time_steps = 100;
  std::size_t window_begin = 10;
  std::size_t window_end = 60;
  double mixing_bandwidth = 1.0;  // Gaussian channel-blur sigma, in channels
  double alias_strength = 0.3;
  double noise_sigma = 0.25;
  // Per-image teacher jitter, relative to the unit-norm prototype.
  double intra_class_jitter = 0.05;
  // Per-image teacher component orthogonal to the semantic subspace; its
  // norm is drawn uniformly from [0, 2 * nuisance_scale].
  double nuisance_scale = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t total_classes() const { return n_seen_classes + n_unseen_classes; }
};

struct SyntheticDataset {
  Matrix teacher_features;  // samples x teacher_dim, unit-norm rows
  Matrix student_signals;   // samples x (channels * time_steps), channel-major
  std::size_t channels = 0;
  std::size_t time_steps = 0;
  std::vector<int> labels;
  std::vector<Split> splits;

  std::size_t size() const { return labels.size(); }
  std::vector<std::size_t> indices(Split s) const;
  // Retrieval groups for a split: group g holds the g-th sample of every
  // class present in the split, so each group is one n-way retrieval task.
  std::vector<std::vector<std::size_t>> retrieval_groups(Split s) const;
  void validate() const;
};

// Deterministic in config.seed. Sample index = class * images_per_class + image;
// seen classes come first. The last image of every seen class is held out for
// validation; all images of unseen classes form the zero-shot test split.
// Values are rounded to float32 so a saved bundle reloads bit-exactly.
SyntheticDataset generate(const GenConfig& config);

// ---- file formats ----------------------------------------------------------
//
// Feature file: "ATSF", u16 version = 1, u32 rows, u32 cols, then rows*cols
// float32 row-major; all little-endian.
// Signal file:  "ATSS", u16 version = 1, u32 rows, u32 cols, u32 channels,
// u32 time_steps, then float32 payload; cols == channels * time_steps.
// Bundle directory: features.atsf, signals.atss, labels.csv (index,label,split).

void save_features(const Matrix& m, const std::filesystem::path& path);
Matrix load_features(const std::filesystem::path& path);

void save_signals(const Matrix& m, std::size_t channels, std::size_t time_steps,
                  const std::filesystem::path& path);
struct SignalFile {
  Matrix signals;
  std::size_t channels = 0;
  std::size_t time_steps = 0;
};
SignalFile load_signals(const std::filesystem::path& path);

void save_bundle(const SyntheticDataset& d, const std::filesystem::path& dir);
SyntheticDataset load_bundle(const std::filesystem::path& dir);

}  // namespace ats
