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

#include "json.hpp"

#include "ats/config.hpp"
#include "ats/eval.hpp"

namespace ats {

// One grid cell: a named JSON patch applied on top of the base config.
struct ExperimentCell {
  std::string id;
  nlohmann::json patch;
};

struct ExperimentSpec {
  std::string name;
  RunConfig base;
  std::string axis;
  std::vector<ExperimentCell> cells;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  void validate() const;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string config_digest;
  EvalReport report;           // unseen split, best-validation parameters
  Vector attention;            // softmax(alpha) of the evaluated parameters
  double window_mass = 0.0;    // attention mass inside the response window
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
};

struct CellResult {
  std::string id;
  std::vector<RunRecord> runs;  // in seed order

  std::vector<double> top1_series() const;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<CellResult> cells;  // in spec order

  const CellResult& cell(const std::string& id) const;
};

// Every (cell, seed) pair is generated, trained and evaluated on the unseen
// split. Within one seed all cells share the same data and initialization
// seed, so cells differ only by their patch. `jobs` > 1 evaluates pairs on
// that many threads; results do not depend on it.
//
// A failing pair aborts the run with an ExperimentError naming the cell and
// seed; the original exception is nested inside it.
ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1);

class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Paired statistics of top-1(a) - top-1(b) over seeds. mean/sd/CI describe
// the per-seed differences; cohens_d is the pooled-SD effect size of a vs b.
RobustnessStats compare_cells(const ExperimentResult& result, const std::string& cell_a,
                              const std::string& cell_b);

// Named recipes: residual, ratio, latent, lambda, components, attention.
ExperimentSpec make_recipe(const std::string& name, const RunConfig& base,
                           std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4});
std::vector<std::string> recipe_names();

// <dir>/<name>/<cell>/<seed>/report.json, <dir>/<name>/summary.csv and
// <dir>/<name>/robustness.csv (relative to the first cell).
void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir);

std::string summary_csv(const ExperimentResult& result);
std::string robustness_csv(const ExperimentResult& result);

}  // namespace ats
