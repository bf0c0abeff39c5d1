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

#include "ats/experiments.hpp"

#include <exception>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

#include "ats/binary_io.hpp"
#include "ats/error.hpp"
#include "ats/trainer.hpp"

namespace ats {

using nlohmann::json;

void ExperimentSpec::validate() const {
  if (cells.empty()) throw ConfigError("experiment '" + name + "': grid is empty");
  if (seeds.empty()) throw ConfigError("experiment '" + name + "': no seeds");
  std::set<std::uint64_t> distinct(seeds.begin(), seeds.end());
  if (distinct.size() != seeds.size()) throw ConfigError("experiment '" + name + "': duplicate seeds");
  std::set<std::string> ids;
  for (const auto& c : cells) {
    if (!ids.insert(c.id).second) throw ConfigError("experiment '" + name + "': duplicate cell " + c.id);
    apply_patch(base, c.patch).validate();
  }
}

std::vector<double> CellResult::top1_series() const {
  std::vector<double> v;
  for (const auto& r : runs) v.push_back(r.report.top1);
  return v;
}

const CellResult& ExperimentResult::cell(const std::string& id) const {
  for (const auto& c : cells)
    if (c.id == id) return c;
  throw std::out_of_range("experiment '" + spec.name + "' has no cell '" + id + "'");
}

namespace {

RunConfig cell_config(const ExperimentSpec& spec, const ExperimentCell& cell, std::uint64_t seed) {
  RunConfig c = apply_patch(spec.base, cell.patch);
  c.gen.seed = seed;
  c.train.seed = seed;
  c.validate();
  return c;
}

RunRecord run_one(const RunConfig& cfg, const SyntheticDataset& data) {
  TrainResult tr = train(data, cfg.model, cfg.train);
  RunRecord rec;
  rec.seed = cfg.train.seed;
  rec.config_digest = digest_hex(cfg.digest());
  rec.report = evaluate_split(tr.state.best, cfg.model, data, Split::kTestUnseen);
  rec.attention = attention_profile(tr.state.best.encoder);
  rec.window_mass = attention_mass(rec.attention, cfg.gen.window_begin, cfg.gen.window_end);
  rec.epochs_run = tr.state.epoch;
  rec.best_epoch = tr.state.best_epoch;
  return rec;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs) {
  spec.validate();
  ExperimentResult result;
  result.spec = spec;
  result.cells.resize(spec.cells.size());
  for (std::size_t c = 0; c < spec.cells.size(); ++c) {
    result.cells[c].id = spec.cells[c].id;
    result.cells[c].runs.resize(spec.seeds.size());
  }

  // Datasets are shared by every cell that leaves the generator untouched.
  std::map<std::uint64_t, SyntheticDataset> datasets;
  std::mutex data_mutex;
  auto dataset_for = [&](const GenConfig& g) -> const SyntheticDataset& {
    const std::uint64_t key = fnv1a64(RunConfig{g, {}, {}}.to_json().at("gen").dump());
    std::lock_guard lock(data_mutex);
    auto it = datasets.find(key);
    if (it == datasets.end()) it = datasets.emplace(key, generate(g)).first;
    return it->second;
  };

  const std::size_t n_tasks = spec.cells.size() * spec.seeds.size();
  std::vector<std::exception_ptr> errors(n_tasks);
  const auto task_count = static_cast<std::int64_t>(n_tasks);
#pragma omp parallel for schedule(dynamic) num_threads(jobs > 0 ? jobs : 1) if (jobs > 1)
  for (std::int64_t t = 0; t < task_count; ++t) {
    const std::size_t c = static_cast<std::size_t>(t) / spec.seeds.size();
    const std::size_t s = static_cast<std::size_t>(t) % spec.seeds.size();
    try {
      const RunConfig cfg = cell_config(spec, spec.cells[c], spec.seeds[s]);
      result.cells[c].runs[s] = run_one(cfg, dataset_for(cfg.gen));
    } catch (...) {
      errors[static_cast<std::size_t>(t)] = std::current_exception();
    }
  }
  for (std::size_t t = 0; t < n_tasks; ++t) {
    if (!errors[t]) continue;
    const std::size_t c = t / spec.seeds.size();
    const std::size_t s = t % spec.seeds.size();
    std::string what = "unknown error";
    try {
      std::rethrow_exception(errors[t]);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    try {
      std::rethrow_exception(errors[t]);
    } catch (...) {
      std::throw_with_nested(ExperimentError("experiment '" + spec.name + "' cell '" +
                                             spec.cells[c].id + "' seed " +
                                             std::to_string(spec.seeds[s]) + ": " + what));
    }
  }
  return result;
}

RobustnessStats compare_cells(const ExperimentResult& result, const std::string& cell_a,
                              const std::string& cell_b) {
  const auto a = result.cell(cell_a).top1_series();
  const auto b = result.cell(cell_b).top1_series();
  if (a.size() != b.size()) throw std::invalid_argument("compare_cells: unequal seed counts");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  RobustnessStats paired = robustness(diff, {});
  const RobustnessStats effect = robustness(a, b);
  paired.cohens_d = effect.cohens_d;
  paired.zero_variance = effect.zero_variance;
  return paired;
}

std::vector<std::string> recipe_names() {
  return {"residual", "ratio", "latent", "lambda", "components", "attention"};
}

ExperimentSpec make_recipe(const std::string& name, const RunConfig& base,
                           std::vector<std::uint64_t> seeds) {
  ExperimentSpec spec;
  spec.name = name;
  spec.base = base;
  spec.seeds = std::move(seeds);
  const std::size_t d = base.model.adapter.in_dim;
  auto bottleneck = [&](std::size_t denom) {
    return json{{"adapter", {{"bottleneck_dim", std::max<std::size_t>(1, d / denom)}}}};
  };

  if (name == "residual") {
    spec.axis = "adapter.use_residual";
    spec.cells = {{"residual_off", {{"adapter", {{"use_residual", false}, {"out_dim", d}}},
                                    {"encoder", {{"out_dim", d}}}}},
                  {"residual_on", {{"adapter", {{"use_residual", true}, {"out_dim", d}}},
                                   {"encoder", {{"out_dim", d}}}}}};
  } else if (name == "ratio") {
    spec.axis = "adapter.bottleneck_dim";
    spec.cells = {{"ratio_1_1", bottleneck(1)},
                  {"ratio_1_2", bottleneck(2)},
                  {"ratio_1_4", bottleneck(4)},
                  {"ratio_1_8", bottleneck(8)}};
  } else if (name == "latent") {
    spec.axis = "adapter.out_dim";
    for (std::size_t out : {d / 4, d / 2, d, 2 * d}) {
      spec.cells.push_back({"latent_" + std::to_string(out),
                            {{"adapter", {{"out_dim", out}}}, {"encoder", {{"out_dim", out}}}}});
    }
  } else if (name == "lambda") {
    spec.axis = "train.lambda";
    spec.cells = {{"lambda_0", {{"train", {{"lambda", 0.0}}}}},
                  {"lambda_0.1", {{"train", {{"lambda", 0.1}}}}},
                  {"lambda_0.5", {{"train", {{"lambda", 0.5}}}}},
                  {"lambda_1", {{"train", {{"lambda", 1.0}}}}}};
  } else if (name == "components") {
    // The full adapter has every component switched on. Every row uses
    // out_dim == in_dim so the residual variant is well formed.
    const json full = {{"adapter",
                        {{"out_dim", d},
                         {"use_residual", false},
                         {"activation", "gelu"},
                         {"use_layernorm", true},
                         {"dropout_rate", 0.1},
                         {"bottleneck_dim", std::max<std::size_t>(1, d / 4)}}},
                       {"encoder", {{"out_dim", d}}}};
    auto with = [&](json extra) {
      json p = full;
      p["adapter"].update(extra);
      return p;
    };
    spec.axis = "adapter components";
    spec.cells = {{"full", full},
                  {"with_residual", with({{"use_residual", true}})},
                  {"gelu_to_relu", with({{"activation", "relu"}})},
                  {"no_dropout", with({{"dropout_rate", 0.0}})},
                  {"no_layernorm", with({{"use_layernorm", false}})},
                  {"no_bottleneck", with({{"bottleneck_dim", d}})}};
  } else if (name == "attention") {
    spec.axis = "encoder.use_temporal_attention";
    spec.cells = {{"stae", {{"encoder", {{"use_temporal_attention", true}}}}},
                  {"no_attention", {{"encoder", {{"use_temporal_attention", false}}}}}};
  } else {
    throw ConfigError("unknown experiment recipe '" + name + "'");
  }
  return spec;
}

std::string summary_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out.precision(10);
  out << "cell,seed,top1,top5,map,similarity,window_mass,best_epoch,epochs_run,config_digest\n";
  for (const auto& c : result.cells) {
    for (const auto& r : c.runs) {
      out << c.id << ',' << r.seed << ',' << r.report.top1 << ',' << r.report.top5 << ','
          << r.report.map << ',' << r.report.similarity << ',' << r.window_mass << ','
          << r.best_epoch << ',' << r.epochs_run << ',' << r.config_digest << '\n';
    }
  }
  return out.str();
}

std::string robustness_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out.precision(10);
  out << "cell,n,mean,sd,ci95_low,ci95_high,cohens_d_vs_" << result.cells.front().id << '\n';
  const auto ref = result.cells.front().top1_series();
  for (const auto& c : result.cells) {
    const auto series = c.top1_series();
    if (series.size() < 2) continue;
    const RobustnessStats st = robustness(series, ref);
    out << c.id << ',' << st.n << ',' << st.mean << ',' << st.sd << ',' << st.ci_low << ','
        << st.ci_high << ',' << st.cohens_d << '\n';
  }
  return out.str();
}

void write_experiment(const ExperimentResult& result, const std::filesystem::path& dir) {
  const auto root = dir / result.spec.name;
  std::filesystem::create_directories(root);
  for (const auto& c : result.cells) {
    for (const auto& r : c.runs) {
      const auto run_dir = root / c.id / std::to_string(r.seed);
      std::filesystem::create_directories(run_dir);
      json j = r.report.to_json();
      j["config_digest"] = r.config_digest;
      j["cell"] = c.id;
      j["seed"] = r.seed;
      j["window_mass"] = r.window_mass;
      j["best_epoch"] = r.best_epoch;
      j["epochs_run"] = r.epochs_run;
      io::write_file(run_dir / "report.json", j.dump(2) + "\n");
    }
  }
  io::write_file(root / "summary.csv", summary_csv(result));
  io::write_file(root / "robustness.csv", robustness_csv(result));
}

}  // namespace ats
