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

// ats: command-line front end for data generation, training, evaluation and
// the experiment recipes. Every command prints one JSON document to stdout;
// diagnostics go to stderr.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "ats/binary_io.hpp"
#include "ats/config.hpp"
#include "ats/error.hpp"
#include "ats/eval.hpp"
#include "ats/experiments.hpp"
#include "ats/model.hpp"
#include "ats/synthetic.hpp"
#include "ats/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCompat = 5;

const char* kExitHelp =
    "Exit codes: 0 ok, 2 configuration error, 3 I/O error, 4 numeric failure\n"
    "(non-finite loss), 5 incompatible checkpoint/config. Every command prints\n"
    "a JSON document to stdout; output files carry the config digest.";

ats::RunConfig config_or_default(const std::string& path) {
  return path.empty() ? ats::desk_config() : ats::load_run_config(path);
}

// Output directories must be new or empty unless --force.
void prepare_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw ats::IoError("'" + dir.string() + "' exists and is not a directory");
    if (!fs::is_empty(dir) && !force) {
      throw ats::IoError("'" + dir.string() + "' is not empty (use --force to overwrite)");
    }
  }
  fs::create_directories(dir);
}

std::string digest_comment(const std::string& digest) { return "# config_digest=" + digest + "\n"; }

void write_manifest(const fs::path& dir, const std::string& command, const ats::RunConfig& cfg,
                    json extra = json::object()) {
  json j = {{"command", command},
            {"config_digest", ats::digest_hex(cfg.digest())},
            {"arch_digest", ats::digest_hex(cfg.arch_digest())},
            {"config", cfg.to_json()}};
  j.update(extra);
  ats::io::write_file(dir / "manifest.json", j.dump(2) + "\n");
}

void print(const json& j) { std::cout << j.dump(2) << std::endl; }

json split_sizes(const ats::SyntheticDataset& d) {
  json j = json::object();
  for (auto s : {ats::Split::kTrain, ats::Split::kVal, ats::Split::kTestUnseen}) {
    j[ats::to_string(s)] = d.indices(s).size();
  }
  return j;
}

struct LoadedCheckpoint {
  ats::Checkpoint ckpt;
  ats::RunConfig config;
};

LoadedCheckpoint open_checkpoint(const std::string& path) {
  LoadedCheckpoint lc{ats::load_checkpoint(path), {}};
  json j;
  try {
    j = json::parse(lc.ckpt.config_json);
  } catch (const json::parse_error& e) {
    throw ats::FormatError(ats::FormatError::Kind::kCorrupt,
                           "checkpoint '" + path + "' carries invalid config JSON");
  }
  lc.config = ats::RunConfig::from_json(j);
  return lc;
}

void check_arch(const ats::RunConfig& supplied, const ats::Checkpoint& ckpt) {
  if (supplied.arch_digest() != ckpt.arch_digest) {
    throw ats::CompatibilityError("checkpoint architecture digest " +
                                  ats::digest_hex(ckpt.arch_digest) +
                                  " does not match config architecture digest " +
                                  ats::digest_hex(supplied.arch_digest()));
  }
}

// ---- commands --------------------------------------------------------------

struct GenArgs {
  std::string config;
  std::string out;
  bool force = false;
};

int cmd_gen_data(const GenArgs& a) {
  const ats::RunConfig cfg = config_or_default(a.config);
  const ats::SyntheticDataset d = ats::generate(cfg.gen);
  prepare_dir(a.out, a.force);
  ats::save_bundle(d, a.out);
  write_manifest(a.out, "gen-data", cfg);
  print({{"command", "gen-data"},
         {"out", a.out},
         {"config_digest", ats::digest_hex(cfg.digest())},
         {"classes", cfg.gen.total_classes()},
         {"seen_classes", cfg.gen.n_seen_classes},
         {"unseen_classes", cfg.gen.n_unseen_classes},
         {"samples", d.size()},
         {"splits", split_sizes(d)}});
  return kExitOk;
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string out;
  std::string resume;
  bool force = false;
};

int cmd_train(const TrainArgs& a) {
  const ats::RunConfig cfg = config_or_default(a.config);
  const ats::SyntheticDataset d = ats::load_bundle(a.data);

  std::optional<ats::TrainState> resume;
  std::vector<std::string> prior_rows;
  if (!a.resume.empty()) {
    LoadedCheckpoint lc = open_checkpoint(a.resume);
    check_arch(cfg, lc.ckpt);
    // Rows of the interrupted run, so the resumed history reads as one run.
    const fs::path prev = fs::path(a.resume).parent_path() / "history.csv";
    if (fs::exists(prev)) {
      std::istringstream in(ats::io::read_file(prev));
      std::string line;
      while (std::getline(in, line) && prior_rows.size() < lc.ckpt.state.epoch) {
        if (line.empty() || line[0] == '#' || line.rfind("epoch", 0) == 0) continue;
        prior_rows.push_back(line);
      }
    }
    resume = std::move(lc.ckpt.state);
  }
  prepare_dir(a.out, a.force);

  ats::TrainResult tr;
  try {
    tr = ats::train(d, cfg.model, cfg.train, std::move(resume));
  } catch (const ats::NumericError& e) {
    print({{"command", "train"}, {"status", "numeric_failure"}, {"diagnostics", e.what()}});
    throw;
  }

  const std::string digest = ats::digest_hex(cfg.digest());
  ats::Checkpoint ck;
  ck.config_json = cfg.to_json().dump();
  ck.config_digest = cfg.digest();
  ck.arch_digest = cfg.arch_digest();
  ck.state = tr.state;
  ats::save_checkpoint(ck, fs::path(a.out) / "checkpoint.atsc");

  std::string hist = digest_comment(digest) + ats::history_csv_header() + "\n";
  for (const auto& r : prior_rows) hist += r + "\n";
  for (const auto& r : tr.history) hist += ats::history_csv_row(r) + "\n";
  ats::io::write_file(fs::path(a.out) / "history.csv", hist);

  const ats::EvalReport val = ats::evaluate_split(tr.state.best, cfg.model, d, ats::Split::kVal);
  json rep = val.to_json();
  rep["config_digest"] = digest;
  rep["split"] = "val";
  ats::io::write_file(fs::path(a.out) / "val_report.json", rep.dump(2) + "\n");
  write_manifest(a.out, "train", cfg, {{"data", a.data}, {"resumed_from", a.resume}});

  rep.erase("ranks");
  print({{"command", "train"},
         {"out", a.out},
         {"config_digest", digest},
         {"epochs_run", tr.state.epoch},
         {"best_epoch", tr.state.best_epoch},
         {"stopped_early", tr.state.stopped},
         {"history_rows", prior_rows.size() + tr.history.size()},
         {"val", rep}});
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test-unseen";
  std::string config;
  std::string out;
  bool current = false;
};

int cmd_eval(const EvalArgs& a) {
  const ats::Split split = ats::split_from_string(a.split);
  const LoadedCheckpoint lc = open_checkpoint(a.checkpoint);
  if (!a.config.empty()) check_arch(ats::load_run_config(a.config), lc.ckpt);
  const ats::SyntheticDataset d = ats::load_bundle(a.data);
  const ats::ModelParams& p = a.current ? lc.ckpt.state.current : lc.ckpt.state.best;
  const ats::EvalReport r = ats::evaluate_split(p, lc.config.model, d, split);

  json j = r.to_json();
  j["config_digest"] = ats::digest_hex(lc.ckpt.config_digest);
  j["split"] = a.split;
  j["chance_top1"] = r.n_candidates ? 100.0 / static_cast<double>(r.n_candidates) : 0.0;
  const fs::path out = a.out.empty() ? fs::path(a.checkpoint).parent_path() /
                                           ("eval_" + a.split + ".json")
                                     : fs::path(a.out);
  ats::io::write_file(out, j.dump(2) + "\n");
  j["command"] = "eval";
  j["out"] = out.string();
  print(j);
  return kExitOk;
}

struct ExpArgs {
  std::string recipe;
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  int jobs = 1;
  bool force = false;
};

int cmd_experiment(const std::string& command, const ExpArgs& a) {
  const ats::RunConfig base = config_or_default(a.config);
  const ats::ExperimentSpec spec = ats::make_recipe(a.recipe, base, a.seeds);
  spec.validate();
  prepare_dir(fs::path(a.out) / spec.name, a.force);
  const ats::ExperimentResult res = ats::run_experiment(spec, a.jobs);
  ats::write_experiment(res, a.out);

  json cells = json::array();
  const std::string& ref = res.cells.front().id;
  for (const auto& c : res.cells) {
    json cj = {{"cell", c.id}, {"top1", c.top1_series()}};
    if (c.runs.size() >= 2) {
      const ats::RobustnessStats st = ats::robustness(c.top1_series(), {});
      cj["mean"] = st.mean;
      cj["sd"] = st.sd;
      cj["ci95"] = {st.ci_low, st.ci_high};
      if (c.id != ref) {
        const ats::RobustnessStats cmp = ats::compare_cells(res, c.id, ref);
        cj["vs_" + ref] = {{"mean_diff", cmp.mean},
                           {"ci95", {cmp.ci_low, cmp.ci_high}},
                           {"cohens_d", cmp.cohens_d}};
      }
    }
    double mass = 0.0;
    for (const auto& r : c.runs) mass += r.window_mass;
    cj["window_mass"] = mass / static_cast<double>(c.runs.size());
    cells.push_back(cj);
  }
  print({{"command", command},
         {"recipe", spec.name},
         {"axis", spec.axis},
         {"base_config_digest", ats::digest_hex(base.digest())},
         {"seeds", a.seeds},
         {"summary", (fs::path(a.out) / spec.name / "summary.csv").string()},
         {"cells", cells}});
  return kExitOk;
}

struct RsaArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "test-unseen";
  std::string out;
  bool force = false;
};

int cmd_rsa(const RsaArgs& a) {
  const ats::Split split = ats::split_from_string(a.split);
  const LoadedCheckpoint lc = open_checkpoint(a.checkpoint);
  const ats::SyntheticDataset d = ats::load_bundle(a.data);
  const auto idx = d.indices(split);
  if (idx.empty()) throw ats::ConfigError("split '" + a.split + "' is empty");
  std::vector<int> labels;
  for (auto i : idx) labels.push_back(d.labels[i]);

  const auto& p = lc.ckpt.state.best;
  const ats::Matrix raw = d.teacher_features.gather_rows(idx);
  const ats::Matrix zt = ats::embed_teacher(p, lc.config.model, raw);
  const ats::Matrix zs = ats::embed_student(p, lc.config.model, d.student_signals.gather_rows(idx));

  prepare_dir(a.out, a.force);
  const std::string digest = ats::digest_hex(lc.ckpt.config_digest);
  json result = {{"command", "rsa"}, {"out", a.out}, {"config_digest", digest}, {"split", a.split}};
  const std::pair<const char*, ats::RSM> rsms[] = {
      {"teacher_raw", ats::compute_rsm(raw, labels)},
      {"teacher_adapted", ats::compute_rsm(zt, labels)},
      {"cross_modal", ats::cross_rsm(zs, zt, labels)}};
  for (const auto& [name, rsm] : rsms) {
    ats::io::write_file(fs::path(a.out) / (std::string(name) + ".csv"),
                        digest_comment(digest) + ats::rsm_to_csv(rsm));
    const auto cat = ats::category_contrast(rsm);
    const auto cls = ats::class_contrast(rsm);
    result[name] = {{"category_within", cat.within},
                    {"category_across", cat.across},
                    {"category_margin", cat.margin()},
                    {"class_margin", cls.margin()}};
  }
  ats::io::write_file(fs::path(a.out) / "rsa.json", result.dump(2) + "\n");
  print(result);
  return kExitOk;
}

struct AttentionArgs {
  std::string checkpoint;
  std::string config;
  std::string out;
};

int cmd_export_attention(const AttentionArgs& a) {
  ats::RunConfig cfg;
  ats::Vector profile;
  std::string source;
  if (!a.checkpoint.empty()) {
    const LoadedCheckpoint lc = open_checkpoint(a.checkpoint);
    cfg = lc.config;
    profile = ats::attention_profile(lc.ckpt.state.best.encoder);
    source = "checkpoint";
  } else {
    // No checkpoint: the freshly initialized model of the config.
    cfg = config_or_default(a.config);
    profile = ats::attention_profile(
        ats::init_model(cfg.model, cfg.train.seed, cfg.train.initial_tau).encoder);
    source = "init";
  }
  const std::string digest = ats::digest_hex(cfg.digest());
  std::ostringstream csv;
  csv.precision(17);
  csv << digest_comment(digest) << "t,weight\n";
  for (std::size_t t = 0; t < profile.size(); ++t) csv << t << ',' << profile[t] << '\n';
  if (!a.out.empty()) {
    if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
    ats::io::write_file(a.out, csv.str());
  }
  const double mass = ats::attention_mass(profile, cfg.gen.window_begin, cfg.gen.window_end);
  print({{"command", "export-attention"},
         {"source", source},
         {"out", a.out},
         {"config_digest", digest},
         {"time_steps", profile.size()},
         {"window", {cfg.gen.window_begin, cfg.gen.window_end}},
         {"window_mass", mass}});
  return kExitOk;
}

// Map the library error families onto exit codes, looking through nested
// experiment errors for the original cause.
int exit_code_for(const std::exception& e) {
  if (const auto* nested = dynamic_cast<const std::nested_exception*>(&e)) {
    try {
      nested->rethrow_nested();
    } catch (const std::exception& inner) {
      return exit_code_for(inner);
    } catch (...) {
    }
  }
  if (dynamic_cast<const ats::ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const ats::ShapeError*>(&e)) return kExitConfig;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return kExitConfig;
  if (dynamic_cast<const ats::IoError*>(&e)) return kExitIo;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kExitIo;
  if (dynamic_cast<const ats::NumericError*>(&e)) return kExitNumeric;
  if (dynamic_cast<const ats::CompatibilityError*>(&e)) return kExitCompat;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Teaching System: asymmetric cross-modal alignment at desk scale", "ats"};
  app.footer(kExitHelp);
  app.require_subcommand(1);

  GenArgs gen;
  auto* sg = app.add_subcommand("gen-data", "Generate a synthetic dataset bundle");
  sg->add_option("--config", gen.config, "Run config JSON (default: built-in desk config)");
  sg->add_option("--out", gen.out, "Output directory")->required();
  sg->add_flag("--force", gen.force, "Overwrite a non-empty output directory");

  TrainArgs tr;
  auto* st = app.add_subcommand("train", "Train adapter and encoder on a dataset bundle");
  st->add_option("--config", tr.config, "Run config JSON (default: built-in desk config)");
  st->add_option("--data", tr.data, "Dataset bundle directory")->required();
  st->add_option("--out", tr.out, "Output directory")->required();
  st->add_option("--resume", tr.resume, "Continue from this checkpoint");
  st->add_flag("--force", tr.force, "Overwrite a non-empty output directory");

  EvalArgs ev;
  auto* se = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  se->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  se->add_option("--data", ev.data, "Dataset bundle directory")->required();
  se->add_option("--split", ev.split, "train | val | test-unseen")->capture_default_str();
  se->add_option("--config", ev.config, "Refuse the checkpoint unless its architecture matches");
  se->add_option("--out", ev.out, "Report path (default: next to the checkpoint)");
  se->add_flag("--current", ev.current, "Use the last parameters instead of the best");

  ExpArgs ab;
  auto* sa = app.add_subcommand("ablate", "Component ablations: residual, components, attention, lambda");
  ExpArgs sw;
  auto* ss = app.add_subcommand("sweep", "Hyperparameter sweeps: ratio, latent, lambda");
  for (auto [sub, args] : {std::pair{sa, &ab}, std::pair{ss, &sw}}) {
    sub->add_option("recipe", args->recipe, "Recipe name")->required();
    sub->add_option("--config", args->config, "Base run config JSON");
    sub->add_option("--out", args->out, "Results directory")->required();
    sub->add_option("--seeds", args->seeds, "Comma-separated seeds")->delimiter(',')->capture_default_str();
    sub->add_option("--jobs", args->jobs, "Parallel runs")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_flag("--force", args->force, "Overwrite existing results");
  }
  sa->get_option("recipe")->check(CLI::IsMember({"residual", "components", "attention", "lambda"}));
  ss->get_option("recipe")->check(CLI::IsMember({"ratio", "latent", "lambda"}));

  RsaArgs rs;
  auto* sr = app.add_subcommand("rsa", "Write teacher-raw, teacher-adapted and cross-modal RSMs");
  sr->add_option("--checkpoint", rs.checkpoint, "Checkpoint file")->required();
  sr->add_option("--data", rs.data, "Dataset bundle directory")->required();
  sr->add_option("--split", rs.split, "train | val | test-unseen")->capture_default_str();
  sr->add_option("--out", rs.out, "Output directory")->required();
  sr->add_flag("--force", rs.force, "Overwrite a non-empty output directory");

  AttentionArgs at;
  auto* sx = app.add_subcommand("export-attention", "Write the temporal attention profile as t,weight CSV");
  sx->add_option("--checkpoint", at.checkpoint, "Checkpoint file");
  sx->add_option("--config", at.config, "Config for a fresh initialization (when no checkpoint)");
  sx->add_option("--out", at.out, "CSV path");
  sx->get_option("--checkpoint")->excludes(sx->get_option("--config"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*sg) return cmd_gen_data(gen);
    if (*st) return cmd_train(tr);
    if (*se) return cmd_eval(ev);
    if (*sa) return cmd_experiment("ablate", ab);
    if (*ss) return cmd_experiment("sweep", sw);
    if (*sr) return cmd_rsa(rs);
    if (*sx) return cmd_export_attention(at);
  } catch (const std::exception& e) {
    std::cerr << "ats: error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitOk;
}
