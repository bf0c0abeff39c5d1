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

#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"

#include "ats/binary_io.hpp"
#include "ats/error.hpp"
#include "ats/synthetic.hpp"
#include "helpers.hpp"

using namespace ats;
namespace fs = std::filesystem;

namespace {

GenConfig tiny() {
  GenConfig g;
  g.n_seen_classes = 6;
  g.n_unseen_classes = 3;
  g.images_per_class = 4;
  g.teacher_dim = 16;
  g.semantic_rank = 4;
  g.channels = 4;
  g.time_steps = 20;
  g.window_begin = 5;
  g.window_end = 15;
  return g;
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ats_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config validation") {
  GenConfig g = tiny();
  g.window_end = 25;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = tiny();
  g.window_begin = g.window_end;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = tiny();
  g.semantic_rank = g.teacher_dim;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = tiny();
  g.n_unseen_classes = 1;
  CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("clean limit renders only inside the window") {
  GenConfig g = tiny();
  g.noise_sigma = 0.0;
  g.alias_strength = 0.0;
  g.mixing_bandwidth = 0.0;
  g.repetitions = 1;
  const SyntheticDataset d = generate(g);
  double inside = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t c = 0; c < g.channels; ++c)
      for (std::size_t t = 0; t < g.time_steps; ++t) {
        const double v = d.student_signals(i, c * g.time_steps + t);
        if (t < g.window_begin || t >= g.window_end) {
          CHECK(v == 0.0);
        } else {
          inside += v * v;
        }
      }
  CHECK(inside > 0.0);
  // Same class, no noise: identical signals.
  CHECK(d.student_signals.row(0)[g.channels * g.time_steps / 2] ==
        d.student_signals.row(1)[g.channels * g.time_steps / 2]);
}

TEST_CASE("repetition averaging shrinks noise variance") {
  auto variance = [](std::size_t reps) {
    GenConfig g = tiny();
    g.n_seen_classes = 100;
    g.n_unseen_classes = 2;
    g.images_per_class = 10;
    g.alias_strength = 0.0;
    g.noise_sigma = 1.0;
    g.repetitions = reps;
    const SyntheticDataset d = generate(g);
    // t = 0 lies outside the window, so the entry is pure noise.
    double sq = 0.0;
    for (std::size_t i = 0; i < 1000; ++i) sq += std::pow(d.student_signals(i, 0), 2);
    return sq / 1000.0;
  };
  const double ratio = variance(1) / variance(16);
  CHECK(ratio > 16.0 * 0.7);
  CHECK(ratio < 16.0 * 1.3);
}

TEST_CASE("deterministic given the seed") {
  const SyntheticDataset a = generate(tiny());
  const SyntheticDataset b = generate(tiny());
  CHECK(a.teacher_features == b.teacher_features);
  CHECK(a.student_signals == b.student_signals);
  CHECK(a.labels == b.labels);
  GenConfig other = tiny();
  other.seed = 1;
  CHECK_FALSE(generate(other).teacher_features == a.teacher_features);
}

TEST_CASE("splits, labels and teacher geometry over random configs") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    GenConfig g = tiny();
    g.n_seen_classes = 2 + rng.below(8);
    g.n_unseen_classes = 2 + rng.below(5);
    g.images_per_class = 2 + rng.below(4);
    g.semantic_rank = 1 + rng.below(8);
    g.seed = rng.next_u64();
    const SyntheticDataset d = generate(g);
    CAPTURE(trial);

    std::set<int> train_val, unseen;
    for (std::size_t i = 0; i < d.size(); ++i) {
      (d.splits[i] == Split::kTestUnseen ? unseen : train_val).insert(d.labels[i]);
    }
    for (int l : unseen) CHECK(train_val.count(l) == 0);
    CHECK(unseen.size() == g.n_unseen_classes);
    CHECK(d.indices(Split::kVal).size() == g.n_seen_classes);

    for (std::size_t i = 0; i < d.size(); ++i) {
      CHECK(norm2(d.teacher_features.row(i)) == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(d.student_signals.all_finite());

    double within = 0.0, across = 0.0;
    std::size_t nw = 0, na = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      for (std::size_t j = i + 1; j < d.size(); ++j) {
        const double c = dot(d.teacher_features.row(i), d.teacher_features.row(j));
        if (d.labels[i] == d.labels[j]) {
          within += c;
          ++nw;
        } else {
          across += c;
          ++na;
        }
      }
    CHECK(within / nw > across / na);
  }
}

TEST_CASE("without aliasing, out-of-window energy is noise") {
  GenConfig g = tiny();
  g.n_seen_classes = 20;
  g.alias_strength = 0.0;
  g.noise_sigma = 0.2;
  g.repetitions = 4;
  const SyntheticDataset d = generate(g);
  double out_sq = 0.0;
  std::size_t out_n = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t c = 0; c < g.channels; ++c)
      for (std::size_t t = 0; t < g.time_steps; ++t) {
        if (t >= g.window_begin && t < g.window_end) continue;
        out_sq += std::pow(d.student_signals(i, c * g.time_steps + t), 2);
        ++out_n;
      }
  // Averaging R draws of N(0, sigma^2) gives variance sigma^2 / R.
  const double predicted = g.noise_sigma * g.noise_sigma / g.repetitions;
  CHECK(out_sq / out_n == doctest::Approx(predicted).epsilon(0.1));
}

TEST_CASE("retrieval groups hold one sample per class") {
  const SyntheticDataset d = generate(tiny());
  const auto groups = d.retrieval_groups(Split::kTestUnseen);
  CHECK(groups.size() == 4);
  for (const auto& g : groups) {
    CHECK(g.size() == 3);
    std::set<int> labels;
    for (std::size_t i : g) labels.insert(d.labels[i]);
    CHECK(labels.size() == 3);
  }
  CHECK(d.retrieval_groups(Split::kVal).size() == 1);
}

TEST_CASE("feature files round-trip bit-exactly") {
  const fs::path dir = temp_dir("features");
  Rng rng(5);
  Matrix m = test::random_matrix(10, 8, rng);
  for (double& v : m.flat()) v = static_cast<float>(v);
  save_features(m, dir / "m.atsf");
  CHECK(load_features(dir / "m.atsf") == m);

  save_features(Matrix(0, 8), dir / "empty.atsf");
  const Matrix e = load_features(dir / "empty.atsf");
  CHECK(e.rows() == 0);
  CHECK(e.cols() == 8);
}

TEST_CASE("feature file errors are distinct") {
  const fs::path dir = temp_dir("feature_errors");
  Matrix m(3, 2);
  save_features(m, dir / "m.atsf");
  const std::string bytes = io::read_file(dir / "m.atsf");

  io::write_file(dir / "trunc.atsf", bytes.substr(0, bytes.size() - 4));
  try {
    load_features(dir / "trunc.atsf");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatError::Kind::kTruncated);
    CHECK(std::string(e.what()).find("expected 38 bytes, got 34") != std::string::npos);
  }

  std::string magic = bytes;
  magic[0] = 'X';
  io::write_file(dir / "magic.atsf", magic);
  try {
    load_features(dir / "magic.atsf");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatError::Kind::kBadMagic);
  }

  io::ByteWriter w;
  w.bytes("ATSF");
  w.put<std::uint16_t>(1);
  w.put<std::uint32_t>(0xFFFFFFFFu);
  w.put<std::uint32_t>(0xFFFFFFFFu);
  io::write_file(dir / "huge.atsf", w.buffer());
  try {
    load_features(dir / "huge.atsf");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatError::Kind::kDimOverflow);
  }

  std::string version = bytes;
  version[4] = 9;
  io::write_file(dir / "version.atsf", version);
  try {
    load_features(dir / "version.atsf");
    FAIL("expected an error");
  } catch (const FormatError& e) {
    CHECK(e.kind() == FormatError::Kind::kBadVersion);
  }

  CHECK_THROWS_AS(load_features(dir / "missing.atsf"), IoError);
}

TEST_CASE("bundle round-trip") {
  const fs::path dir = temp_dir("bundle");
  const SyntheticDataset d = generate(tiny());
  save_bundle(d, dir);
  CHECK(fs::exists(dir / "features.atsf"));
  CHECK(fs::exists(dir / "signals.atss"));
  CHECK(io::read_file(dir / "labels.csv").rfind("index,label,split\n", 0) == 0);
  const SyntheticDataset back = load_bundle(dir);
  CHECK(back.teacher_features == d.teacher_features);
  CHECK(back.student_signals == d.student_signals);
  CHECK(back.labels == d.labels);
  CHECK(back.splits == d.splits);
  CHECK(back.channels == d.channels);
  CHECK(back.time_steps == d.time_steps);
}
