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

#include "ats/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "ats/error.hpp"
#include "ats/math.hpp"
#include "ats/rng.hpp"

namespace ats {
namespace {

Vector gaussian_vector(std::size_t n, double sd, Rng& rng) {
  Vector v(n);
  for (double& x : v) x = sd * rng.normal();
  return v;
}

// Rows of the result are an orthonormal basis of a random rank-r subspace.
Matrix random_orthonormal_rows(std::size_t r, std::size_t dim, Rng& rng) {
  Matrix basis(r, dim);
  for (std::size_t i = 0; i < r; ++i) {
    Vector v = gaussian_vector(dim, 1.0, rng);
    for (std::size_t j = 0; j < i; ++j) {
      const double p = dot(v, basis.row(j));
      for (std::size_t c = 0; c < dim; ++c) v[c] -= p * basis(j, c);
    }
    const double n = norm2(v);
    for (std::size_t c = 0; c < dim; ++c) basis(i, c) = v[c] / n;
  }
  return basis;
}

// Channel blur: row c of the result averages channels with Gaussian weights
// of width sigma. sigma == 0 is the identity.
Matrix channel_blur(std::size_t channels, double sigma) {
  Matrix k(channels, channels);
  for (std::size_t c = 0; c < channels; ++c) {
    if (sigma <= 0.0) {
      k(c, c) = 1.0;
      continue;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < channels; ++j) {
      const double d = static_cast<double>(c) - static_cast<double>(j);
      k(c, j) = std::exp(-0.5 * d * d / (sigma * sigma));
      total += k(c, j);
    }
    for (std::size_t j = 0; j < channels; ++j) k(c, j) /= total;
  }
  return k;
}

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

std::string to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTestUnseen: return "test-unseen";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test-unseen") return Split::kTestUnseen;
  throw ConfigError("unknown split '" + s + "'");
}

void GenConfig::validate() const {
  if (n_seen_classes < 2) throw ConfigError("gen.n_seen_classes must be >= 2");
  if (n_unseen_classes < 2) throw ConfigError("gen.n_unseen_classes must be >= 2");
  if (images_per_class < 2) throw ConfigError("gen.images_per_class must be >= 2");
  if (repetitions < 1) throw ConfigError("gen.repetitions must be >= 1");
  if (semantic_rank < 1) throw ConfigError("gen.semantic_rank must be >= 1");
  if (semantic_rank >= teacher_dim) {
    throw ConfigError("gen.semantic_rank must be < gen.teacher_dim");
  }
  if (channels < 1) throw ConfigError("gen.channels must be >= 1");
  if (time_steps < 2) throw ConfigError("gen.time_steps must be >= 2");
  if (!(window_begin < window_end && window_end <= time_steps)) {
    throw ConfigError("gen.window: need window_begin < window_end <= time_steps");
  }
  if (!(mixing_bandwidth >= 0.0)) throw ConfigError("gen.mixing_bandwidth must be >= 0");
  if (!(alias_strength >= 0.0 && alias_strength <= 1.0)) {
    throw ConfigError("gen.alias_strength must lie in [0, 1]");
  }
  if (!(noise_sigma >= 0.0)) throw ConfigError("gen.noise_sigma must be >= 0");
  if (!(intra_class_jitter >= 0.0)) throw ConfigError("gen.intra_class_jitter must be >= 0");
  if (!(nuisance_scale >= 0.0)) throw ConfigError("gen.nuisance_scale must be >= 0");
}

std::vector<std::size_t> SyntheticDataset::indices(Split s) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == s) out.push_back(i);
  return out;
}

std::vector<std::vector<std::size_t>> SyntheticDataset::retrieval_groups(Split s) const {
  std::map<int, std::size_t> seen_count;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i] != s) continue;
    const std::size_t g = seen_count[labels[i]]++;
    if (groups.size() <= g) groups.resize(g + 1);
    groups[g].push_back(i);
  }
  return groups;
}

void SyntheticDataset::validate() const {
  const std::size_t n = labels.size();
  if (splits.size() != n || teacher_features.rows() != n || student_signals.rows() != n) {
    throw FormatError(FormatError::Kind::kCorrupt,
                      "dataset: features, signals and labels disagree on sample count");
  }
  if (student_signals.cols() != channels * time_steps) {
    throw FormatError(FormatError::Kind::kCorrupt, "dataset: signal width is not C*T");
  }
}

SyntheticDataset generate(const GenConfig& cfg) {
  cfg.validate();
  const Rng root(cfg.seed);
  const std::size_t K = cfg.total_classes();
  const std::size_t M = cfg.images_per_class;
  const std::size_t D = cfg.teacher_dim;
  const std::size_t r = cfg.semantic_rank;
  const std::size_t C = cfg.channels;
  const std::size_t T = cfg.time_steps;
  const std::size_t w0 = cfg.window_begin;
  const std::size_t W = cfg.window_end - cfg.window_begin;

  Rng subspace_rng = root.child("subspace");
  const Matrix semantic = random_orthonormal_rows(r, D, subspace_rng);

  Rng loading_rng = root.child("loading");
  Matrix loading(C, r);
  for (double& v : loading.flat()) v = loading_rng.normal() / std::sqrt(static_cast<double>(r));

  // One temporal waveform per latent coordinate: a Gaussian bump at a random
  // position inside the response window.
  Rng wave_rng = root.child("waveform");
  Matrix waveform(r, W);
  for (std::size_t j = 0; j < r; ++j) {
    const double center = wave_rng.uniform(0.15, 0.85) * static_cast<double>(W);
    const double width = wave_rng.uniform(0.08, 0.2) * static_cast<double>(W);
    const double sign = wave_rng.uniform() < 0.5 ? -1.0 : 1.0;
    for (std::size_t t = 0; t < W; ++t) {
      const double d = (static_cast<double>(t) + 0.5 - center) / width;
      waveform(j, t) = sign * std::exp(-0.5 * d * d);
    }
  }
  const Matrix blur = channel_blur(C, cfg.mixing_bandwidth);

  // Prototypes and their clean (noise-free, alias-free) responses.
  Matrix prototypes(K, D);
  std::vector<Matrix> clean(K);
  const auto k_count = static_cast<std::int64_t>(K);
#pragma omp parallel for schedule(static)
  for (std::int64_t kk = 0; kk < k_count; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    // Unit-norm prototype inside the semantic subspace.
    Rng prng = root.child("prototype", k);
    const Vector coef = gaussian_vector(r, 1.0, prng);
    const double cn = norm2(coef);
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t c = 0; c < D; ++c) prototypes(k, c) += coef[j] / cn * semantic(j, c);

    Vector latent(r);
    for (std::size_t j = 0; j < r; ++j) latent[j] = dot(semantic.row(j), prototypes.row(k));

    // channel x window response before blur
    Matrix raw(C, W);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < r; ++j) {
        const double a = loading(c, j) * latent[j];
        for (std::size_t t = 0; t < W; ++t) raw(c, t) += a * waveform(j, t);
      }
    Matrix resp(C, T);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t j = 0; j < C; ++j) {
        const double b = blur(c, j);
        if (b == 0.0) continue;
        for (std::size_t t = 0; t < W; ++t) resp(c, w0 + t) += b * raw(j, t);
      }
    clean[k] = std::move(resp);
  }

  SyntheticDataset d;
  d.channels = C;
  d.time_steps = T;
  d.teacher_features = Matrix(K * M, D);
  d.student_signals = Matrix(K * M, C * T);
  d.labels.resize(K * M);
  d.splits.resize(K * M);

  const std::size_t alias_shift = W / 2;
#pragma omp parallel for schedule(static)
  for (std::int64_t kk = 0; kk < k_count; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    const bool seen = k < cfg.n_seen_classes;
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t idx = k * M + m;
      Rng srng = root.child("sample", idx);
      d.labels[idx] = static_cast<int>(k);
      d.splits[idx] = !seen ? Split::kTestUnseen : (m + 1 == M ? Split::kVal : Split::kTrain);

      // Teacher: prototype + per-image jitter + a nuisance component outside
      // the semantic subspace whose magnitude varies from image to image.
      Vector h(prototypes.row(k).begin(), prototypes.row(k).end());
      Vector jitter = gaussian_vector(D, cfg.intra_class_jitter / std::sqrt(double(D)), srng);
      Vector nuisance = gaussian_vector(D, 1.0, srng);
      for (std::size_t j = 0; j < r; ++j) {
        const double proj = dot(nuisance, semantic.row(j));
        for (std::size_t c = 0; c < D; ++c) nuisance[c] -= proj * semantic(j, c);
      }
      const double gain = cfg.nuisance_scale * srng.uniform(0.0, 2.0) / norm2(nuisance);
      for (std::size_t c = 0; c < D; ++c) h[c] += jitter[c] + gain * nuisance[c];
      const double hn = norm2(h);
      auto trow = d.teacher_features.row(idx);
      for (std::size_t c = 0; c < D; ++c) trow[c] = to_f32(h[c] / hn);

      // Student: clean response + aliased tail of the previous stimulus +
      // noise averaged over repetitions.
      const std::size_t pool_begin = seen ? 0 : cfg.n_seen_classes;
      const std::size_t pool_size = seen ? cfg.n_seen_classes : cfg.n_unseen_classes;
      const std::size_t prev = pool_begin + static_cast<std::size_t>(srng.below(pool_size));
      auto srow = d.student_signals.row(idx);
      const double noise_scale = cfg.noise_sigma / static_cast<double>(cfg.repetitions);
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t t = 0; t < T; ++t) {
          double v = clean[k](c, t);
          if (cfg.alias_strength > 0.0 && t >= w0 && t + alias_shift < cfg.window_end) {
            v += cfg.alias_strength * clean[prev](c, t + alias_shift);
          }
          double noise = 0.0;
          if (cfg.noise_sigma > 0.0) {
            for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) noise += srng.normal();
          }
          srow[c * T + t] = to_f32(v + noise_scale * noise);
        }
      }
    }
  }
  return d;
}

}  // namespace ats
