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

#include <algorithm>
#include <map>

#include "ats/binary_io.hpp"
#include "ats/trainer.hpp"

namespace ats {
namespace {

constexpr std::uint16_t kCheckpointVersion = 1;

struct Block {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  Vector values;
};

void put_block(io::ByteWriter& w, const std::string& name, std::size_t rows, std::size_t cols,
               std::span<const double> values) {
  w.str(name);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(rows));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(cols));
  for (double v : values) w.put<double>(v);
}

std::size_t block_count(TrainState& s) { return 4 * param_views(s.current).size(); }

Matrix as_matrix(const Block& b) { return Matrix(b.rows, b.cols, b.values); }

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  TrainState s = ckpt.state;
  io::ByteWriter w;
  w.bytes("ATSC");
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint64_t>(ckpt.config_digest);
  w.put<std::uint64_t>(ckpt.arch_digest);
  w.str(ckpt.config_json);
  w.put<std::uint64_t>(s.step);
  w.put<std::uint64_t>(s.epoch);
  w.put<double>(s.best_val_top1);
  w.put<std::uint64_t>(s.best_epoch);
  w.put<std::uint64_t>(s.epochs_since_improvement);
  w.put<std::uint8_t>(s.stopped ? 1 : 0);

  w.put<std::uint32_t>(static_cast<std::uint32_t>(block_count(s)));
  const auto cur = param_views(s.current);
  const auto best = param_views(s.best);
  for (std::size_t i = 0; i < cur.size(); ++i) {
    put_block(w, "current/" + cur[i].name, cur[i].rows, cur[i].cols, cur[i].values);
  }
  for (std::size_t i = 0; i < best.size(); ++i) {
    put_block(w, "best/" + best[i].name, best[i].rows, best[i].cols, best[i].values);
  }
  for (std::size_t i = 0; i < cur.size(); ++i) {
    put_block(w, "adam.m/" + cur[i].name, cur[i].rows, cur[i].cols, s.moment1[i]);
  }
  for (std::size_t i = 0; i < cur.size(); ++i) {
    put_block(w, "adam.v/" + cur[i].name, cur[i].rows, cur[i].cols, s.moment2[i]);
  }
  return w.buffer();
}

Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& source) {
  io::ByteReader r(bytes, source);
  if (r.bytes(4, "magic") != "ATSC") {
    throw FormatError(FormatError::Kind::kBadMagic, source + ": not a checkpoint (bad magic)");
  }
  const auto version = r.get<std::uint16_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError(FormatError::Kind::kBadVersion,
                      source + ": unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config_digest = r.get<std::uint64_t>("config digest");
  ck.arch_digest = r.get<std::uint64_t>("arch digest");
  ck.config_json = r.str("config");
  TrainState& s = ck.state;
  s.step = r.get<std::uint64_t>("step");
  s.epoch = r.get<std::uint64_t>("epoch");
  s.best_val_top1 = r.get<double>("best val");
  s.best_epoch = r.get<std::uint64_t>("best epoch");
  s.epochs_since_improvement = r.get<std::uint64_t>("patience counter");
  s.stopped = r.get<std::uint8_t>("stopped flag") != 0;

  std::map<std::string, Block> blocks;
  const auto n = r.get<std::uint32_t>("block count");
  for (std::uint32_t i = 0; i < n; ++i) {
    Block b;
    const std::string name = r.str("block name");
    b.rows = r.get<std::uint32_t>("block rows");
    b.cols = r.get<std::uint32_t>("block cols");
    const std::uint64_t count = std::uint64_t{b.rows} * b.cols;
    if (count > r.remaining() / 8) {
      throw FormatError(FormatError::Kind::kTruncated,
                        source + ": truncated block '" + name + "': needs " +
                            std::to_string(count * 8) + " bytes, " +
                            std::to_string(r.remaining()) + " left");
    }
    b.values.resize(static_cast<std::size_t>(count));
    for (double& v : b.values) v = r.get<double>("block payload");
    blocks.emplace(name, std::move(b));
  }
  if (r.remaining() != 0) {
    throw FormatError(FormatError::Kind::kCorrupt, source + ": trailing bytes after blocks");
  }

  auto take = [&](const std::string& name) -> const Block& {
    auto it = blocks.find(name);
    if (it == blocks.end()) {
      throw FormatError(FormatError::Kind::kCorrupt, source + ": missing block '" + name + "'");
    }
    return it->second;
  };
  auto fill = [&](ModelParams& p, const std::string& prefix) {
    p.adapter.w_down = as_matrix(take(prefix + "adapter.w_down"));
    p.adapter.w_up = as_matrix(take(prefix + "adapter.w_up"));
    p.adapter.ln_gain = take(prefix + "adapter.ln_gain").values;
    p.adapter.ln_bias = take(prefix + "adapter.ln_bias").values;
    p.encoder.alpha = take(prefix + "encoder.alpha").values;
    p.encoder.w1 = as_matrix(take(prefix + "encoder.w1"));
    p.encoder.b1 = take(prefix + "encoder.b1").values;
    p.encoder.w2 = as_matrix(take(prefix + "encoder.w2"));
    p.encoder.b2 = take(prefix + "encoder.b2").values;
    p.encoder.ln_gain = take(prefix + "encoder.ln_gain").values;
    p.encoder.ln_bias = take(prefix + "encoder.ln_bias").values;
    const Block& t = take(prefix + "temperature.logit_scale");
    if (t.values.size() != 1) {
      throw FormatError(FormatError::Kind::kCorrupt, source + ": bad temperature block");
    }
    p.temperature.logit_scale = t.values[0];
  };
  fill(s.current, "current/");
  fill(s.best, "best/");
  for (const auto& view : param_views(s.current)) {
    const Block& m = take("adam.m/" + view.name);
    const Block& v = take("adam.v/" + view.name);
    if (m.values.size() != view.values.size() || v.values.size() != view.values.size()) {
      throw FormatError(FormatError::Kind::kCorrupt,
                        source + ": moment shape mismatch for '" + view.name + "'");
    }
    s.moment1.push_back(m.values);
    s.moment2.push_back(v.values);
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(io::read_file(path), path.string());
}

}  // namespace ats
