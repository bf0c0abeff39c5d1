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
#include <fstream>
#include <sstream>

#include "ats/binary_io.hpp"
#include "ats/synthetic.hpp"

namespace ats {
namespace io {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace io

namespace {

constexpr std::uint16_t kFormatVersion = 1;
// 2^31 float32 entries (8 GiB) is far beyond desk scale; larger headers are
// treated as corrupt rather than attempted.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 31;

void write_payload(io::ByteWriter& w, const Matrix& m) {
  for (double v : m.flat()) w.put<float>(static_cast<float>(v));
}

Matrix read_payload(io::ByteReader& r, std::uint32_t rows, std::uint32_t cols) {
  const std::uint64_t elements = std::uint64_t{rows} * cols;
  if (elements > kMaxElements) {
    throw FormatError(FormatError::Kind::kDimOverflow,
                      r.source() + ": dimensions " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " exceed the supported element count");
  }
  r.require(static_cast<std::size_t>(elements * 4), "payload");
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = static_cast<double>(r.get<float>("payload"));
  if (r.remaining() != 0) {
    throw FormatError(FormatError::Kind::kCorrupt,
                      r.source() + ": " + std::to_string(r.remaining()) +
                          " trailing bytes after payload");
  }
  return m;
}

void check_magic(io::ByteReader& r, std::string_view magic) {
  const std::string got = r.bytes(4, "magic");
  if (got != magic) {
    throw FormatError(FormatError::Kind::kBadMagic,
                      r.source() + ": bad magic, expected '" + std::string(magic) + "'");
  }
  const auto version = r.get<std::uint16_t>("version");
  if (version != kFormatVersion) {
    throw FormatError(FormatError::Kind::kBadVersion,
                      r.source() + ": unsupported version " + std::to_string(version));
  }
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffULL) throw IoError(std::string(what) + " does not fit in u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void save_features(const Matrix& m, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.bytes("ATSF");
  w.put<std::uint16_t>(kFormatVersion);
  w.put<std::uint32_t>(checked_u32(m.rows(), "rows"));
  w.put<std::uint32_t>(checked_u32(m.cols(), "cols"));
  write_payload(w, m);
  io::write_file(path, w.buffer());
}

Matrix load_features(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  check_magic(r, "ATSF");
  const auto rows = r.get<std::uint32_t>("rows");
  const auto cols = r.get<std::uint32_t>("cols");
  return read_payload(r, rows, cols);
}

void save_signals(const Matrix& m, std::size_t channels, std::size_t time_steps,
                  const std::filesystem::path& path) {
  if (m.cols() != channels * time_steps) {
    throw ShapeError("save_signals: width " + std::to_string(m.cols()) + " is not C*T");
  }
  io::ByteWriter w;
  w.bytes("ATSS");
  w.put<std::uint16_t>(kFormatVersion);
  w.put<std::uint32_t>(checked_u32(m.rows(), "rows"));
  w.put<std::uint32_t>(checked_u32(m.cols(), "cols"));
  w.put<std::uint32_t>(checked_u32(channels, "channels"));
  w.put<std::uint32_t>(checked_u32(time_steps, "time_steps"));
  write_payload(w, m);
  io::write_file(path, w.buffer());
}

SignalFile load_signals(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path), path.string());
  check_magic(r, "ATSS");
  const auto rows = r.get<std::uint32_t>("rows");
  const auto cols = r.get<std::uint32_t>("cols");
  const auto channels = r.get<std::uint32_t>("channels");
  const auto time_steps = r.get<std::uint32_t>("time_steps");
  if (std::uint64_t{channels} * time_steps != cols) {
    throw FormatError(FormatError::Kind::kCorrupt,
                      path.string() + ": cols " + std::to_string(cols) + " != channels*time_steps");
  }
  return {read_payload(r, rows, cols), channels, time_steps};
}

void save_bundle(const SyntheticDataset& d, const std::filesystem::path& dir) {
  d.validate();
  std::filesystem::create_directories(dir);
  save_features(d.teacher_features, dir / "features.atsf");
  save_signals(d.student_signals, d.channels, d.time_steps, dir / "signals.atss");
  std::ostringstream csv;
  csv << "index,label,split\n";
  for (std::size_t i = 0; i < d.size(); ++i) {
    csv << i << ',' << d.labels[i] << ',' << to_string(d.splits[i]) << '\n';
  }
  io::write_file(dir / "labels.csv", csv.str());
}

SyntheticDataset load_bundle(const std::filesystem::path& dir) {
  SyntheticDataset d;
  d.teacher_features = load_features(dir / "features.atsf");
  SignalFile s = load_signals(dir / "signals.atss");
  d.student_signals = std::move(s.signals);
  d.channels = s.channels;
  d.time_steps = s.time_steps;

  std::istringstream csv(io::read_file(dir / "labels.csv"));
  std::string line;
  std::getline(csv, line);
  if (line != "index,label,split") {
    throw FormatError(FormatError::Kind::kCorrupt, (dir / "labels.csv").string() + ": bad header");
  }
  std::size_t expected = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      throw FormatError(FormatError::Kind::kCorrupt, "labels.csv: malformed line '" + line + "'");
    }
    try {
      if (std::stoull(line.substr(0, a)) != expected) {
        throw FormatError(FormatError::Kind::kCorrupt, "labels.csv: indices out of order");
      }
      d.labels.push_back(std::stoi(line.substr(a + 1, b - a - 1)));
      d.splits.push_back(split_from_string(line.substr(b + 1)));
    } catch (const std::logic_error&) {
      throw FormatError(FormatError::Kind::kCorrupt, "labels.csv: malformed line '" + line + "'");
    } catch (const ConfigError&) {
      throw FormatError(FormatError::Kind::kCorrupt, "labels.csv: unknown split in '" + line + "'");
    }
    ++expected;
  }
  d.validate();
  return d;
}

}  // namespace ats
