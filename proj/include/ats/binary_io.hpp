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

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ats/error.hpp"

namespace ats::io {

// Little-endian byte buffer writer.
class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  template <typename T>
  void put(T v) {
    static_assert(std::is_arithmetic_v<T>);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    buf_.insert(buf_.end(), raw, raw + sizeof(T));
  }
  void str(std::string_view s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  const std::string& buffer() const { return buf_; }

 private:
  std::string buf_;
};

// Bounds-checked little-endian reader; truncation raises FormatError.
class ByteReader {
 public:
  ByteReader(std::string data, std::string source)
      : data_(std::move(data)), source_(std::move(source)) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t size() const { return data_.size(); }
  std::size_t position() const { return pos_; }

  void require(std::size_t n, std::string_view what) const {
    if (remaining() < n) {
      throw FormatError(FormatError::Kind::kTruncated,
                        source_ + ": truncated " + std::string(what) + ": expected " +
                            std::to_string(pos_ + n) + " bytes, got " +
                            std::to_string(data_.size()));
    }
  }
  std::string bytes(std::size_t n, std::string_view what) {
    require(n, what);
    std::string out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  template <typename T>
  T get(std::string_view what) {
    require(sizeof(T), what);
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }
  std::string str(std::string_view what) {
    const auto n = get<std::uint32_t>(what);
    return bytes(n, what);
  }
  const std::string& source() const { return source_; }

 private:
  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ats::io
