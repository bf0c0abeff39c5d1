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

#include <stdexcept>
#include <string>

namespace ats {

// Error taxonomy. The CLI maps each family onto an exit code:
// ConfigError -> 2, IoError/FormatError -> 3, NumericError -> 4,
// CompatibilityError -> 5. ShapeError signals a programming error.

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public IoError {
 public:
  enum class Kind { kBadMagic, kBadVersion, kTruncated, kDimOverflow, kCorrupt };
  FormatError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CompatibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StaleCacheError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace ats
