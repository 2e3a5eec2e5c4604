// Copyright 2026 The Veil Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace veil {

enum class ErrorKind {
  kConfig,
  kInput,
  kProtocol,
  kNumeric,
  kIo,
  kNoDepth,
  kDegenerateMask,
};

const char* to_string(ErrorKind kind);

// Base for every error raised by the library. The kind is stable and
// machine-readable; what() carries the human reason.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& reason)
      : std::runtime_error(reason), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& reason) : Error(ErrorKind::kConfig, reason) {}
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& reason) : Error(ErrorKind::kInput, reason) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& reason) : Error(ErrorKind::kNumeric, reason) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& reason) : Error(ErrorKind::kIo, reason) {}
};

class NoDepthError : public Error {
 public:
  explicit NoDepthError(const std::string& reason) : Error(ErrorKind::kNoDepth, reason) {}
};

class DegenerateMaskError : public Error {
 public:
  explicit DegenerateMaskError(const std::string& reason)
      : Error(ErrorKind::kDegenerateMask, reason) {}
};

// Wire-level failure. field() names the offending part of the message
// ("magic", "version", "length", "pose arity", ...).
class ProtocolError : public Error {
 public:
  ProtocolError(std::string field, const std::string& detail)
      : Error(ErrorKind::kProtocol, field + ": " + detail), field_(std::move(field)) {}

  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

}  // namespace veil
