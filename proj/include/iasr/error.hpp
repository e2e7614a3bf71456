// Copyright 2026 The iasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iasr {

enum class ErrorCode {
  kModeMismatch,
  kEmptyReference,
  kEmptyBatch,
  kDegenerateInput,
  kBackendUnavailable,
  kScriptExhausted,
  kUnparseableResponse,
  kPreconditionViolation,
  kConfigError,
  kMalformedManifest,
};

std::string_view to_string(ErrorCode code);

// Base of every error raised by the toolkit. Callers that need to branch on
// the failure kind use code() rather than catching subclasses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ModeMismatch : public Error {
 public:
  explicit ModeMismatch(const std::string& m) : Error(ErrorCode::kModeMismatch, m) {}
};

class EmptyReference : public Error {
 public:
  explicit EmptyReference(const std::string& m) : Error(ErrorCode::kEmptyReference, m) {}
};

class EmptyBatch : public Error {
 public:
  explicit EmptyBatch(const std::string& m) : Error(ErrorCode::kEmptyBatch, m) {}
};

class DegenerateInput : public Error {
 public:
  explicit DegenerateInput(const std::string& m) : Error(ErrorCode::kDegenerateInput, m) {}
};

class BackendUnavailable : public Error {
 public:
  explicit BackendUnavailable(const std::string& m)
      : Error(ErrorCode::kBackendUnavailable, m) {}
};

class ScriptExhausted : public Error {
 public:
  explicit ScriptExhausted(const std::string& m) : Error(ErrorCode::kScriptExhausted, m) {}
};

// Carries the last raw model output so callers can log or flag it.
class UnparseableResponse : public Error {
 public:
  UnparseableResponse(const std::string& m, std::string raw, int attempts)
      : Error(ErrorCode::kUnparseableResponse, m), raw_(std::move(raw)), attempts_(attempts) {}
  const std::string& raw_response() const noexcept { return raw_; }
  int attempts() const noexcept { return attempts_; }

 private:
  std::string raw_;
  int attempts_;
};

class PreconditionViolation : public Error {
 public:
  explicit PreconditionViolation(const std::string& m)
      : Error(ErrorCode::kPreconditionViolation, m) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& m) : Error(ErrorCode::kConfigError, m) {}
};

class MalformedManifest : public Error {
 public:
  MalformedManifest(const std::string& m, std::size_t line)
      : Error(ErrorCode::kMalformedManifest,
              "line " + std::to_string(line) + ": " + m),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace iasr
