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

#include "iasr/error.hpp"

namespace iasr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kModeMismatch: return "ModeMismatch";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kEmptyBatch: return "EmptyBatch";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kBackendUnavailable: return "BackendUnavailable";
    case ErrorCode::kScriptExhausted: return "ScriptExhausted";
    case ErrorCode::kUnparseableResponse: return "UnparseableResponse";
    case ErrorCode::kPreconditionViolation: return "PreconditionViolation";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kMalformedManifest: return "MalformedManifest";
  }
  return "Unknown";
}

}  // namespace iasr
