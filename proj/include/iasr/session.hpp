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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "iasr/agents.hpp"
#include "iasr/gateway.hpp"

namespace iasr::session {

// The role bindings a run needs. Absent roles stay nullopt.
struct BackendSet {
  std::optional<gateway::BackendBinding> asr;
  std::optional<gateway::BackendBinding> llm;
  std::optional<gateway::BackendBinding> tts;
};

// One user input: recorded speech or typed text.
using TurnInput = std::variant<gateway::AudioRef, std::string>;

struct StageLatency {
  double asr_ms = 0.0;
  double route_ms = 0.0;
  double correct_ms = 0.0;
  double total_ms = 0.0;
};

struct TurnError {
  std::string code;
  std::string message;
};

struct TurnRecord {
  int t = 0;
  TurnInput input;
  std::string hypothesis;
  std::optional<agents::RouteDecision> route;
  std::optional<agents::CorrectionResult> correction;
  std::string resulting_transcript;
  StageLatency latency;
  // Present on a failed turn; the transcript is then carried over unchanged.
  std::optional<TurnError> error;

  bool failed() const noexcept { return error.has_value(); }
};

void to_json(nlohmann::json& j, const TurnRecord& r);
void from_json(const nlohmann::json& j, TurnRecord& r);

struct SessionState {
  std::string session_id;
  std::string current_transcript;
  int turn_index = 0;
  std::vector<TurnRecord> history;
};

// Trajectory file: JSONL, one TurnRecord per line.
void write_trajectory(std::ostream& out, const std::vector<TurnRecord>& records);
std::vector<TurnRecord> read_trajectory(std::istream& in);

// The live interactive loop. New utterances are adopted as-is; corrective
// inputs go through the reasoning corrector. Steps of one session must not
// run concurrently; distinct sessions may.
class SessionEngine {
 public:
  // Throws ConfigError unless asr and llm bindings are present and valid.
  SessionEngine(gateway::Gateway& gateway, BackendSet bindings, agents::TemplateSet templates,
                agents::AgentOptions options = {});

  SessionState start_session(std::string session_id = {}) const;

  // Advances the state by exactly one turn. Backend and parse failures are
  // recorded in the returned TurnRecord rather than thrown; an empty input
  // throws PreconditionViolation.
  TurnRecord step(SessionState& state, const TurnInput& input);

  static std::vector<TurnRecord> trajectory(const SessionState& state) { return state.history; }

  const BackendSet& bindings() const noexcept { return bindings_; }

 private:
  gateway::Gateway& gateway_;
  BackendSet bindings_;
  agents::Agents agents_;
};

std::string new_session_id();

}  // namespace iasr::session
