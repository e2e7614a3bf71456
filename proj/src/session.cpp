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

#include "iasr/session.hpp"

#include <chrono>
#include <istream>
#include <ostream>
#include <random>

#include "iasr/error.hpp"

namespace iasr::session {

using nlohmann::json;

namespace {

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void to_json(json& j, const TurnRecord& r) {
  json input;
  if (const auto* audio = std::get_if<gateway::AudioRef>(&r.input)) {
    input = json{{"audio", *audio}};
  } else {
    input = json{{"text", std::get<std::string>(r.input)}};
  }
  j = json{{"t", r.t},
           {"input", input},
           {"hypothesis", r.hypothesis},
           {"route", r.route ? json(*r.route) : json(nullptr)},
           {"correction", r.correction ? json(*r.correction) : json(nullptr)},
           {"resulting_transcript", r.resulting_transcript},
           {"latency",
            {{"asr_ms", r.latency.asr_ms},
             {"route_ms", r.latency.route_ms},
             {"correct_ms", r.latency.correct_ms},
             {"total_ms", r.latency.total_ms}}}};
  if (r.error) j["error"] = json{{"code", r.error->code}, {"message", r.error->message}};
}

void from_json(const json& j, TurnRecord& r) {
  r.t = j.at("t").get<int>();
  const auto& input = j.at("input");
  if (input.contains("audio")) r.input = input["audio"].get<gateway::AudioRef>();
  else r.input = input.at("text").get<std::string>();
  r.hypothesis = j.at("hypothesis").get<std::string>();
  r.route.reset();
  if (j.contains("route") && !j["route"].is_null()) r.route = j["route"].get<agents::RouteDecision>();
  r.correction.reset();
  if (j.contains("correction") && !j["correction"].is_null()) {
    r.correction = j["correction"].get<agents::CorrectionResult>();
  }
  r.resulting_transcript = j.at("resulting_transcript").get<std::string>();
  const auto& lat = j.value("latency", json::object());
  r.latency = StageLatency{lat.value("asr_ms", 0.0), lat.value("route_ms", 0.0),
                           lat.value("correct_ms", 0.0), lat.value("total_ms", 0.0)};
  r.error.reset();
  if (j.contains("error") && !j["error"].is_null()) {
    r.error = TurnError{j["error"].at("code").get<std::string>(), j["error"].value("message", "")};
  }
}

void write_trajectory(std::ostream& out, const std::vector<TurnRecord>& records) {
  for (const auto& r : records) out << json(r).dump() << '\n';
}

std::vector<TurnRecord> read_trajectory(std::istream& in) {
  std::vector<TurnRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    records.push_back(json::parse(line).get<TurnRecord>());
  }
  return records;
}

std::string new_session_id() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(rng()));
  return std::string("s-") + buf;
}

SessionEngine::SessionEngine(gateway::Gateway& gateway, BackendSet bindings,
                             agents::TemplateSet templates, agents::AgentOptions options)
    : gateway_(gateway),
      bindings_(std::move(bindings)),
      agents_(gateway, std::move(templates), std::move(options)) {
  if (!bindings_.asr) throw ConfigError("session needs an asr binding");
  if (!bindings_.llm) throw ConfigError("session needs an llm binding");
  if (bindings_.asr->role != gateway::Role::kAsr) throw ConfigError("asr binding has the wrong role");
  if (bindings_.llm->role != gateway::Role::kLlm) throw ConfigError("llm binding has the wrong role");
  bindings_.asr->validate();
  bindings_.llm->validate();
}

SessionState SessionEngine::start_session(std::string session_id) const {
  SessionState state;
  state.session_id = session_id.empty() ? new_session_id() : std::move(session_id);
  return state;
}

TurnRecord SessionEngine::step(SessionState& state, const TurnInput& input) {
  if (const auto* text = std::get_if<std::string>(&input)) {
    if (text->find_first_not_of(" \t\r\n") == std::string::npos) {
      throw PreconditionViolation("turn input text is empty");
    }
  } else if (std::get<gateway::AudioRef>(input).locator.empty()) {
    throw PreconditionViolation("turn input audio has no locator");
  }

  TurnRecord record;
  record.t = state.turn_index;
  record.input = input;
  record.resulting_transcript = state.current_transcript;

  const gateway::RequestContext ctx{state.session_id, state.turn_index, "", 0};
  const auto start = std::chrono::steady_clock::now();
  try {
    auto stage = std::chrono::steady_clock::now();
    if (const auto* audio = std::get_if<gateway::AudioRef>(&input)) {
      record.hypothesis = gateway_.transcribe(*audio, *bindings_.asr, ctx);
    } else {
      record.hypothesis = std::get<std::string>(input);
    }
    record.latency.asr_ms = ms_since(stage);

    stage = std::chrono::steady_clock::now();
    agents::RouteDecision route =
        agents_.route_intent(record.hypothesis, state.current_transcript, *bindings_.llm, ctx);
    record.latency.route_ms = ms_since(stage);

    if (route.kind == agents::RouteKind::kNewUtterance) {
      record.route = std::move(route);
      record.resulting_transcript = record.hypothesis;
    } else {
      stage = std::chrono::steady_clock::now();
      record.route = std::move(route);
      agents::CorrectionResult correction =
          agents_.correct(state.current_transcript, record.hypothesis, *bindings_.llm, ctx);
      record.latency.correct_ms = ms_since(stage);
      record.resulting_transcript = correction.corrected_text;
      record.correction = std::move(correction);
    }
  } catch (const Error& e) {
    record.error = TurnError{std::string(to_string(e.code())), e.what()};
    record.correction.reset();
    record.resulting_transcript = state.current_transcript;
  }
  record.latency.total_ms = ms_since(start);

  state.current_transcript = record.resulting_transcript;
  state.history.push_back(record);
  ++state.turn_index;
  return record;
}

}  // namespace iasr::session
