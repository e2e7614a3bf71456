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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "iasr/agents.hpp"
#include "iasr/gateway.hpp"
#include "iasr/session.hpp"

namespace iasr::config {

// Everything a simulate/serve run needs, resolved from one JSON file.
//
//   {
//     "bindings": {
//       "asr": {"provider": "scripted", "script": "scenario.jsonl"},
//       "llm": {"provider": "live", "endpoint": "http://host:8000/v1/chat/completions",
//               "model": "qwen3-32b", "max_tokens": 1024},
//       "tts": {"provider": "scripted", "script": "scenario.jsonl"}
//     },
//     "templates_dir": "templates",          // optional, defaults built in
//     "normalization_profile": "default",
//     "seed": 7, "max_loops": 10, "workers": 4,
//     "judge_short_circuit": true, "parse_retries": 2,
//     "temperatures": {"route": 0, "refine": 0, "judge": 0, "user": 0.7},
//     "pinned_strategy": null,
//     "gateway": {"cache_dir": "cache", "cache_stochastic": false, "max_attempts": 3,
//                 "backoff_ms": 250, "max_in_flight": 4, "timeout_s": 120},
//     "service": {"session_ttl_s": 1800, "probe_on_create": true}
//   }
//
// Relative paths resolve against the config file's directory.
struct RunConfig {
  session::BackendSet bindings;
  agents::TemplateSet templates = agents::TemplateSet::defaults();
  agents::AgentOptions agent_options;
  gateway::GatewayOptions gateway_options;
  std::uint64_t seed = 0;
  int max_loops = 10;
  int workers = 4;
  std::optional<agents::Strategy> pinned_strategy;
  std::chrono::seconds session_ttl{30 * 60};
  bool probe_on_create = true;
};

RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
// Throws ConfigError on unreadable files, unknown keys, or invalid bindings.
RunConfig load_config(const std::filesystem::path& path);

using ScriptCache = std::map<std::string, std::shared_ptr<const gateway::ScenarioScript>>;

gateway::BackendBinding parse_binding(gateway::Role role, const nlohmann::json& j,
                                      const std::filesystem::path& base_dir,
                                      ScriptCache* cache = nullptr);

}  // namespace iasr::config
