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

#include "iasr/config.hpp"

#include <fstream>
#include <map>
#include <set>

#include "iasr/error.hpp"

namespace iasr::config {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

gateway::BackendBinding parse_binding(gateway::Role role, const json& j, const fs::path& base_dir,
                                      ScriptCache* cache) {
  const std::string where = "bindings." + std::string(gateway::to_string(role));
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown(j, {"provider", "endpoint", "model", "script", "temperature", "max_tokens"}, where);

  gateway::BackendBinding b;
  b.role = role;
  const std::string provider = j.value("provider", "");
  if (provider == "live") b.provider = gateway::ProviderKind::kLive;
  else if (provider == "scripted") b.provider = gateway::ProviderKind::kScripted;
  else throw ConfigError(where + ".provider must be 'live' or 'scripted'");
  b.endpoint = j.value("endpoint", "");
  b.model_name = j.value("model", "");
  if (j.contains("script")) {
    const std::string path = resolve(base_dir, j["script"].get<std::string>()).string();
    if (cache && cache->count(path)) {
      b.script = cache->at(path);
    } else {
      b.script = std::make_shared<const gateway::ScenarioScript>(gateway::ScenarioScript::load(path));
      if (cache) (*cache)[path] = b.script;
    }
  }
  b.sampling.temperature = j.value("temperature", 0.0);
  b.sampling.max_tokens = j.value("max_tokens", 1024);
  b.validate();
  return b;
}

RunConfig parse_config(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"bindings", "templates_dir", "normalization_profile", "seed", "max_loops", "workers",
                  "judge_short_circuit", "parse_retries", "temperatures", "pinned_strategy",
                  "gateway", "service"},
                 "config");
  RunConfig cfg;
  try {
    const json bindings = j.value("bindings", json::object());
    reject_unknown(bindings, {"asr", "llm", "tts"}, "bindings");
    // Scripted roles frequently share one file; load each path once.
    ScriptCache scripts;
    auto binding = [&](gateway::Role role) -> std::optional<gateway::BackendBinding> {
      const std::string name(gateway::to_string(role));
      if (!bindings.contains(name)) return std::nullopt;
      return parse_binding(role, bindings[name], base_dir, &scripts);
    };
    cfg.bindings.asr = binding(gateway::Role::kAsr);
    cfg.bindings.llm = binding(gateway::Role::kLlm);
    cfg.bindings.tts = binding(gateway::Role::kTts);

    if (j.contains("templates_dir")) {
      cfg.templates = agents::TemplateSet::load_dir(resolve(base_dir, j["templates_dir"].get<std::string>()));
    }
    cfg.agent_options.profile = textnorm::profile_by_name(j.value("normalization_profile", "default"));
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.max_loops = j.value("max_loops", 10);
    if (cfg.max_loops < 0) throw ConfigError("max_loops must be >= 0");
    cfg.workers = j.value("workers", 4);
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    cfg.agent_options.judge_short_circuit = j.value("judge_short_circuit", true);
    cfg.agent_options.parse_retries = j.value("parse_retries", 2);
    if (cfg.agent_options.parse_retries < 0) throw ConfigError("parse_retries must be >= 0");

    const json temps = j.value("temperatures", json::object());
    reject_unknown(temps, {"route", "refine", "judge", "user"}, "temperatures");
    cfg.agent_options.route_temperature = temps.value("route", 0.0);
    cfg.agent_options.refine_temperature = temps.value("refine", 0.0);
    cfg.agent_options.judge_temperature = temps.value("judge", 0.0);
    cfg.agent_options.user_temperature = temps.value("user", 0.7);

    if (j.contains("pinned_strategy") && !j["pinned_strategy"].is_null()) {
      cfg.pinned_strategy = agents::parse_strategy(j["pinned_strategy"].get<std::string>());
    }

    const json gw = j.value("gateway", json::object());
    reject_unknown(gw, {"cache_dir", "cache_stochastic", "max_attempts", "backoff_ms", "max_in_flight",
                        "timeout_s", "spool_dir"},
                   "gateway");
    if (gw.contains("cache_dir")) cfg.gateway_options.cache_dir = resolve(base_dir, gw["cache_dir"].get<std::string>());
    if (gw.contains("spool_dir")) cfg.gateway_options.spool_dir = resolve(base_dir, gw["spool_dir"].get<std::string>());
    cfg.gateway_options.cache_stochastic = gw.value("cache_stochastic", false);
    cfg.gateway_options.max_attempts = gw.value("max_attempts", 3);
    cfg.gateway_options.backoff_base = std::chrono::milliseconds(gw.value("backoff_ms", 250));
    cfg.gateway_options.max_in_flight_per_role = gw.value("max_in_flight", 4);
    cfg.gateway_options.timeout = std::chrono::seconds(gw.value("timeout_s", 120));

    const json svc = j.value("service", json::object());
    reject_unknown(svc, {"session_ttl_s", "probe_on_create"}, "service");
    cfg.session_ttl = std::chrono::seconds(svc.value("session_ttl_s", 30 * 60));
    cfg.probe_on_create = svc.value("probe_on_create", true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

}  // namespace iasr::config
