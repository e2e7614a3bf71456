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
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "iasr/agents.hpp"
#include "iasr/gateway.hpp"
#include "iasr/session.hpp"

namespace httplib {
class Server;
}

namespace iasr::service {

struct ServiceConfig {
  session::BackendSet bindings;
  agents::TemplateSet templates = agents::TemplateSet::defaults();
  agents::AgentOptions agent_options;
  std::chrono::seconds session_ttl{30 * 60};
  bool probe_on_create = true;
  std::filesystem::path spool_dir = std::filesystem::temp_directory_path() / "iasr-uploads";
};

struct Reply {
  int status = 200;
  nlohmann::json body;
};

nlohmann::json error_body(std::string_view code, std::string_view message);

// Transport-independent session store behind the HTTP routes. Sessions live
// in memory only and are evicted after `session_ttl` without activity.
class SessionService {
 public:
  using Clock = std::chrono::steady_clock;

  // Throws ConfigError if the bindings cannot drive a session.
  SessionService(gateway::Gateway& gateway, ServiceConfig config);
  ~SessionService();

  // Body: empty or a JSON object of overrides
  // {"label", "route_temperature", "refine_temperature", "parse_retries"}.
  Reply create_session(std::string_view body);
  // 404 unknown id, 409 if a turn of this session is in flight,
  // 502 with the failed record under "turn" on a backend/parse failure.
  Reply post_turn(const std::string& session_id, const session::TurnInput& input);
  Reply get_session(const std::string& session_id);
  Reply get_trajectory(const std::string& session_id);

  std::size_t evict_idle(Clock::time_point now = Clock::now());
  std::size_t size() const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Entry;
  std::shared_ptr<Entry> find(const std::string& id);

  gateway::Gateway& gateway_;
  ServiceConfig config_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

// HTTP binding:
//   POST /v1/sessions                      -> 201 {session_id, created_at, state_snapshot}
//   POST /v1/sessions/{id}/turns           -> TurnRecord ({"text"} JSON or multipart "audio")
//   GET  /v1/sessions/{id}                 -> {session_id, created_at, state_snapshot}
//   GET  /v1/sessions/{id}/trajectory      -> [TurnRecord, ...]
//   GET  /healthz
// Errors use the envelope {code, message}.
class HttpServer {
 public:
  explicit HttpServer(SessionService& service);
  ~HttpServer();

  // Returns the bound port (useful with port 0), or -1.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  SessionService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace iasr::service
