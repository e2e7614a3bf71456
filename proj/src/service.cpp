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

#include "iasr/service.hpp"

#include <ctime>
#include <fstream>

#include <httplib.h>

#include "iasr/error.hpp"

namespace iasr::service {

using nlohmann::json;

struct SessionService::Entry {
  std::mutex turn_mutex;
  std::unique_ptr<session::SessionEngine> engine;
  session::SessionState state;  // guarded by turn_mutex
  std::string created_at;
  std::atomic<Clock::rep> last_used{0};
};

namespace {

std::string utc_now_iso8601() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json snapshot(const std::string& id, const std::string& created_at, const session::SessionState& state) {
  return json{{"session_id", id},
              {"created_at", created_at},
              {"state_snapshot", {{"current_transcript", state.current_transcript}, {"turn_index", state.turn_index}}}};
}

}  // namespace

json error_body(std::string_view code, std::string_view message) {
  return json{{"code", code}, {"message", message}};
}

SessionService::SessionService(gateway::Gateway& gateway, ServiceConfig config)
    : gateway_(gateway), config_(std::move(config)) {
  // Fails early on a config no session could run with.
  session::SessionEngine probe(gateway_, config_.bindings, config_.templates, config_.agent_options);
}

SessionService::~SessionService() = default;

std::shared_ptr<SessionService::Entry> SessionService::find(const std::string& id) {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  it->second->last_used = Clock::now().time_since_epoch().count();
  return it->second;
}

Reply SessionService::create_session(std::string_view body) {
  evict_idle();
  agents::AgentOptions options = config_.agent_options;
  std::string label;
  if (body.find_first_not_of(" \t\r\n") != std::string_view::npos) {
    json overrides;
    try {
      overrides = json::parse(body);
    } catch (const json::exception& e) {
      return {400, error_body("bad_request", std::string("body is not valid JSON: ") + e.what())};
    }
    if (!overrides.is_object()) return {400, error_body("bad_request", "overrides must be a JSON object")};
    try {
      for (const auto& [key, value] : overrides.items()) {
        if (key == "label") label = value.get<std::string>();
        else if (key == "route_temperature") options.route_temperature = value.get<double>();
        else if (key == "refine_temperature") options.refine_temperature = value.get<double>();
        else if (key == "parse_retries") options.parse_retries = value.get<int>();
        else return {400, error_body("bad_request", "unknown override key '" + key + "'")};
      }
    } catch (const json::exception& e) {
      return {400, error_body("bad_request", std::string("bad override value: ") + e.what())};
    }
    if (options.route_temperature < 0 || options.refine_temperature < 0 || options.parse_retries < 0) {
      return {400, error_body("bad_request", "override values must be non-negative")};
    }
  }

  if (config_.probe_on_create) {
    for (const auto* b : {&config_.bindings.asr, &config_.bindings.llm}) {
      if (*b && !gateway_.probe(**b)) {
        return {503, error_body("backend_unavailable",
                                std::string(gateway::to_string((*b)->role)) + " backend unreachable: " +
                                    (*b)->endpoint)};
      }
    }
  }

  auto entry = std::make_shared<Entry>();
  entry->engine = std::make_unique<session::SessionEngine>(gateway_, config_.bindings, config_.templates, options);
  entry->created_at = utc_now_iso8601();
  entry->last_used = Clock::now().time_since_epoch().count();
  {
    std::lock_guard lock(mutex_);
    std::string id;
    do {
      id = session::new_session_id();
    } while (sessions_.count(id));
    entry->state = entry->engine->start_session(id);
    sessions_[id] = entry;
  }
  json out = snapshot(entry->state.session_id, entry->created_at, entry->state);
  if (!label.empty()) out["label"] = label;
  return {201, out};
}

Reply SessionService::post_turn(const std::string& session_id, const session::TurnInput& input) {
  auto entry = find(session_id);
  if (!entry) return {404, error_body("not_found", "unknown session '" + session_id + "'")};
  std::unique_lock lock(entry->turn_mutex, std::try_to_lock);
  if (!lock.owns_lock()) return {409, error_body("conflict", "a turn is already in flight for this session")};
  session::TurnRecord record;
  try {
    record = entry->engine->step(entry->state, input);
  } catch (const PreconditionViolation& e) {
    return {400, error_body("bad_request", e.what())};
  }
  entry->last_used = Clock::now().time_since_epoch().count();
  if (record.failed()) {
    json body = error_body("backend_failure", record.error->code + ": " + record.error->message);
    body["turn"] = record;
    return {502, body};
  }
  return {200, json(record)};
}

Reply SessionService::get_session(const std::string& session_id) {
  auto entry = find(session_id);
  if (!entry) return {404, error_body("not_found", "unknown session '" + session_id + "'")};
  std::lock_guard lock(entry->turn_mutex);
  return {200, snapshot(session_id, entry->created_at, entry->state)};
}

Reply SessionService::get_trajectory(const std::string& session_id) {
  auto entry = find(session_id);
  if (!entry) return {404, error_body("not_found", "unknown session '" + session_id + "'")};
  std::lock_guard lock(entry->turn_mutex);
  json records = json::array();
  for (const auto& r : session::SessionEngine::trajectory(entry->state)) records.push_back(r);
  return {200, records};
}

std::size_t SessionService::evict_idle(Clock::time_point now) {
  std::lock_guard lock(mutex_);
  const auto cutoff = (now - config_.session_ttl).time_since_epoch().count();
  std::size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (it->second->last_used.load() < cutoff) {
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

std::size_t SessionService::size() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

// ---------------------------------------------------------------------------

namespace {

void send(httplib::Response& res, const Reply& reply) {
  res.status = reply.status;
  res.set_content(reply.body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(SessionService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;

  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send(res, {200, json{{"status", "ok"}}});
  });

  srv.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.create_session(req.body));
  });

  srv.Post(R"(/v1/sessions/([^/]+)/turns)", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    session::TurnInput input;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("audio")) {
        send(res, {400, error_body("bad_request", "multipart body needs an 'audio' part")});
        return;
      }
      const auto file = req.get_file_value("audio");
      if (file.content.empty()) {
        send(res, {400, error_body("bad_request", "audio part is empty")});
        return;
      }
      const auto& spool = service_.config().spool_dir;
      std::filesystem::create_directories(spool);
      const auto path = spool / (session::new_session_id() + ".audio");
      {
        std::ofstream out(path, std::ios::binary);
        out << file.content;
      }
      input = gateway::AudioRef{path.string(), 16000, std::nullopt};
    } else {
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        send(res, {400, error_body("bad_request", "body must be JSON {\"text\": ...} or multipart audio")});
        return;
      }
      if (!body.is_object() || !body.contains("text") || !body["text"].is_string() ||
          body["text"].get<std::string>().find_first_not_of(" \t\r\n") == std::string::npos) {
        send(res, {400, error_body("bad_request", "body needs a non-empty 'text' field")});
        return;
      }
      input = body["text"].get<std::string>();
    }
    send(res, service_.post_turn(id, input));
  });

  srv.Get(R"(/v1/sessions/([^/]+)/trajectory)", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.get_trajectory(req.matches[1]));
  });

  srv.Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    send(res, service_.get_session(req.matches[1]));
  });

  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      res.set_content(error_body(res.status == 404 ? "not_found" : "error", httplib::status_message(res.status)).dump(),
                      "application/json");
    }
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

}  // namespace iasr::service
