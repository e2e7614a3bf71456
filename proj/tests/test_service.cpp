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

#include <doctest.h>

#include <httplib.h>

#include <future>
#include <thread>

#include "iasr/error.hpp"
#include "iasr/service.hpp"
#include "scenario_builder.hpp"

using namespace iasr;
using namespace iasr::service;
using nlohmann::json;
using iasr::testing::llm_line;

namespace {

// Keys carry no session id, so every session of a service follows the same
// script: typed or spoken "see the night", then a spelled-out correction.
std::string correction_script(int refine_delay_ms = 0) {
  json refine = llm_line({{"turn", 1}, {"agent", "refine"}},
                         "Locate: night\nReason: spelled with a K\nReplacement: knight\n```FINAL\nsee the knight\n```");
  if (refine_delay_ms > 0) refine["delay_ms"] = refine_delay_ms;
  return json{{"role", "asr"}, {"key", {{"turn", 0}}}, {"response", "see the night"}}.dump() + "\n" +
         json{{"role", "asr"}, {"key", {{"turn", 1}}}, {"response", "no it is knight with a k"}}.dump() + "\n" +
         llm_line({{"turn", 1}, {"agent", "route"}}, "Spelling fix.\nROUTE: CORRECTION").dump() + "\n" +
         refine.dump() + "\n" + json{{"role", "llm"}, {"default_policy", "error"}}.dump() + "\n";
}

ServiceConfig scripted_config(const std::string& script) {
  ServiceConfig cfg;
  cfg.bindings = iasr::testing::ScenarioBuilder::scripted_bindings(
      std::make_shared<const gateway::ScenarioScript>(gateway::ScenarioScript::parse(script)));
  return cfg;
}

std::string created_id(const Reply& r) { return r.body.at("session_id").get<std::string>(); }

class UnreachableTransport : public gateway::HttpTransport {
 public:
  std::optional<gateway::HttpResponse> post_json(const std::string&, const std::string&) override {
    return std::nullopt;
  }
  std::optional<gateway::HttpResponse> post_multipart(const std::string&,
                                                      const std::vector<gateway::MultipartPart>&) override {
    return std::nullopt;
  }
  bool reachable(const std::string&) override { return false; }
};

}  // namespace

TEST_CASE("create returns distinct sessions and validates overrides") {
  gateway::Gateway gw;
  SessionService svc(gw, scripted_config(correction_script()));
  const auto a = svc.create_session("");
  const auto b = svc.create_session(R"({"label": "kitchen", "parse_retries": 1})");
  REQUIRE(a.status == 201);
  REQUIRE(b.status == 201);
  CHECK(created_id(a) != created_id(b));
  CHECK(b.body["label"] == "kitchen");
  CHECK(a.body["state_snapshot"]["turn_index"] == 0);
  CHECK(a.body["state_snapshot"]["current_transcript"] == "");
  CHECK(svc.size() == 2);

  CHECK(svc.create_session(R"({"colour": "red"})").status == 400);
  CHECK(svc.create_session("not json").status == 400);
  CHECK(svc.create_session("[1, 2]").status == 400);
  CHECK(svc.create_session(R"({"parse_retries": -1})").status == 400);
  CHECK(svc.create_session(R"({"route_temperature": "hot"})").status == 400);
  CHECK(svc.size() == 2);
}

TEST_CASE("a failed backend probe refuses the session") {
  gateway::Gateway gw({}, std::make_unique<UnreachableTransport>());
  auto cfg = scripted_config(correction_script());
  cfg.bindings.llm->provider = gateway::ProviderKind::kLive;
  cfg.bindings.llm->endpoint = "http://127.0.0.1:9/v1/chat/completions";
  cfg.bindings.llm->model_name = "m";
  cfg.bindings.llm->script = nullptr;
  SessionService svc(gw, cfg);
  const auto r = svc.create_session("");
  CHECK(r.status == 503);
  CHECK(r.body["code"] == "backend_unavailable");
  CHECK(svc.size() == 0);

  cfg.probe_on_create = false;
  SessionService lenient(gw, cfg);
  CHECK(lenient.create_session("").status == 201);
}

TEST_CASE("turns, lookups and trajectories") {
  gateway::Gateway gw;
  SessionService svc(gw, scripted_config(correction_script()));
  const auto id = created_id(svc.create_session(""));
  CHECK(svc.get_trajectory(id).body == json::array());

  auto r0 = svc.post_turn(id, gateway::AudioRef{"mem://clip0", 16000, std::nullopt});
  REQUIRE(r0.status == 200);
  CHECK(r0.body.at("t") == 0);
  CHECK(r0.body.at("resulting_transcript") == "see the night");
  CHECK(r0.body.at("route").at("kind") == "new_utterance");

  auto r1 = svc.post_turn(id, gateway::AudioRef{"mem://clip1", 16000, std::nullopt});
  REQUIRE(r1.status == 200);
  CHECK(r1.body.at("hypothesis") == "no it is knight with a k");
  CHECK(r1.body.at("route").at("kind") == "corrective_intent");
  CHECK(r1.body.at("resulting_transcript") == "see the knight");

  const auto snap = svc.get_session(id);
  CHECK(snap.status == 200);
  CHECK(snap.body["state_snapshot"]["current_transcript"] == "see the knight");
  CHECK(snap.body["state_snapshot"]["turn_index"] == 2);

  const auto traj = svc.get_trajectory(id);
  REQUIRE(traj.body.is_array());
  CHECK(traj.body.size() == 2);
  // Field-for-field snapshot consistency with the returned record.
  CHECK(traj.body.back() == r1.body);

  CHECK(svc.post_turn("missing", std::string("hi")).status == 404);
  CHECK(svc.get_session("missing").status == 404);
  CHECK(svc.get_trajectory("missing").status == 404);
  CHECK(svc.post_turn(id, std::string("")).status == 400);
}

TEST_CASE("a backend failure answers 502 with the failed turn") {
  gateway::Gateway gw;
  SessionService svc(gw, scripted_config(correction_script()));
  const auto id = created_id(svc.create_session(""));
  REQUIRE(svc.post_turn(id, std::string("see the night")).status == 200);
  REQUIRE(svc.post_turn(id, std::string("no it is knight with a k")).status == 200);
  // Turn 2 has no scripted route reply and the default policy is an error.
  const auto r = svc.post_turn(id, std::string("play some music"));
  CHECK(r.status == 502);
  CHECK(r.body["code"] == "backend_failure");
  REQUIRE(r.body.contains("turn"));
  CHECK(r.body["turn"]["t"] == 2);
  CHECK(r.body["turn"]["resulting_transcript"] == "see the knight");
  CHECK(r.body["turn"].contains("error"));
  CHECK(svc.get_session(id).body["state_snapshot"]["current_transcript"] == "see the knight");
}

TEST_CASE("a second turn while one is in flight is a conflict") {
  gateway::Gateway gw;
  SessionService svc(gw, scripted_config(correction_script(800)));
  const auto id = created_id(svc.create_session(""));
  const auto other = created_id(svc.create_session(""));
  REQUIRE(svc.post_turn(id, std::string("see the night")).status == 200);
  REQUIRE(svc.post_turn(other, std::string("see the night")).status == 200);

  auto slow = std::async(std::launch::async, [&] { return svc.post_turn(id, std::string("it is knight with a k")); });
  std::this_thread::sleep_for(std::chrono::milliseconds(200));
  const auto clash = svc.post_turn(id, std::string("again"));
  CHECK(clash.status == 409);
  CHECK(clash.body["code"] == "conflict");
  // Other sessions are not blocked.
  CHECK(svc.get_session(other).status == 200);
  CHECK(slow.get().status == 200);
  CHECK(svc.get_trajectory(id).body.size() == 2);
}

TEST_CASE("idle sessions are evicted and a new service knows none") {
  gateway::Gateway gw;
  auto cfg = scripted_config(correction_script());
  cfg.session_ttl = std::chrono::seconds(60);
  SessionService svc(gw, cfg);
  const auto id = created_id(svc.create_session(""));
  CHECK(svc.evict_idle(SessionService::Clock::now() + std::chrono::seconds(30)) == 0);
  CHECK(svc.get_session(id).status == 200);
  CHECK(svc.evict_idle(SessionService::Clock::now() + std::chrono::seconds(61)) == 1);
  CHECK(svc.get_session(id).status == 404);

  const auto kept = created_id(svc.create_session(""));
  SessionService restarted(gw, cfg);
  CHECK(restarted.get_session(kept).status == 404);
}

TEST_CASE("a service without an llm binding is a config error") {
  gateway::Gateway gw;
  auto cfg = scripted_config(correction_script());
  cfg.bindings.llm.reset();
  CHECK_THROWS_AS(SessionService(gw, cfg), ConfigError);
}

TEST_CASE("http routes") {
  gateway::Gateway gw;
  auto cfg = scripted_config(correction_script());
  cfg.spool_dir = std::filesystem::temp_directory_path() / "iasr-test-uploads";
  SessionService svc(gw, cfg);
  HttpServer server(svc);
  const int port = server.bind("127.0.0.1", 0);
  REQUIRE(port > 0);
  std::thread loop([&] { server.listen(); });

  httplib::Client cli("127.0.0.1", port);
  auto health = cli.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);

  auto created = cli.Post("/v1/sessions", "{}", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto id = json::parse(created->body)["session_id"].get<std::string>();

  httplib::MultipartFormDataItems audio{{"audio", std::string(320, '\0'), "clip.wav", "audio/wav"}};
  auto t0 = cli.Post("/v1/sessions/" + id + "/turns", audio);
  REQUIRE(t0);
  CHECK(t0->status == 200);
  CHECK(json::parse(t0->body)["resulting_transcript"] == "see the night");

  auto t1 = cli.Post("/v1/sessions/" + id + "/turns", R"({"text": "no it is knight with a k"})", "application/json");
  REQUIRE(t1);
  CHECK(t1->status == 200);
  CHECK(json::parse(t1->body)["resulting_transcript"] == "see the knight");

  auto bad = cli.Post("/v1/sessions/" + id + "/turns", R"({"words": 1})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json::parse(bad->body).contains("code"));

  auto missing = cli.Post("/v1/sessions/nope/turns", R"({"text": "x"})", "application/json");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json::parse(missing->body)["code"] == "not_found");

  auto snap = cli.Get("/v1/sessions/" + id);
  REQUIRE(snap);
  CHECK(json::parse(snap->body)["state_snapshot"]["turn_index"] == 2);

  auto traj = cli.Get("/v1/sessions/" + id + "/trajectory");
  REQUIRE(traj);
  const auto records = json::parse(traj->body);
  REQUIRE(records.size() == 2);
  CHECK(records[0]["input"].contains("audio"));
  CHECK(records[1]["input"]["text"] == "no it is knight with a k");

  auto rejected = cli.Post("/v1/sessions", R"({"colour": "red"})", "application/json");
  REQUIRE(rejected);
  CHECK(rejected->status == 400);

  server.stop();
  loop.join();
  std::filesystem::remove_all(cfg.spool_dir);
}
