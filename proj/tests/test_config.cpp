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

#include <filesystem>
#include <fstream>

#include "iasr/config.hpp"
#include "iasr/error.hpp"

using namespace iasr;
using namespace iasr::config;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kDemo = fs::path(IASR_TEST_DATA) / "demo";

json scripted_bindings() {
  return json{{"asr", {{"provider", "scripted"}, {"script", "scenario.jsonl"}}},
              {"llm", {{"provider", "scripted"}, {"script", "scenario.jsonl"}}}};
}

}  // namespace

TEST_CASE("defaults") {
  const auto cfg = parse_config(json{{"bindings", scripted_bindings()}}, kDemo);
  CHECK(cfg.max_loops == 10);
  CHECK(cfg.workers == 4);
  CHECK(cfg.seed == 0);
  CHECK(cfg.agent_options.parse_retries == 2);
  CHECK(cfg.agent_options.judge_short_circuit);
  CHECK(cfg.agent_options.route_temperature == 0.0);
  CHECK(cfg.agent_options.refine_temperature == 0.0);
  CHECK(cfg.agent_options.judge_temperature == 0.0);
  CHECK(cfg.agent_options.user_temperature == 0.7);
  CHECK(cfg.agent_options.profile.name == "default");
  CHECK(cfg.gateway_options.max_attempts == 3);
  CHECK_FALSE(cfg.gateway_options.cache_dir);
  CHECK(cfg.session_ttl == std::chrono::minutes(30));
  CHECK_FALSE(cfg.bindings.tts);
  CHECK_FALSE(cfg.pinned_strategy);
  // Roles naming the same script share one loaded copy.
  CHECK(cfg.bindings.asr->script == cfg.bindings.llm->script);
}

TEST_CASE("the demo config file loads") {
  const auto cfg = load_config(kDemo / "config.json");
  CHECK(cfg.seed == 7);
  REQUIRE(cfg.bindings.tts);
  CHECK(cfg.bindings.tts->script->entries().size() > 10);
}

TEST_CASE("explicit values and relative paths") {
  const json j{{"bindings",
                {{"llm",
                  {{"provider", "live"},
                   {"endpoint", "http://localhost:8000/v1/chat/completions"},
                   {"model", "qwen3-32b"},
                   {"max_tokens", 256}}}}},
               {"seed", 99},
               {"max_loops", 3},
               {"workers", 2},
               {"parse_retries", 0},
               {"judge_short_circuit", false},
               {"temperatures", {{"user", 1.0}}},
               {"pinned_strategy", "direct_negation"},
               {"normalization_profile", "raw"},
               {"gateway", {{"cache_dir", "cache"}, {"backoff_ms", 10}, {"max_in_flight", 1}}},
               {"service", {{"session_ttl_s", 60}, {"probe_on_create", false}}}};
  const auto cfg = parse_config(j, "/srv/run");
  CHECK(cfg.bindings.llm->provider == gateway::ProviderKind::kLive);
  CHECK(cfg.bindings.llm->model_name == "qwen3-32b");
  CHECK(cfg.bindings.llm->sampling.max_tokens == 256);
  CHECK(cfg.seed == 99);
  CHECK(cfg.max_loops == 3);
  CHECK(cfg.agent_options.parse_retries == 0);
  CHECK_FALSE(cfg.agent_options.judge_short_circuit);
  CHECK(cfg.agent_options.user_temperature == 1.0);
  CHECK(cfg.pinned_strategy == agents::Strategy::kDirectNegation);
  CHECK(cfg.agent_options.profile.name == "raw");
  CHECK(*cfg.gateway_options.cache_dir == fs::path("/srv/run/cache"));
  CHECK(cfg.gateway_options.backoff_base == std::chrono::milliseconds(10));
  CHECK(cfg.session_ttl == std::chrono::seconds(60));
  CHECK_FALSE(cfg.probe_on_create);
}

TEST_CASE("invalid configs raise ConfigError") {
  auto bad = [&](json j) { CHECK_THROWS_AS(parse_config(j, kDemo), ConfigError); };
  bad(json{{"bindings", scripted_bindings()}, {"max_lops", 3}});
  bad(json{{"bindings", {{"video", {{"provider", "scripted"}}}}}});
  bad(json{{"bindings", {{"llm", {{"provider", "scripted"}}}}}});
  bad(json{{"bindings", {{"llm", {{"provider", "live"}}}}}});
  bad(json{{"bindings", {{"llm", {{"provider", "live"}, {"endpoint", "http://x"}, {"script", "scenario.jsonl"}}}}}});
  bad(json{{"bindings", {{"llm", {{"provider", "scripted"}, {"script", "missing.jsonl"}}}}}});
  bad(json{{"bindings", scripted_bindings()}, {"max_loops", -1}});
  bad(json{{"bindings", scripted_bindings()}, {"workers", 0}});
  bad(json{{"bindings", scripted_bindings()}, {"seed", "seven"}});
  bad(json{{"bindings", scripted_bindings()}, {"pinned_strategy", "yelling"}});
  bad(json{{"bindings", scripted_bindings()}, {"normalization_profile", "nfkc"}});
  bad(json{{"bindings", scripted_bindings()}, {"temperatures", {{"router", 0.1}}}});
  bad(json::array());
  CHECK_THROWS_AS(load_config(kDemo / "nope.json"), ConfigError);
}

TEST_CASE("template directory overrides only the files it holds") {
  const fs::path dir = fs::temp_directory_path() / "iasr-config-templates";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "judge.txt") << "Same meaning? {hypothesis} vs {ground_truth}\nVERDICT: EQUIVALENT or DIFFERENT";
  const auto cfg = parse_config(json{{"bindings", scripted_bindings()}, {"templates_dir", dir.string()}}, kDemo);
  CHECK(cfg.templates.judge.text().rfind("Same meaning?", 0) == 0);
  CHECK(cfg.templates.route.text() == agents::TemplateSet::defaults().route.text());

  std::ofstream(dir / "route.txt") << "{ground_truth}";
  CHECK_THROWS_AS(parse_config(json{{"bindings", scripted_bindings()}, {"templates_dir", dir.string()}}, kDemo),
                  ConfigError);
  fs::remove_all(dir);
}
