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
#include <random>
#include <sstream>

#include "iasr/error.hpp"
#include "iasr/report.hpp"
#include "iasr/sim.hpp"
#include "scenario_builder.hpp"

using namespace iasr;
using namespace iasr::sim;
using iasr::testing::ScenarioBuilder;
using iasr::testing::UtteranceScenario;
namespace fs = std::filesystem;

namespace {

SimOptions options(int max_loops, SimMode mode = SimMode::kTextShortcut, int workers = 4) {
  SimOptions o;
  o.max_loops = max_loops;
  o.mode = mode;
  o.seed = 17;
  o.workers = workers;
  return o;
}

BatchResult run(const ScenarioBuilder& b, SimOptions o, gateway::Gateway* gw_out = nullptr, bool audio = false) {
  gateway::Gateway local;
  gateway::Gateway& gw = gw_out ? *gw_out : local;
  Simulator sim(gw, b.bindings(), agents::TemplateSet::defaults(), {}, o);
  return sim.run_batch(b.manifest(audio));
}

std::vector<double> s2er_curve(const BatchResult& r, std::size_t dataset = 0) {
  std::vector<double> out;
  for (const auto& row : r.datasets.at(dataset).loops) out.push_back(row.s2er);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("manifest: valid lines, defaults and audio forms") {
  std::istringstream in(R"({"id":"a","reference_text":"see the knight","dataset_tag":"en","metric_mode":"word","audio":"a.wav"}
{"id":"b","reference_text":"我喜欢音乐","metric_mode":"char","audio":{"locator":"b.wav","sample_rate":8000}}

{"id":"c","reference_text":"hi","hypothesis":"high"}
)");
  const auto m = parse_manifest(in);
  REQUIRE(m.size() == 3);
  CHECK(m[0].audio->locator == "a.wav");
  CHECK(m[1].audio->sample_rate == 8000);
  CHECK(m[1].metric_mode == textnorm::TokenMode::kChar);
  CHECK(m[2].dataset_tag == "default");
  CHECK(m[2].metric_mode == textnorm::TokenMode::kWord);
  CHECK_FALSE(m[2].audio);
  CHECK(m[2].hypothesis == "high");
}

TEST_CASE("manifest: errors carry line numbers") {
  auto line_of = [](const std::string& text) -> std::size_t {
    std::istringstream in(text);
    try {
      parse_manifest(in);
    } catch (const MalformedManifest& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("{\"id\":\"a\",\"reference_text\":\"x\"}\n{\"id\":\"a\",\"reference_text\":\"y\"}\n") == 2);
  CHECK(line_of("{\"id\":\"a\",\"reference_text\":\"x\"}\n\n{\"id\":\"b\"}\n") == 3);
  CHECK(line_of("{\"id\":\"a\",\"reference_text\":\"   \"}\n") == 1);
  CHECK(line_of("{\"id\":\"a\",\"reference_text\":\"x\",\"metric_mode\":\"phone\"}\n") == 1);
  CHECK(line_of("not json\n") == 1);
  CHECK(line_of("[1,2]\n") == 1);
}

TEST_CASE("manifest: relative audio resolves against the manifest directory") {
  TempDir dir("iasr-sim-manifest");
  std::ofstream(dir.path / "m.jsonl") << R"({"id":"a","reference_text":"x","audio":"clips/a.wav"}
{"id":"b","reference_text":"x","audio":"utt:b"}
)";
  const auto m = load_manifest(dir.path / "m.jsonl");
  CHECK(m[0].audio->locator == (dir.path / "clips/a.wav").string());
  CHECK(m[1].audio->locator == "utt:b");
  CHECK_THROWS_AS(load_manifest(dir.path / "missing.jsonl"), MalformedManifest);
}

TEST_CASE("run_utterance: single fix, absorbing pass, loop bound") {
  ScenarioBuilder b;
  b.add({"fix1", "see the knight", 1}).add({"ok", "see the knight", 0}).add({"never", "see the knight", -1});
  gateway::Gateway gw;
  Simulator sim(gw, b.bindings(), agents::TemplateSet::defaults(), {}, options(10));
  const auto manifest = b.manifest();

  auto t = sim.run_utterance(manifest[0]);
  CHECK(t.states.size() == 2);
  CHECK(t.terminal_reason == TerminalReason::kJudgePass);
  CHECK(t.states[1].verdict.equivalent == 1);
  CHECK(t.states[1].instruction->text == "no, drop the extra word at the end");
  CHECK(t.states[1].trace->replacement == "(nothing)");

  gw.reset_counters();
  t = sim.run_utterance(manifest[1]);
  CHECK(t.states.size() == 1);
  CHECK(t.terminal_reason == TerminalReason::kJudgePass);
  CHECK(gw.counters().agent("user") == 0);
  CHECK(gw.counters().agent("refine") == 0);
  CHECK(gw.counters().agent("tts") == 0);

  gw.reset_counters();
  t = sim.run_utterance(manifest[2]);
  CHECK(t.states.size() == 11);
  CHECK(t.terminal_reason == TerminalReason::kMaxLoops);
  CHECK(gw.counters().agent("judge") == 11);
  CHECK(gw.counters().agent("user") == 10);
  CHECK(gw.counters().agent("refine") == 10);
  for (int i = 0; i <= 10; ++i) CHECK(t.states[i].loop == i);
}

TEST_CASE("run_batch: k = [0, 1, 2] corrections") {
  ScenarioBuilder b;
  b.add({"u0", "turn on the kitchen lights", 0})
      .add({"u1", "call doctor wang at nine", 1})
      .add({"u2", "book a table for two", 2});
  const auto r = run(b, options(10));
  REQUIRE(r.trajectories.size() == 3);
  CHECK(r.trajectories[0].terminal_loop() == 0);
  CHECK(r.trajectories[1].terminal_loop() == 1);
  CHECK(r.trajectories[2].terminal_loop() == 2);
  for (const auto& t : r.trajectories) CHECK(t.terminal_reason == TerminalReason::kJudgePass);

  const auto curve = s2er_curve(r);
  REQUIRE(curve.size() == 11);
  CHECK(curve[0] == 2.0 / 3.0);
  CHECK(curve[1] == 1.0 / 3.0);
  for (std::size_t t = 2; t < curve.size(); ++t) CHECK(curve[t] == 0.0);

  const auto& rows = r.datasets[0].loops;
  CHECK(rows[0].sentence_error_rate == 2.0 / 3.0);
  // 1 + 2 stray tokens over 5 + 5 + 5 reference words.
  CHECK(rows[0].token_error_rate == doctest::Approx(3.0 / 15.0));
  CHECK(rows[1].token_error_rate == doctest::Approx(1.0 / 15.0));
  CHECK(rows[2].token_error_rate == 0.0);
  CHECK(rows[0].n_utterances == 3);
}

TEST_CASE("run_batch: all correct at loop 0, and a single never-converging utterance") {
  ScenarioBuilder ok;
  ok.add({"a", "alpha beta", 0}).add({"b", "gamma", 0});
  for (const auto& row : run(ok, options(3)).datasets[0].loops) {
    CHECK(row.s2er == 0.0);
    CHECK(row.sentence_error_rate == 0.0);
  }
  ScenarioBuilder never;
  never.add({"n", "alpha beta", -1});
  for (double v : s2er_curve(run(never, options(10)))) CHECK(v == 1.0);
}

TEST_CASE("run_batch: loop-0 row equals offline scoring of the base transcripts") {
  ScenarioBuilder b;
  b.add({"a", "我喜欢 taylor swift", 1, "cs", textnorm::TokenMode::kMixed})
      .add({"b", "打开 wi-fi 设置", 2, "cs", textnorm::TokenMode::kMixed})
      .add({"c", "今天天气很好", 0, "cs", textnorm::TokenMode::kMixed});
  const auto r = run(b, options(4));
  std::vector<report::ScorePair> pairs;
  for (const auto& e : b.manifest()) pairs.push_back({e.id, e.reference_text, *e.hypothesis});
  const auto offline = report::score_pairs(pairs, textnorm::TokenMode::kMixed, textnorm::profile_by_name("default"));
  CHECK(r.datasets[0].loops[0].token_error_rate == offline.token_error_rate);
  CHECK(r.datasets[0].loops[0].sentence_error_rate == offline.sentence_error_rate);
}

TEST_CASE("run_batch: datasets keep manifest order and their own metric") {
  ScenarioBuilder b;
  b.add({"z1", "alpha", 1, "english", textnorm::TokenMode::kWord})
      .add({"a1", "你好", 0, "mandarin", textnorm::TokenMode::kChar})
      .add({"m1", "alpha", 0, "english", textnorm::TokenMode::kWord});
  const auto r = run(b, options(2));
  REQUIRE(r.datasets.size() == 2);
  CHECK(r.datasets[0].tag == "english");
  CHECK(r.datasets[0].mode == textnorm::TokenMode::kWord);
  CHECK(r.datasets[1].tag == "mandarin");
  CHECK(r.datasets[1].loops[0].n_utterances == 1);
  // Trajectories are sorted by id.
  CHECK(r.trajectories[0].utterance_id == "a1");
  CHECK(r.trajectories[2].utterance_id == "z1");
}

TEST_CASE("run_batch: input validation") {
  gateway::Gateway gw;
  ScenarioBuilder b;
  b.add({"a", "alpha", 0});
  Simulator sim(gw, b.bindings(), agents::TemplateSet::defaults(), {}, options(2));
  CHECK_THROWS_AS(sim.run_batch({}), EmptyBatch);

  auto mixed = b.manifest();
  mixed.push_back(mixed[0]);
  mixed[1].id = "b";
  mixed[1].metric_mode = textnorm::TokenMode::kChar;
  CHECK_THROWS_AS(sim.run_batch(mixed), MalformedManifest);

  auto punct = b.manifest();
  punct[0].reference_text = "?!";
  CHECK_THROWS_AS(sim.run_batch(punct), MalformedManifest);

  Simulator audio(gw, b.bindings(), agents::TemplateSet::defaults(), {}, options(2, SimMode::kAudioLoop));
  CHECK_THROWS_AS(audio.run_batch(b.manifest(false)), MalformedManifest);

  auto no_tts = b.bindings();
  no_tts.tts.reset();
  CHECK_THROWS_AS(Simulator(gw, no_tts, agents::TemplateSet::defaults(), {}, options(2, SimMode::kAudioLoop)),
                  ConfigError);
  CHECK_NOTHROW(Simulator(gw, no_tts, agents::TemplateSet::defaults(), {}, options(2)));
}

TEST_CASE("run_batch: stalls are recorded and flagged without aborting the batch") {
  ScenarioBuilder b;
  b.add({"good", "alpha beta", 1});
  auto bindings = b.bindings();
  // "bad" has no script entries at all: the judge call at loop 0 fails.
  auto manifest = b.manifest();
  manifest.push_back({"bad", std::nullopt, "gamma delta", "default", textnorm::TokenMode::kWord, "gamma"});
  gateway::Gateway gw;
  Simulator sim(gw, bindings, agents::TemplateSet::defaults(), {}, options(3));
  const auto r = sim.run_batch(manifest);
  const auto& bad = r.trajectories[0];
  CHECK(bad.utterance_id == "bad");
  CHECK(bad.terminal_reason == TerminalReason::kStalledError);
  REQUIRE(bad.error);
  CHECK(bad.error->find("ScriptExhausted") == 0);
  CHECK(r.trajectories[1].terminal_reason == TerminalReason::kJudgePass);
  for (const auto& row : r.datasets[0].loops) CHECK(row.n_flagged == 1);
  // The stalled utterance counts as a mismatch on every row.
  CHECK(r.datasets[0].loops.back().s2er == 0.5);
}

TEST_CASE("run_utterance: unparseable judge counts as mismatch and is flagged") {
  const std::string script =
      iasr::testing::llm_line({{"agent", "judge"}}, "I cannot decide").dump() + "\n" +
      iasr::testing::llm_line({{"agent", "user"}}, "fix it").dump() + "\n" +
      iasr::testing::llm_line({{"agent", "refine"}}, ScenarioBuilder::corrector_reply("alpha beta zz")).dump() + "\n";
  auto bindings = ScenarioBuilder::scripted_bindings(
      std::make_shared<const gateway::ScenarioScript>(gateway::ScenarioScript::parse(script)));
  gateway::Gateway gw;
  Simulator sim(gw, bindings, agents::TemplateSet::defaults(), {}, options(2));
  const auto t = sim.run_utterance({"u", std::nullopt, "alpha beta", "default", textnorm::TokenMode::kWord, "alpha"});
  REQUIRE(t.states.size() == 3);
  CHECK(t.terminal_reason == TerminalReason::kMaxLoops);
  for (const auto& s : t.states) {
    CHECK(s.verdict.equivalent == 0);
    CHECK(s.verdict.flagged);
    CHECK(s.verdict.raw_response == "I cannot decide");
  }
}

TEST_CASE("run_utterance: base transcript from the scripted ASR") {
  ScenarioBuilder b;
  b.initial_from_asr().add({"a", "alpha beta", 1});
  const auto r = run(b, options(3));
  CHECK(r.trajectories[0].states[0].transcript == "alpha beta zz");
  CHECK(r.trajectories[0].terminal_loop() == 1);
}

TEST_CASE("S2ER is non-increasing over randomized scripted batches") {
  std::mt19937_64 rng(8);
  for (int batch = 0; batch < 50; ++batch) {
    ScenarioBuilder b;
    const int n = 1 + static_cast<int>(rng() % 8);
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rng() % 14) - 1;  // -1 never converges
      b.add({"u" + std::to_string(i), "word" + std::to_string(rng() % 5) + " tail", k});
    }
    const auto curve = s2er_curve(run(b, options(static_cast<int>(rng() % 11))));
    for (std::size_t t = 1; t < curve.size(); ++t) CHECK(curve[t] <= curve[t - 1]);
  }
}

TEST_CASE("mode equivalence under verbatim re-transcription") {
  ScenarioBuilder b;
  b.add({"a", "alpha beta", 2}).add({"b", "gamma", 0}).add({"c", "delta epsilon", -1});
  gateway::Gateway gw_text;
  gateway::Gateway gw_audio;
  const auto text = run(b, options(4, SimMode::kTextShortcut), &gw_text, true);
  const auto audio = run(b, options(4, SimMode::kAudioLoop), &gw_audio, true);
  REQUIRE(text.trajectories.size() == audio.trajectories.size());
  for (std::size_t i = 0; i < text.trajectories.size(); ++i) {
    CHECK(nlohmann::json(text.trajectories[i]).dump() == nlohmann::json(audio.trajectories[i]).dump());
  }
  CHECK(gw_text.counters().agent("tts") == 0);
  CHECK(gw_audio.counters().agent("tts") == gw_audio.counters().agent("user"));
}

TEST_CASE("reproducibility: identical runs write byte-identical files regardless of workers") {
  ScenarioBuilder b;
  for (int i = 0; i < 12; ++i) b.add({"u" + std::to_string(i), "sentence number " + std::to_string(i), (i % 5) - 1});
  TempDir one("iasr-sim-repro-1");
  TempDir two("iasr-sim-repro-2");
  write_batch(one.path, run(b, options(6, SimMode::kTextShortcut, 1)));
  write_batch(two.path, run(b, options(6, SimMode::kTextShortcut, 8)));
  CHECK(slurp(one.path / "trajectories.jsonl") == slurp(two.path / "trajectories.jsonl"));
  CHECK(slurp(one.path / "metrics.json") == slurp(two.path / "metrics.json"));
}

TEST_CASE("run directory round-trips") {
  ScenarioBuilder b;
  b.add({"a", "alpha beta", 1}).add({"b", "gamma", 3});
  const auto r = run(b, options(5));
  TempDir dir("iasr-sim-roundtrip");
  write_batch(dir.path, r);
  const auto back = read_batch(dir.path);
  CHECK(back.max_loops == 5);
  REQUIRE(back.trajectories.size() == 2);
  CHECK(nlohmann::json(back.trajectories[1]).dump() == nlohmann::json(r.trajectories[1]).dump());
  CHECK(metrics_to_json(back).dump() == metrics_to_json(r).dump());
  CHECK_THROWS_AS(read_batch(dir.path / "nope"), ConfigError);
}

TEST_CASE("utterance seeds are stable and id-dependent") {
  CHECK(utterance_seed(1, "a") == utterance_seed(1, "a"));
  CHECK(utterance_seed(1, "a") != utterance_seed(1, "b"));
  CHECK(utterance_seed(1, "a") != utterance_seed(2, "a"));
}

TEST_CASE("with an exact-match judge, S2ER equals SER at every loop") {
  // The scripted judge answers EQUIVALENT exactly when the transcript equals
  // the reference, which makes it an exact-match judge in word mode.
  std::mt19937_64 rng(23);
  for (int batch = 0; batch < 100; ++batch) {
    ScenarioBuilder b;
    const int n = 1 + static_cast<int>(rng() % 9);
    for (int i = 0; i < n; ++i) {
      const int k = static_cast<int>(rng() % 6) - 1;
      b.add({"u" + std::to_string(i), "item " + std::to_string(rng() % 7) + " of the list", k});
    }
    for (const auto& row : run(b, options(4)).datasets[0].loops) CHECK(row.s2er == row.sentence_error_rate);
  }
}
