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

#include "iasr/sim.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "iasr/error.hpp"

namespace iasr::sim {

namespace fs = std::filesystem;
using gateway::RequestContext;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifest

std::vector<ManifestEntry> parse_manifest(std::istream& in) {
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw MalformedManifest(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!j.is_object()) throw MalformedManifest("entry must be a JSON object", lineno);
    auto text_field = [&](const char* name, bool required) -> std::optional<std::string> {
      if (!j.contains(name) || j[name].is_null()) {
        if (required) throw MalformedManifest(std::string("missing ") + name, lineno);
        return std::nullopt;
      }
      if (!j[name].is_string()) throw MalformedManifest(std::string(name) + " must be a string", lineno);
      return j[name].get<std::string>();
    };

    ManifestEntry e;
    e.id = *text_field("id", true);
    if (e.id.empty()) throw MalformedManifest("empty id", lineno);
    e.reference_text = *text_field("reference_text", true);
    if (e.reference_text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw MalformedManifest("empty reference_text", lineno);
    }
    e.dataset_tag = text_field("dataset_tag", false).value_or("default");
    try {
      e.metric_mode = textnorm::parse_token_mode(text_field("metric_mode", false).value_or("word"));
    } catch (const ConfigError& ex) {
      throw MalformedManifest(ex.what(), lineno);
    }
    e.hypothesis = text_field("hypothesis", false);
    if (j.contains("audio") && !j["audio"].is_null()) {
      try {
        if (j["audio"].is_string()) e.audio = gateway::AudioRef{j["audio"].get<std::string>(), 16000, std::nullopt};
        else e.audio = j["audio"].get<gateway::AudioRef>();
      } catch (const json::exception& ex) {
        throw MalformedManifest(std::string("invalid audio: ") + ex.what(), lineno);
      }
    }
    if (!seen.insert(e.id).second) throw MalformedManifest("duplicate id '" + e.id + "'", lineno);
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedManifest("cannot open manifest " + path.string(), 0);
  auto entries = parse_manifest(in);
  // Relative audio paths are relative to the manifest file; handles with a
  // scheme ("utt:", "scripted-tts://") are left alone.
  for (auto& e : entries) {
    if (e.audio && !e.audio->locator.empty() && e.audio->locator.find(':') == std::string::npos &&
        fs::path(e.audio->locator).is_relative()) {
      e.audio->locator = (path.parent_path() / e.audio->locator).lexically_normal().string();
    }
  }
  return entries;
}

std::string_view to_string(SimMode mode) {
  return mode == SimMode::kTextShortcut ? "text_shortcut" : "audio_loop";
}

SimMode parse_sim_mode(std::string_view name) {
  if (name == "text_shortcut") return SimMode::kTextShortcut;
  if (name == "audio_loop") return SimMode::kAudioLoop;
  throw ConfigError("unknown simulation mode '" + std::string(name) + "'");
}

std::string_view to_string(TerminalReason reason) {
  switch (reason) {
    case TerminalReason::kJudgePass: return "judge_pass";
    case TerminalReason::kMaxLoops: return "max_loops";
    case TerminalReason::kStalledError: return "stalled_error";
  }
  return "max_loops";
}

TerminalReason parse_terminal_reason(std::string_view name) {
  if (name == "judge_pass") return TerminalReason::kJudgePass;
  if (name == "max_loops") return TerminalReason::kMaxLoops;
  if (name == "stalled_error") return TerminalReason::kStalledError;
  throw PreconditionViolation("unknown terminal reason '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Serialization

void to_json(json& j, const SimTrajectory& t) {
  json states = json::array();
  for (const auto& s : t.states) {
    json st{{"loop", s.loop}, {"transcript", s.transcript}, {"verdict", s.verdict}};
    st["instruction"] = s.instruction ? json(*s.instruction) : json(nullptr);
    st["hypothesis"] = s.hypothesis ? json(*s.hypothesis) : json(nullptr);
    st["trace"] = s.trace ? json(*s.trace) : json(nullptr);
    states.push_back(std::move(st));
  }
  j = json{{"utterance_id", t.utterance_id},
           {"dataset_tag", t.dataset_tag},
           {"metric_mode", textnorm::to_string(t.metric_mode)},
           {"reference_text", t.reference_text},
           {"states", std::move(states)},
           {"terminal_reason", to_string(t.terminal_reason)},
           {"terminal_loop", t.terminal_loop()},
           {"error", t.error ? json(*t.error) : json(nullptr)}};
}

void from_json(const json& j, SimTrajectory& t) {
  t.utterance_id = j.at("utterance_id").get<std::string>();
  t.dataset_tag = j.value("dataset_tag", "default");
  t.metric_mode = textnorm::parse_token_mode(j.value("metric_mode", "word"));
  t.reference_text = j.at("reference_text").get<std::string>();
  t.states.clear();
  for (const auto& st : j.at("states")) {
    SimState s;
    s.loop = st.at("loop").get<int>();
    s.transcript = st.at("transcript").get<std::string>();
    s.verdict = st.at("verdict").get<agents::JudgeVerdict>();
    if (st.contains("instruction") && !st["instruction"].is_null()) {
      s.instruction = st["instruction"].get<agents::CorrectionInstruction>();
    }
    if (st.contains("hypothesis") && !st["hypothesis"].is_null()) s.hypothesis = st["hypothesis"].get<std::string>();
    if (st.contains("trace") && !st["trace"].is_null()) s.trace = st["trace"].get<agents::CorrectionTrace>();
    t.states.push_back(std::move(s));
  }
  t.terminal_reason = parse_terminal_reason(j.at("terminal_reason").get<std::string>());
  t.error.reset();
  if (j.contains("error") && !j["error"].is_null()) t.error = j["error"].get<std::string>();
}

// ---------------------------------------------------------------------------
// Simulator

std::uint64_t utterance_seed(std::uint64_t run_seed, const std::string& utterance_id) {
  std::uint64_t h = 14695981039346656037ULL ^ run_seed;
  for (unsigned char c : utterance_id) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Simulator::Simulator(gateway::Gateway& gateway, session::BackendSet bindings, agents::TemplateSet templates,
                     agents::AgentOptions agent_options, SimOptions options)
    : gateway_(gateway),
      bindings_(std::move(bindings)),
      agents_(gateway, std::move(templates), std::move(agent_options)),
      options_(options) {
  if (!bindings_.llm) throw ConfigError("simulation needs an llm binding");
  bindings_.llm->validate();
  if (options_.mode == SimMode::kAudioLoop) {
    if (!bindings_.asr || !bindings_.tts) throw ConfigError("audio_loop mode needs asr and tts bindings");
  }
  if (bindings_.asr) bindings_.asr->validate();
  if (bindings_.tts) bindings_.tts->validate();
  if (options_.max_loops < 0) throw ConfigError("max_loops must be >= 0");
}

SimTrajectory Simulator::run_utterance(const ManifestEntry& entry) {
  if (options_.mode == SimMode::kAudioLoop && !entry.audio) {
    throw PreconditionViolation("audio_loop mode needs audio for utterance " + entry.id);
  }
  SimTrajectory traj;
  traj.utterance_id = entry.id;
  traj.dataset_tag = entry.dataset_tag;
  traj.metric_mode = entry.metric_mode;
  traj.reference_text = entry.reference_text;

  agents::StrategySampler sampler(utterance_seed(options_.seed, entry.id), options_.pinned_strategy);
  const gateway::BackendBinding& llm = *bindings_.llm;
  auto ctx = [&](int t) { return RequestContext{entry.id, t, "", 0}; };

  // An unparseable judgement counts as a mismatch and is flagged.
  auto judge = [&](const std::string& candidate, int t) {
    try {
      return agents_.judge(candidate, entry.reference_text, llm, ctx(t));
    } catch (const UnparseableResponse& e) {
      agents::JudgeVerdict v;
      v.equivalent = 0;
      v.raw_response = e.raw_response();
      v.parse_failures = e.attempts();
      v.flagged = true;
      return v;
    }
  };

  try {
    std::string initial;
    if (entry.hypothesis) {
      initial = *entry.hypothesis;
    } else {
      if (!bindings_.asr) throw ConfigError("utterance " + entry.id + " has no hypothesis and no asr binding");
      const gateway::AudioRef audio =
          entry.audio.value_or(gateway::AudioRef{"utt:" + entry.id, 16000, std::nullopt});
      initial = gateway_.transcribe(audio, *bindings_.asr, ctx(0));
    }
    SimState first;
    first.loop = 0;
    first.transcript = initial;
    first.verdict = judge(initial, 0);
    traj.states.push_back(std::move(first));
    if (traj.states.back().verdict.equivalent == 1) {
      traj.terminal_reason = TerminalReason::kJudgePass;
      return traj;
    }

    for (int t = 1; t <= options_.max_loops; ++t) {
      const std::string prev = traj.states.back().transcript;
      agents::CorrectionInstruction instruction =
          agents_.generate_correction(entry.reference_text, prev, llm, sampler, ctx(t));

      std::string heard;
      if (options_.mode == SimMode::kAudioLoop) {
        const gateway::AudioRef spoken = gateway_.synthesize(instruction.text, *entry.audio, *bindings_.tts, ctx(t));
        heard = gateway_.transcribe(spoken, *bindings_.asr, ctx(t));
      } else {
        heard = instruction.text;
      }

      agents::CorrectionResult corrected = agents_.correct(prev, heard, llm, ctx(t));

      SimState state;
      state.loop = t;
      state.transcript = corrected.corrected_text;
      state.verdict = judge(state.transcript, t);
      state.instruction = std::move(instruction);
      state.hypothesis = std::move(heard);
      state.trace = corrected.trace;
      traj.states.push_back(std::move(state));
      if (traj.states.back().verdict.equivalent == 1) {
        traj.terminal_reason = TerminalReason::kJudgePass;
        return traj;
      }
    }
    traj.terminal_reason = TerminalReason::kMaxLoops;
  } catch (const Error& e) {
    traj.terminal_reason = TerminalReason::kStalledError;
    traj.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  return traj;
}

BatchResult Simulator::run_batch(const std::vector<ManifestEntry>& manifest) {
  if (manifest.empty()) throw EmptyBatch("manifest has no entries");

  std::vector<std::string> dataset_order;
  std::map<std::string, textnorm::TokenMode> modes;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& e = manifest[i];
    auto [it, inserted] = modes.emplace(e.dataset_tag, e.metric_mode);
    if (inserted) dataset_order.push_back(e.dataset_tag);
    else if (it->second != e.metric_mode) {
      throw MalformedManifest("dataset '" + e.dataset_tag + "' mixes metric modes", i + 1);
    }
    if (options_.mode == SimMode::kAudioLoop && !e.audio) {
      throw MalformedManifest("audio_loop mode needs audio for '" + e.id + "'", i + 1);
    }
    if (textnorm::normalize(e.reference_text, agents_.options().profile).empty()) {
      throw MalformedManifest("reference_text of '" + e.id + "' is empty after normalization", i + 1);
    }
  }

  std::vector<SimTrajectory> results(manifest.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < manifest.size(); i = next++) {
      try {
        results[i] = run_utterance(manifest[i]);
      } catch (const std::exception& e) {
        SimTrajectory failed;
        failed.utterance_id = manifest[i].id;
        failed.dataset_tag = manifest[i].dataset_tag;
        failed.metric_mode = manifest[i].metric_mode;
        failed.reference_text = manifest[i].reference_text;
        failed.terminal_reason = TerminalReason::kStalledError;
        failed.error = e.what();
        results[i] = std::move(failed);
      }
    }
  };
  const int n_workers = std::clamp<int>(options_.workers, 1, static_cast<int>(manifest.size()));
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  std::sort(results.begin(), results.end(),
            [](const SimTrajectory& a, const SimTrajectory& b) { return a.utterance_id < b.utterance_id; });

  BatchResult out;
  out.max_loops = options_.max_loops;
  out.datasets = loop_reports(results, dataset_order, options_.max_loops, agents_.options().profile);
  out.trajectories = std::move(results);
  return out;
}

std::vector<DatasetReport> loop_reports(const std::vector<SimTrajectory>& trajectories,
                                        const std::vector<std::string>& dataset_order, int max_loops,
                                        const textnorm::NormalizationProfile& profile) {
  std::vector<DatasetReport> reports;
  for (const auto& tag : dataset_order) {
    std::vector<const SimTrajectory*> members;
    for (const auto& t : trajectories) {
      if (t.dataset_tag == tag) members.push_back(&t);
    }
    if (members.empty()) continue;

    DatasetReport report;
    report.tag = tag;
    report.mode = members.front()->metric_mode;

    std::vector<textnorm::TokenSequence> refs;
    for (const auto* m : members) refs.push_back(textnorm::tokenize_raw(m->reference_text, report.mode, profile));

    for (int t = 0; t <= max_loops; ++t) {
      metrics::AlignmentCounts totals;
      std::vector<metrics::TokenPair> pairs;
      std::vector<int> outcomes;
      std::size_t flagged = 0;
      for (std::size_t i = 0; i < members.size(); ++i) {
        const SimTrajectory& traj = *members[i];
        const int idx = std::min(t, traj.terminal_loop());
        std::string transcript;
        int outcome = 0;
        bool is_flagged = false;
        if (idx >= 0) {
          const SimState& state = traj.states[static_cast<std::size_t>(idx)];
          transcript = state.transcript;
          outcome = state.verdict.equivalent;
          is_flagged = state.verdict.flagged;
        }
        if (traj.terminal_reason == TerminalReason::kStalledError && t > traj.terminal_loop()) is_flagged = true;
        if (is_flagged) ++flagged;

        textnorm::TokenSequence hyp = textnorm::tokenize_raw(transcript, report.mode, profile);
        totals += metrics::align(refs[i], hyp);
        pairs.emplace_back(refs[i], std::move(hyp));
        outcomes.push_back(outcome);
      }
      metrics::MetricReport row;
      row.loop_index = t;
      row.token_error_rate = metrics::token_error_rate(totals);
      row.sentence_error_rate = metrics::sentence_error_rate(pairs);
      row.s2er = metrics::s2er(outcomes);
      row.n_utterances = members.size();
      row.n_flagged = flagged;
      report.loops.push_back(row);
    }
    reports.push_back(std::move(report));
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Output files

json metrics_to_json(const BatchResult& result) {
  json datasets = json::array();
  for (const auto& d : result.datasets) {
    json loops = json::array();
    for (const auto& r : d.loops) {
      loops.push_back({{"loop", r.loop_index},
                       {"token_error_rate", r.token_error_rate},
                       {"sentence_error_rate", r.sentence_error_rate},
                       {"s2er", r.s2er},
                       {"n_utterances", r.n_utterances},
                       {"n_flagged", r.n_flagged}});
    }
    datasets.push_back({{"tag", d.tag},
                        {"mode", textnorm::to_string(d.mode)},
                        {"token_metric", textnorm::metric_name(d.mode)},
                        {"loops", std::move(loops)}});
  }
  return json{{"max_loops", result.max_loops}, {"accounting", "frozen_pass"}, {"datasets", std::move(datasets)}};
}

std::vector<DatasetReport> metrics_from_json(const json& j, int* max_loops) {
  if (max_loops) *max_loops = j.value("max_loops", 0);
  std::vector<DatasetReport> out;
  for (const auto& d : j.at("datasets")) {
    DatasetReport rep;
    rep.tag = d.at("tag").get<std::string>();
    rep.mode = textnorm::parse_token_mode(d.at("mode").get<std::string>());
    for (const auto& r : d.at("loops")) {
      metrics::MetricReport row;
      row.loop_index = r.at("loop").get<int>();
      row.token_error_rate = r.at("token_error_rate").get<double>();
      row.sentence_error_rate = r.at("sentence_error_rate").get<double>();
      row.s2er = r.at("s2er").get<double>();
      row.n_utterances = r.at("n_utterances").get<std::size_t>();
      row.n_flagged = r.value("n_flagged", std::size_t{0});
      rep.loops.push_back(row);
    }
    out.push_back(std::move(rep));
  }
  return out;
}

void write_batch(const fs::path& dir, const BatchResult& result) {
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "trajectories.jsonl", std::ios::binary);
    for (const auto& t : result.trajectories) out << json(t).dump() << '\n';
  }
  {
    std::ofstream out(dir / "metrics.json", std::ios::binary);
    out << metrics_to_json(result).dump(2) << '\n';
  }
}

BatchResult read_batch(const fs::path& dir) {
  BatchResult result;
  std::ifstream metrics_in(dir / "metrics.json");
  if (!metrics_in) throw ConfigError("no metrics.json in " + dir.string());
  try {
    result.datasets = metrics_from_json(json::parse(metrics_in), &result.max_loops);
    std::ifstream traj_in(dir / "trajectories.jsonl");
    std::string line;
    while (traj_in && std::getline(traj_in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      result.trajectories.push_back(json::parse(line).get<SimTrajectory>());
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed run directory " + dir.string() + ": " + e.what());
  }
  return result;
}

}  // namespace iasr::sim
