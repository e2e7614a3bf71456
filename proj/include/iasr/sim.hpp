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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iasr/agents.hpp"
#include "iasr/gateway.hpp"
#include "iasr/metrics.hpp"
#include "iasr/session.hpp"
#include "iasr/textnorm.hpp"

namespace iasr::sim {

struct ManifestEntry {
  std::string id;
  std::optional<gateway::AudioRef> audio;
  std::string reference_text;
  std::string dataset_tag;
  textnorm::TokenMode metric_mode = textnorm::TokenMode::kWord;
  // Precomputed base-ASR output; when set, loop 0 skips transcription.
  std::optional<std::string> hypothesis;
};

// JSONL, one object per line:
//   {"id", "reference_text", "dataset_tag", "metric_mode", "audio"?, "hypothesis"?}
// "audio" is a path string or an AudioRef object. Throws MalformedManifest
// with the offending line number.
std::vector<ManifestEntry> parse_manifest(std::istream& in);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

enum class SimMode { kTextShortcut, kAudioLoop };
enum class TerminalReason { kJudgePass, kMaxLoops, kStalledError };

std::string_view to_string(SimMode mode);
SimMode parse_sim_mode(std::string_view name);
std::string_view to_string(TerminalReason reason);
TerminalReason parse_terminal_reason(std::string_view name);

struct SimState {
  int loop = 0;
  std::string transcript;
  agents::JudgeVerdict verdict;
  // Absent at loop 0.
  std::optional<agents::CorrectionInstruction> instruction;
  std::optional<std::string> hypothesis;
  std::optional<agents::CorrectionTrace> trace;
};

struct SimTrajectory {
  std::string utterance_id;
  std::string dataset_tag;
  textnorm::TokenMode metric_mode = textnorm::TokenMode::kWord;
  std::string reference_text;
  std::vector<SimState> states;
  TerminalReason terminal_reason = TerminalReason::kMaxLoops;
  std::optional<std::string> error;

  // Loop index of the last recorded state, -1 when loop 0 itself stalled.
  int terminal_loop() const noexcept { return static_cast<int>(states.size()) - 1; }
};

void to_json(nlohmann::json& j, const SimTrajectory& t);
void from_json(const nlohmann::json& j, SimTrajectory& t);

struct SimOptions {
  int max_loops = 10;
  SimMode mode = SimMode::kTextShortcut;
  std::uint64_t seed = 0;
  std::optional<agents::Strategy> pinned_strategy;
  int workers = 4;
};

struct DatasetReport {
  std::string tag;
  textnorm::TokenMode mode = textnorm::TokenMode::kWord;
  std::vector<metrics::MetricReport> loops;
};

struct BatchResult {
  int max_loops = 0;
  std::vector<SimTrajectory> trajectories;  // sorted by utterance id
  std::vector<DatasetReport> datasets;      // manifest first-appearance order
};

// Per-loop tables over finished trajectories. The row for loop t scores each
// utterance at min(t, terminal loop): once judged equivalent an utterance
// stays frozen at its passing transcript.
std::vector<DatasetReport> loop_reports(const std::vector<SimTrajectory>& trajectories,
                                        const std::vector<std::string>& dataset_order, int max_loops,
                                        const textnorm::NormalizationProfile& profile);

// Single-utterance iterative correction with the router bypassed:
// judge Y_{t-1}; on mismatch the simulated user produces C_t, which is either
// fed to the corrector directly (text shortcut) or synthesized and
// re-transcribed (audio loop) to give H_t; the corrector yields Y_t.
class Simulator {
 public:
  // Throws ConfigError if a binding required by the mode is missing.
  Simulator(gateway::Gateway& gateway, session::BackendSet bindings, agents::TemplateSet templates,
            agents::AgentOptions agent_options, SimOptions options);

  SimTrajectory run_utterance(const ManifestEntry& entry);
  // Throws EmptyBatch on an empty manifest, MalformedManifest if one dataset
  // tag mixes metric modes.
  BatchResult run_batch(const std::vector<ManifestEntry>& manifest);

  const SimOptions& options() const noexcept { return options_; }

 private:
  gateway::Gateway& gateway_;
  session::BackendSet bindings_;
  agents::Agents agents_;
  SimOptions options_;
};

// Per-utterance strategy seed derived from the run seed and the id, so the
// sequence does not depend on scheduling order.
std::uint64_t utterance_seed(std::uint64_t run_seed, const std::string& utterance_id);

// Output directory layout: trajectories.jsonl + metrics.json.
void write_batch(const std::filesystem::path& dir, const BatchResult& result);
BatchResult read_batch(const std::filesystem::path& dir);

nlohmann::json metrics_to_json(const BatchResult& result);
std::vector<DatasetReport> metrics_from_json(const nlohmann::json& j, int* max_loops = nullptr);

}  // namespace iasr::sim
