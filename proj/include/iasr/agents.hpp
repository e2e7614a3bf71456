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
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "iasr/gateway.hpp"
#include "iasr/textnorm.hpp"

namespace iasr::agents {

enum class TemplateName { kRoute, kRefine, kJudge, kUser };

std::string_view to_string(TemplateName name);

// A prompt with named `{placeholder}` slots. Construction rejects any slot
// the template kind does not provide a value for.
class PromptTemplate {
 public:
  PromptTemplate(TemplateName name, std::string text);

  TemplateName name() const noexcept { return name_; }
  const std::string& text() const noexcept { return text_; }
  const std::vector<std::string>& placeholders() const noexcept { return placeholders_; }

  // Throws PreconditionViolation if a referenced slot has no value.
  std::string render(const std::map<std::string, std::string>& values) const;

  static const std::vector<std::string>& allowed_placeholders(TemplateName name);

 private:
  TemplateName name_;
  std::string text_;
  std::vector<std::string> placeholders_;
};

struct TemplateSet {
  PromptTemplate route;
  PromptTemplate refine;
  PromptTemplate judge;
  PromptTemplate user;

  static TemplateSet defaults();
  // Reads route.txt, refine.txt, judge.txt, user.txt; absent files keep
  // the built-in default.
  static TemplateSet load_dir(const std::filesystem::path& dir);
};

enum class RouteKind { kNewUtterance, kCorrectiveIntent };
enum class Strategy { kPhoneticSpelling, kContextualClarification, kDirectNegation };

std::string_view to_string(RouteKind kind);
RouteKind parse_route_kind(std::string_view name);
std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);
std::string_view strategy_hint(Strategy s);

struct RouteDecision {
  RouteKind kind = RouteKind::kNewUtterance;
  std::string raw_response;
  int parse_failures = 0;
};

struct CorrectionTrace {
  std::string locate;
  std::string reason;
  std::string replacement;
};

struct CorrectionResult {
  std::string corrected_text;
  CorrectionTrace trace;
  std::string raw_response;
  int parse_failures = 0;
};

struct JudgeVerdict {
  int equivalent = 0;
  std::string raw_response;
  int parse_failures = 0;
  bool short_circuit = false;
  // Set by callers that map an unparseable judgement to a mismatch.
  bool flagged = false;
};

struct CorrectionInstruction {
  std::string text;
  Strategy strategy = Strategy::kPhoneticSpelling;
  std::string raw_response;
  int parse_failures = 0;
};

void to_json(nlohmann::json& j, const RouteDecision& v);
void from_json(const nlohmann::json& j, RouteDecision& v);
void to_json(nlohmann::json& j, const CorrectionTrace& v);
void from_json(const nlohmann::json& j, CorrectionTrace& v);
void to_json(nlohmann::json& j, const CorrectionResult& v);
void from_json(const nlohmann::json& j, CorrectionResult& v);
void to_json(nlohmann::json& j, const JudgeVerdict& v);
void from_json(const nlohmann::json& j, JudgeVerdict& v);
void to_json(nlohmann::json& j, const CorrectionInstruction& v);
void from_json(const nlohmann::json& j, CorrectionInstruction& v);

// Response grammars. Each returns std::nullopt when the text does not match.
//   router:    last non-blank line is `ROUTE: NEW` or `ROUTE: CORRECTION`
//   judge:     last non-blank line is `VERDICT: EQUIVALENT` or `VERDICT: DIFFERENT`
//   corrector: ends with a ```FINAL fenced block holding the transcript
//   user:      non-empty text, or the last `INSTRUCTION: ` line when present
std::optional<RouteKind> parse_route_response(std::string_view raw);
std::optional<int> parse_judge_response(std::string_view raw);
std::optional<CorrectionResult> parse_corrector_response(std::string_view raw);
std::optional<std::string> parse_user_response(std::string_view raw);

// Uniform draw over the three correction strategies, or a pinned one.
class StrategySampler {
 public:
  explicit StrategySampler(std::uint64_t seed, std::optional<Strategy> pinned = std::nullopt);
  Strategy next();

 private:
  std::mt19937_64 rng_;
  std::optional<Strategy> pinned_;
};

struct AgentOptions {
  int parse_retries = 2;
  bool judge_short_circuit = true;
  double route_temperature = 0.0;
  double refine_temperature = 0.0;
  double judge_temperature = 0.0;
  double user_temperature = 0.7;
  textnorm::NormalizationProfile profile = textnorm::profile_by_name("default");
};

// The four LLM roles. Stateless apart from the gateway reference; the
// RequestContext passed in names the utterance and turn, the agent field is
// filled in here.
class Agents {
 public:
  Agents(gateway::Gateway& gateway, TemplateSet templates, AgentOptions options = {});

  RouteDecision route_intent(std::string_view hypothesis, std::string_view prev_transcript,
                             const gateway::BackendBinding& llm, gateway::RequestContext ctx = {});
  CorrectionResult correct(std::string_view prev_transcript, std::string_view hypothesis,
                           const gateway::BackendBinding& llm, gateway::RequestContext ctx = {});
  JudgeVerdict judge(std::string_view candidate, std::string_view ground_truth,
                     const gateway::BackendBinding& llm, gateway::RequestContext ctx = {});
  CorrectionInstruction generate_correction(std::string_view ground_truth,
                                            std::string_view prev_transcript,
                                            const gateway::BackendBinding& llm,
                                            StrategySampler& sampler,
                                            gateway::RequestContext ctx = {});

  const AgentOptions& options() const noexcept { return options_; }
  const TemplateSet& templates() const noexcept { return templates_; }

 private:
  template <typename Parsed, typename Parser>
  std::pair<Parsed, int> ask(const std::string& prompt, std::string_view reminder,
                             const gateway::BackendBinding& llm, double temperature,
                             gateway::RequestContext ctx, Parser parse, std::string& raw_out);

  gateway::Gateway& gateway_;
  TemplateSet templates_;
  AgentOptions options_;
};

}  // namespace iasr::agents
