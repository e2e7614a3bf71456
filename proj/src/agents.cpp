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

#include "iasr/agents.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "default_templates.hpp"
#include "iasr/error.hpp"

namespace iasr::agents {

using gateway::BackendBinding;
using gateway::ChatMessage;
using gateway::RequestContext;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(s.substr(start));
      break;
    }
    lines.push_back(s.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

std::optional<std::string_view> last_nonblank_line(std::string_view raw) {
  const auto lines = split_lines(raw);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    const auto t = trim(*it);
    if (!t.empty()) return t;
  }
  return std::nullopt;
}

bool is_ident_char(char c) { return (c >= 'a' && c <= 'z') || c == '_'; }

// Finds `{name}` slots with lowercase identifier names.
template <typename Fn>
void scan_placeholders(std::string_view text, Fn&& on_slot) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < text.size() && is_ident_char(text[j])) ++j;
    if (j > i + 1 && j < text.size() && text[j] == '}') {
      on_slot(i, j + 1, text.substr(i + 1, j - i - 1));
      i = j;
    }
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// "1. Locate: ..." / "**Reason:** ..." / "- Replacement: ..." -> (label, rest)
std::optional<std::pair<std::string, std::string>> trace_line(std::string_view line) {
  auto t = trim(line);
  while (!t.empty() && (std::isdigit(static_cast<unsigned char>(t.front())) ||
                        std::string_view(".()-*# ").find(t.front()) != std::string_view::npos)) {
    t.remove_prefix(1);
  }
  const auto colon = t.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  std::string label = lower(trim(t.substr(0, colon)));
  label.erase(std::remove(label.begin(), label.end(), '*'), label.end());
  std::string_view rest = t.substr(colon + 1);
  while (!rest.empty() && (rest.front() == '*' || rest.front() == ' ')) rest.remove_prefix(1);
  if (label == "surgical replacement") label = "replacement";
  if (label != "locate" && label != "reason" && label != "replacement") return std::nullopt;
  return std::make_pair(label, std::string(trim(rest)));
}

}  // namespace

std::string_view to_string(TemplateName name) {
  switch (name) {
    case TemplateName::kRoute: return "route";
    case TemplateName::kRefine: return "refine";
    case TemplateName::kJudge: return "judge";
    case TemplateName::kUser: return "user";
  }
  return "route";
}

const std::vector<std::string>& PromptTemplate::allowed_placeholders(TemplateName name) {
  static const std::vector<std::string> route{"prev_transcript", "hypothesis"};
  static const std::vector<std::string> refine{"prev_transcript", "hypothesis"};
  static const std::vector<std::string> judge{"hypothesis", "ground_truth"};
  static const std::vector<std::string> user{"ground_truth", "prev_transcript", "strategy_hint"};
  switch (name) {
    case TemplateName::kRoute: return route;
    case TemplateName::kRefine: return refine;
    case TemplateName::kJudge: return judge;
    case TemplateName::kUser: return user;
  }
  return route;
}

PromptTemplate::PromptTemplate(TemplateName name, std::string text)
    : name_(name), text_(std::move(text)) {
  const auto& allowed = allowed_placeholders(name_);
  scan_placeholders(text_, [&](std::size_t, std::size_t, std::string_view slot) {
    if (std::find(allowed.begin(), allowed.end(), slot) == allowed.end()) {
      throw ConfigError("template '" + std::string(to_string(name_)) + "' uses unknown placeholder {" +
                        std::string(slot) + "}");
    }
    if (std::find(placeholders_.begin(), placeholders_.end(), slot) == placeholders_.end()) {
      placeholders_.emplace_back(slot);
    }
  });
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  std::string out;
  std::size_t last = 0;
  scan_placeholders(text_, [&](std::size_t begin, std::size_t end, std::string_view slot) {
    auto it = values.find(std::string(slot));
    if (it == values.end()) {
      throw PreconditionViolation("no value for placeholder {" + std::string(slot) + "}");
    }
    out.append(text_, last, begin - last);
    out += it->second;
    last = end;
  });
  out.append(text_, last, std::string::npos);
  return out;
}

TemplateSet TemplateSet::defaults() {
  return TemplateSet{
      PromptTemplate(TemplateName::kRoute, std::string(default_templates::kRoute)),
      PromptTemplate(TemplateName::kRefine, std::string(default_templates::kRefine)),
      PromptTemplate(TemplateName::kJudge, std::string(default_templates::kJudge)),
      PromptTemplate(TemplateName::kUser, std::string(default_templates::kUser)),
  };
}

TemplateSet TemplateSet::load_dir(const std::filesystem::path& dir) {
  TemplateSet set = defaults();
  auto load = [&](PromptTemplate& slot, TemplateName name) {
    const auto path = dir / (std::string(to_string(name)) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) return;
    std::ostringstream ss;
    ss << in.rdbuf();
    slot = PromptTemplate(name, ss.str());
  };
  if (!std::filesystem::is_directory(dir)) {
    throw ConfigError("template directory not found: " + dir.string());
  }
  load(set.route, TemplateName::kRoute);
  load(set.refine, TemplateName::kRefine);
  load(set.judge, TemplateName::kJudge);
  load(set.user, TemplateName::kUser);
  return set;
}

std::string_view to_string(RouteKind kind) {
  return kind == RouteKind::kNewUtterance ? "new_utterance" : "corrective_intent";
}

RouteKind parse_route_kind(std::string_view name) {
  if (name == "new_utterance") return RouteKind::kNewUtterance;
  if (name == "corrective_intent") return RouteKind::kCorrectiveIntent;
  throw PreconditionViolation("unknown route kind '" + std::string(name) + "'");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kPhoneticSpelling: return "phonetic_spelling";
    case Strategy::kContextualClarification: return "contextual_clarification";
    case Strategy::kDirectNegation: return "direct_negation";
  }
  return "phonetic_spelling";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "phonetic_spelling") return Strategy::kPhoneticSpelling;
  if (name == "contextual_clarification") return Strategy::kContextualClarification;
  if (name == "direct_negation") return Strategy::kDirectNegation;
  throw ConfigError("unknown correction strategy '" + std::string(name) + "'");
}

std::string_view strategy_hint(Strategy s) {
  switch (s) {
    case Strategy::kPhoneticSpelling:
      return "phonetic spelling. Spell the misrecognized word out letter by letter, or describe "
             "how it is written or pronounced (for example \"knight, K-N-I-G-H-T, with a silent K\").";
    case Strategy::kContextualClarification:
      return "contextual clarification. Explain which word you meant by giving context about it "
             "(for example \"knight as in the chess piece, not the time of day\").";
    case Strategy::kDirectNegation:
      return "direct negation. Say plainly that the wrong part is wrong and state the right one "
             "(for example \"no, not night, I said knight\").";
  }
  return "";
}

void to_json(json& j, const RouteDecision& v) {
  j = json{{"kind", to_string(v.kind)}, {"raw_response", v.raw_response},
           {"parse_failures", v.parse_failures}};
}
void from_json(const json& j, RouteDecision& v) {
  v.kind = parse_route_kind(j.at("kind").get<std::string>());
  v.raw_response = j.value("raw_response", "");
  v.parse_failures = j.value("parse_failures", 0);
}
void to_json(json& j, const CorrectionTrace& v) {
  j = json{{"locate", v.locate}, {"reason", v.reason}, {"replacement", v.replacement}};
}
void from_json(const json& j, CorrectionTrace& v) {
  v.locate = j.value("locate", "");
  v.reason = j.value("reason", "");
  v.replacement = j.value("replacement", "");
}
void to_json(json& j, const CorrectionResult& v) {
  j = json{{"corrected_text", v.corrected_text}, {"trace", v.trace},
           {"raw_response", v.raw_response}, {"parse_failures", v.parse_failures}};
}
void from_json(const json& j, CorrectionResult& v) {
  v.corrected_text = j.at("corrected_text").get<std::string>();
  v.trace = j.value("trace", CorrectionTrace{});
  v.raw_response = j.value("raw_response", "");
  v.parse_failures = j.value("parse_failures", 0);
}
void to_json(json& j, const JudgeVerdict& v) {
  j = json{{"equivalent", v.equivalent}, {"raw_response", v.raw_response},
           {"parse_failures", v.parse_failures}, {"short_circuit", v.short_circuit},
           {"flagged", v.flagged}};
}
void from_json(const json& j, JudgeVerdict& v) {
  v.equivalent = j.at("equivalent").get<int>();
  v.raw_response = j.value("raw_response", "");
  v.parse_failures = j.value("parse_failures", 0);
  v.short_circuit = j.value("short_circuit", false);
  v.flagged = j.value("flagged", false);
}
void to_json(json& j, const CorrectionInstruction& v) {
  j = json{{"text", v.text}, {"strategy", to_string(v.strategy)},
           {"raw_response", v.raw_response}, {"parse_failures", v.parse_failures}};
}
void from_json(const json& j, CorrectionInstruction& v) {
  v.text = j.at("text").get<std::string>();
  v.strategy = parse_strategy(j.at("strategy").get<std::string>());
  v.raw_response = j.value("raw_response", "");
  v.parse_failures = j.value("parse_failures", 0);
}

std::optional<RouteKind> parse_route_response(std::string_view raw) {
  const auto line = last_nonblank_line(raw);
  if (!line) return std::nullopt;
  if (*line == "ROUTE: NEW") return RouteKind::kNewUtterance;
  if (*line == "ROUTE: CORRECTION") return RouteKind::kCorrectiveIntent;
  return std::nullopt;
}

std::optional<int> parse_judge_response(std::string_view raw) {
  const auto line = last_nonblank_line(raw);
  if (!line) return std::nullopt;
  if (*line == "VERDICT: EQUIVALENT") return 1;
  if (*line == "VERDICT: DIFFERENT") return 0;
  return std::nullopt;
}

std::optional<CorrectionResult> parse_corrector_response(std::string_view raw) {
  const auto lines = split_lines(raw);
  std::size_t end = lines.size();
  while (end > 0 && trim(lines[end - 1]).empty()) --end;
  if (end == 0 || trim(lines[end - 1]) != "```") return std::nullopt;
  const std::size_t close = end - 1;
  std::optional<std::size_t> open;
  for (std::size_t i = close; i-- > 0;) {
    const auto t = trim(lines[i]);
    if (t == "```FINAL") {
      open = i;
      break;
    }
    if (t.rfind("```", 0) == 0) return std::nullopt;
  }
  if (!open) return std::nullopt;

  std::string text;
  for (std::size_t i = *open + 1; i < close; ++i) {
    const auto t = trim(lines[i]);
    if (t.empty()) continue;
    if (!text.empty()) text.push_back(' ');
    text += t;
  }
  if (text.empty()) return std::nullopt;

  CorrectionResult result;
  result.corrected_text = std::move(text);
  result.raw_response = std::string(raw);
  for (std::size_t i = 0; i < *open; ++i) {
    if (auto field = trace_line(lines[i])) {
      if (field->first == "locate") result.trace.locate = field->second;
      else if (field->first == "reason") result.trace.reason = field->second;
      else result.trace.replacement = field->second;
    }
  }
  return result;
}

std::optional<std::string> parse_user_response(std::string_view raw) {
  std::optional<std::string> tagged;
  for (auto line : split_lines(raw)) {
    const auto t = trim(line);
    if (t.rfind("INSTRUCTION: ", 0) == 0) tagged = std::string(trim(t.substr(13)));
  }
  if (tagged) {
    if (tagged->empty()) return std::nullopt;
    return tagged;
  }
  std::string text;
  for (auto line : split_lines(raw)) {
    const auto t = trim(line);
    if (t.empty()) continue;
    if (!text.empty()) text.push_back(' ');
    text += t;
  }
  if (text.empty()) return std::nullopt;
  return text;
}

StrategySampler::StrategySampler(std::uint64_t seed, std::optional<Strategy> pinned)
    : rng_(seed), pinned_(pinned) {}

Strategy StrategySampler::next() {
  // Drawn even when pinned so the stream position does not depend on pinning.
  const auto draw = rng_() % 3;
  if (pinned_) return *pinned_;
  return static_cast<Strategy>(draw);
}

Agents::Agents(gateway::Gateway& gateway, TemplateSet templates, AgentOptions options)
    : gateway_(gateway), templates_(std::move(templates)), options_(std::move(options)) {}

template <typename Parsed, typename Parser>
std::pair<Parsed, int> Agents::ask(const std::string& prompt, std::string_view reminder,
                                   const BackendBinding& llm, double temperature,
                                   RequestContext ctx, Parser parse, std::string& raw_out) {
  BackendBinding binding = llm;
  binding.sampling.temperature = temperature;
  std::vector<ChatMessage> messages{{"user", prompt}};
  const int attempts = 1 + std::max(0, options_.parse_retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    ctx.attempt = attempt;
    std::string raw = gateway_.chat(messages, binding, ctx);
    if (auto parsed = parse(raw)) {
      raw_out = std::move(raw);
      return {std::move(*parsed), attempt};
    }
    messages.push_back({"assistant", raw});
    messages.push_back({"user", std::string(reminder)});
    raw_out = std::move(raw);
  }
  throw UnparseableResponse(ctx.agent + " response did not match the expected format", raw_out,
                            attempts);
}

RouteDecision Agents::route_intent(std::string_view hypothesis, std::string_view prev_transcript,
                                   const BackendBinding& llm, RequestContext ctx) {
  if (trim(hypothesis).empty()) throw PreconditionViolation("route_intent needs a hypothesis");
  if (trim(prev_transcript).empty()) return RouteDecision{RouteKind::kNewUtterance, "", 0};
  ctx.agent = "route";
  const std::string prompt = templates_.route.render(
      {{"prev_transcript", std::string(prev_transcript)}, {"hypothesis", std::string(hypothesis)}});
  std::string raw;
  auto [kind, failures] = ask<RouteKind>(
      prompt, "Your answer must end with exactly one line: ROUTE: NEW or ROUTE: CORRECTION", llm,
      options_.route_temperature, ctx, parse_route_response, raw);
  return RouteDecision{kind, std::move(raw), failures};
}

CorrectionResult Agents::correct(std::string_view prev_transcript, std::string_view hypothesis,
                                 const BackendBinding& llm, RequestContext ctx) {
  if (trim(prev_transcript).empty() || trim(hypothesis).empty()) {
    throw PreconditionViolation("correct needs a previous transcript and a hypothesis");
  }
  ctx.agent = "refine";
  const std::string prompt = templates_.refine.render(
      {{"prev_transcript", std::string(prev_transcript)}, {"hypothesis", std::string(hypothesis)}});
  std::string raw;
  auto [result, failures] = ask<CorrectionResult>(
      prompt,
      "Your answer must end with the full corrected transcript in a fenced block:\n```FINAL\n"
      "<corrected transcript>\n```",
      llm, options_.refine_temperature, ctx, parse_corrector_response, raw);
  result.parse_failures = failures;
  return result;
}

JudgeVerdict Agents::judge(std::string_view candidate, std::string_view ground_truth,
                           const BackendBinding& llm, RequestContext ctx) {
  if (trim(ground_truth).empty()) throw PreconditionViolation("judge needs a ground truth");
  if (options_.judge_short_circuit &&
      textnorm::normalize(candidate, options_.profile) ==
          textnorm::normalize(ground_truth, options_.profile)) {
    JudgeVerdict v;
    v.equivalent = 1;
    v.short_circuit = true;
    return v;
  }
  ctx.agent = "judge";
  const std::string prompt = templates_.judge.render(
      {{"hypothesis", std::string(candidate)}, {"ground_truth", std::string(ground_truth)}});
  std::string raw;
  auto [equivalent, failures] = ask<int>(
      prompt, "Your answer must end with exactly one line: VERDICT: EQUIVALENT or VERDICT: DIFFERENT",
      llm, options_.judge_temperature, ctx, parse_judge_response, raw);
  JudgeVerdict v;
  v.equivalent = equivalent;
  v.raw_response = std::move(raw);
  v.parse_failures = failures;
  return v;
}

CorrectionInstruction Agents::generate_correction(std::string_view ground_truth,
                                                  std::string_view prev_transcript,
                                                  const BackendBinding& llm,
                                                  StrategySampler& sampler, RequestContext ctx) {
  if (textnorm::normalize(ground_truth, options_.profile) ==
      textnorm::normalize(prev_transcript, options_.profile)) {
    throw PreconditionViolation("nothing to correct: transcript already matches the ground truth");
  }
  const Strategy strategy = sampler.next();
  ctx.agent = "user";
  const std::string prompt = templates_.user.render({{"ground_truth", std::string(ground_truth)},
                                                     {"prev_transcript", std::string(prev_transcript)},
                                                     {"strategy_hint", std::string(strategy_hint(strategy))}});
  std::string raw;
  auto [text, failures] = ask<std::string>(prompt, "Reply with the spoken correction only, on one line.",
                                           llm, options_.user_temperature, ctx, parse_user_response, raw);
  return CorrectionInstruction{std::move(text), strategy, std::move(raw), failures};
}

}  // namespace iasr::agents
