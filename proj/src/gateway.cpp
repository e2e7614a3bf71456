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

#include "iasr/gateway.hpp"

#include <condition_variable>
#include <fstream>
#include <sstream>
#include <thread>

#include "iasr/error.hpp"

namespace iasr::gateway {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Role role) {
  switch (role) {
    case Role::kAsr: return "asr";
    case Role::kLlm: return "llm";
    case Role::kTts: return "tts";
  }
  return "llm";
}

Role parse_role(std::string_view name) {
  if (name == "asr") return Role::kAsr;
  if (name == "llm") return Role::kLlm;
  if (name == "tts") return Role::kTts;
  throw ConfigError("unknown model role '" + std::string(name) + "'");
}

void to_json(json& j, const AudioRef& a) {
  j = json{{"locator", a.locator}, {"sample_rate", a.sample_rate}};
  if (a.text) j["text"] = *a.text;
}

void from_json(const json& j, AudioRef& a) {
  a.locator = j.at("locator").get<std::string>();
  a.sample_rate = j.value("sample_rate", 16000);
  if (j.contains("text") && !j["text"].is_null()) a.text = j["text"].get<std::string>();
}

void BackendBinding::validate() const {
  const std::string who = std::string(to_string(role)) + " binding";
  if (provider == ProviderKind::kLive) {
    if (endpoint.empty()) throw ConfigError(who + ": live provider needs an endpoint");
    if (script) throw ConfigError(who + ": live provider must not carry a script");
  } else {
    if (!script) throw ConfigError(who + ": scripted provider needs a script");
    if (!endpoint.empty()) throw ConfigError(who + ": scripted provider must not carry an endpoint");
  }
  if (sampling.temperature < 0.0) throw ConfigError(who + ": temperature must be >= 0");
  if (sampling.max_tokens <= 0) throw ConfigError(who + ": max_tokens must be positive");
}

std::string stable_hash(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string chat_fingerprint(const std::vector<ChatMessage>& messages) {
  std::string rendered;
  for (const auto& m : messages) rendered += m.role + ": " + m.content + "\n";
  std::string collapsed;
  bool space = false;
  for (char c : rendered) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      space = !collapsed.empty();
      continue;
    }
    if (space) collapsed.push_back(' ');
    space = false;
    collapsed.push_back(c);
  }
  return stable_hash("llm\n" + collapsed);
}

// ---------------------------------------------------------------------------
// ScenarioScript

int ScenarioScript::Key::specificity() const {
  return (utt ? 1 : 0) + (turn ? 1 : 0) + (agent ? 1 : 0) + (attempt ? 1 : 0);
}

bool ScenarioScript::Key::matches(const RequestContext& ctx) const {
  if (fingerprint) return false;
  if (utt && *utt != ctx.utterance_id) return false;
  if (turn && (!ctx.turn || *turn != *ctx.turn)) return false;
  if (agent && *agent != ctx.agent) return false;
  if (attempt && *attempt != ctx.attempt) return false;
  return true;
}

void ScenarioScript::add(Entry entry) {
  for (const auto& e : entries_) {
    if (e.role == entry.role && e.key == entry.key) {
      throw ConfigError("duplicate script key for role " + std::string(to_string(entry.role)));
    }
  }
  entries_.push_back(std::move(entry));
}

void ScenarioScript::set_default_policy(Role role, DefaultPolicy policy) { policies_[role] = policy; }

ScenarioScript::DefaultPolicy ScenarioScript::default_policy(Role role) const {
  auto it = policies_.find(role);
  return it == policies_.end() ? DefaultPolicy::kError : it->second;
}

const ScenarioScript::Entry* ScenarioScript::lookup(Role role, std::string_view fingerprint,
                                                    const RequestContext& ctx) const {
  for (const auto& e : entries_) {
    if (e.role == role && e.key.fingerprint && *e.key.fingerprint == fingerprint) return &e;
  }
  const Entry* best = nullptr;
  for (const auto& e : entries_) {
    if (e.role != role || !e.key.matches(ctx)) continue;
    if (!best || e.key.specificity() > best->key.specificity()) best = &e;
  }
  return best;
}

namespace {

ScenarioScript::Key parse_key(const json& k) {
  ScenarioScript::Key key;
  if (!k.is_object()) throw ConfigError("script key must be an object");
  for (const auto& [name, value] : k.items()) {
    if (name == "fingerprint") key.fingerprint = value.get<std::string>();
    else if (name == "utt") key.utt = value.get<std::string>();
    else if (name == "turn") key.turn = value.get<int>();
    else if (name == "agent") key.agent = value.get<std::string>();
    else if (name == "attempt") key.attempt = value.get<int>();
    else throw ConfigError("unknown script key field '" + name + "'");
  }
  if (key.fingerprint && key.specificity() > 0) {
    throw ConfigError("a fingerprint key cannot be combined with other fields");
  }
  return key;
}

json key_to_json(const ScenarioScript::Key& key) {
  json k = json::object();
  if (key.fingerprint) k["fingerprint"] = *key.fingerprint;
  if (key.utt) k["utt"] = *key.utt;
  if (key.turn) k["turn"] = *key.turn;
  if (key.agent) k["agent"] = *key.agent;
  if (key.attempt) k["attempt"] = *key.attempt;
  return k;
}

}  // namespace

ScenarioScript ScenarioScript::parse(std::string_view jsonl) {
  ScenarioScript script;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const Role role = parse_role(j.at("role").get<std::string>());
      if (j.contains("default_policy")) {
        const auto p = j["default_policy"].get<std::string>();
        if (p == "echo") script.set_default_policy(role, DefaultPolicy::kEcho);
        else if (p == "error") script.set_default_policy(role, DefaultPolicy::kError);
        else throw ConfigError("unknown default_policy '" + p + "'");
        continue;
      }
      Entry e;
      e.role = role;
      e.key = parse_key(j.value("key", json::object()));
      e.response = j.at("response").get<std::string>();
      e.delay = std::chrono::milliseconds(j.value("delay_ms", 0));
      script.add(std::move(e));
    } catch (const json::exception& ex) {
      throw ConfigError("script line " + std::to_string(lineno) + ": " + ex.what());
    } catch (const ConfigError& ex) {
      throw ConfigError("script line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return script;
}

ScenarioScript ScenarioScript::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario script " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ScenarioScript::to_jsonl() const {
  std::string out;
  for (const auto& [role, policy] : policies_) {
    json j{{"role", to_string(role)}, {"default_policy", policy == DefaultPolicy::kEcho ? "echo" : "error"}};
    out += j.dump() + "\n";
  }
  for (const auto& e : entries_) {
    json j{{"role", to_string(e.role)}, {"key", key_to_json(e.key)}, {"response", e.response}};
    if (e.delay.count() > 0) j["delay_ms"] = e.delay.count();
    out += j.dump() + "\n";
  }
  return out;
}

std::uint64_t CallCounters::agent(const std::string& name) const {
  auto it = by_agent.find(name);
  return it == by_agent.end() ? 0 : it->second;
}

// ---------------------------------------------------------------------------
// Gateway

class Gateway::RoleLimiter {
 public:
  explicit RoleLimiter(int slots) : free_(slots) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return free_ > 0; });
    --free_;
  }
  void release() {
    {
      std::lock_guard lock(mutex_);
      ++free_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int free_;
};

namespace {

struct SlotGuard {
  explicit SlotGuard(auto& limiter) : release([&limiter] { limiter.release(); }) { limiter.acquire(); }
  ~SlotGuard() { release(); }
  std::function<void()> release;
};

void require_role(const BackendBinding& binding, Role expected) {
  if (binding.role != expected) {
    throw PreconditionViolation("binding for role " + std::string(to_string(binding.role)) +
                                " used as " + std::string(to_string(expected)));
  }
  binding.validate();
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionViolation("audio locator not resolvable: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

Gateway::Gateway(GatewayOptions options, std::unique_ptr<HttpTransport> transport)
    : options_(std::move(options)), transport_(std::move(transport)) {
  if (!transport_) transport_ = make_http_transport(options_.timeout);
  const int slots = std::max(1, options_.max_in_flight_per_role);
  for (Role r : {Role::kAsr, Role::kLlm, Role::kTts}) limiters_[r] = std::make_unique<RoleLimiter>(slots);
}

Gateway::~Gateway() = default;

void Gateway::count(const RequestContext& ctx, Role role) {
  std::lock_guard lock(counters_mutex_);
  const std::string role_name(to_string(role));
  ++counters_.by_agent[role_name];
  if (!ctx.agent.empty() && ctx.agent != role_name) ++counters_.by_agent[ctx.agent];
}

CallCounters Gateway::counters() const {
  std::lock_guard lock(counters_mutex_);
  return counters_;
}

void Gateway::reset_counters() {
  std::lock_guard lock(counters_mutex_);
  counters_ = {};
}

std::string Gateway::scripted(Role role, std::string_view fingerprint, const RequestContext& ctx,
                              const BackendBinding& binding, const std::optional<std::string>& echo) {
  const ScenarioScript& script = *binding.script;
  if (const auto* entry = script.lookup(role, fingerprint, ctx)) {
    if (entry->delay.count() > 0) std::this_thread::sleep_for(entry->delay);
    return entry->response;
  }
  if (script.default_policy(role) == ScenarioScript::DefaultPolicy::kEcho && echo) return *echo;
  std::string where = "utt=" + ctx.utterance_id +
                      " turn=" + (ctx.turn ? std::to_string(*ctx.turn) : std::string("-")) +
                      " agent=" + ctx.agent + " attempt=" + std::to_string(ctx.attempt) +
                      " fingerprint=" + std::string(fingerprint);
  throw ScriptExhausted("no scripted " + std::string(to_string(role)) + " response for " + where);
}

HttpResponse Gateway::live_request(const BackendBinding& binding, const std::string& cache_material,
                                   const std::function<std::optional<HttpResponse>()>& send) {
  const bool cacheable = options_.cache_dir &&
                         (binding.sampling.temperature == 0.0 || options_.cache_stochastic);
  fs::path cache_file;
  if (cacheable) {
    std::ostringstream key;
    key << to_string(binding.role) << '\n' << binding.endpoint << '\n' << binding.model_name << '\n'
        << binding.sampling.temperature << '\n' << binding.sampling.max_tokens << '\n' << cache_material;
    cache_file = *options_.cache_dir / (stable_hash(key.str()) + ".bin");
    std::lock_guard lock(cache_mutex_);
    std::ifstream in(cache_file, std::ios::binary);
    if (in) {
      std::ostringstream ss;
      ss << in.rdbuf();
      std::lock_guard counters_lock(counters_mutex_);
      ++counters_.cache_hits;
      return HttpResponse{200, ss.str(), ""};
    }
  }

  std::optional<HttpResponse> response;
  {
    SlotGuard slot(*limiters_.at(binding.role));
    for (int attempt = 0; attempt < std::max(1, options_.max_attempts); ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(options_.backoff_base * (1 << (attempt - 1)));
      {
        std::lock_guard lock(counters_mutex_);
        ++counters_.network_requests;
      }
      response = send();
      if (response) break;
    }
  }
  if (!response) {
    throw BackendUnavailable(std::string(to_string(binding.role)) + " endpoint unreachable: " +
                             binding.endpoint);
  }
  if (response->status < 200 || response->status >= 300) {
    throw BackendUnavailable(std::string(to_string(binding.role)) + " endpoint returned HTTP " +
                             std::to_string(response->status) + ": " + response->body.substr(0, 200));
  }
  if (cacheable) {
    std::lock_guard lock(cache_mutex_);
    fs::create_directories(cache_file.parent_path());
    const fs::path tmp = cache_file.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      out << response->body;
    }
    fs::rename(tmp, cache_file);
  }
  return *response;
}

std::string Gateway::transcribe(const AudioRef& audio, const BackendBinding& binding,
                                const RequestContext& ctx) {
  require_role(binding, Role::kAsr);
  count(ctx, Role::kAsr);
  if (binding.provider == ProviderKind::kScripted) {
    return scripted(Role::kAsr, stable_hash("asr\n" + audio.locator), ctx, binding, audio.text);
  }
  const std::string bytes = read_file(audio.locator);
  const std::vector<MultipartPart> parts{
      {"file", bytes, fs::path(audio.locator).filename().string(), "application/octet-stream"},
      {"model", binding.model_name, "", ""},
  };
  const HttpResponse res = live_request(binding, stable_hash(bytes),
                                        [&] { return transport_->post_multipart(binding.endpoint, parts); });
  try {
    const json j = json::parse(res.body);
    return j.at("text").get<std::string>();
  } catch (const json::exception& ex) {
    throw BackendUnavailable(std::string("malformed ASR response: ") + ex.what());
  }
}

std::string Gateway::chat(const std::vector<ChatMessage>& messages, const BackendBinding& binding,
                          const RequestContext& ctx) {
  require_role(binding, Role::kLlm);
  if (messages.empty()) throw PreconditionViolation("chat needs at least one message");
  count(ctx, Role::kLlm);
  if (binding.provider == ProviderKind::kScripted) {
    return scripted(Role::kLlm, chat_fingerprint(messages), ctx, binding, std::nullopt);
  }
  json body{{"model", binding.model_name},
            {"temperature", binding.sampling.temperature},
            {"max_tokens", binding.sampling.max_tokens},
            {"messages", json::array()}};
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  const std::string payload = body.dump();
  const HttpResponse res =
      live_request(binding, payload, [&] { return transport_->post_json(binding.endpoint, payload); });
  try {
    const json j = json::parse(res.body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& ex) {
    throw BackendUnavailable(std::string("malformed chat response: ") + ex.what());
  }
}

AudioRef Gateway::synthesize(std::string_view text, const AudioRef& voice_ref,
                             const BackendBinding& binding, const RequestContext& ctx) {
  require_role(binding, Role::kTts);
  if (text.empty()) throw PreconditionViolation("synthesize needs non-empty text");
  count(ctx, Role::kTts);
  if (binding.provider == ProviderKind::kScripted) {
    AudioRef out;
    out.locator = "scripted-tts://" + stable_hash(std::string(text) + "\n" + voice_ref.locator);
    out.sample_rate = voice_ref.sample_rate;
    out.text = std::string(text);
    return out;
  }
  const std::string voice = read_file(voice_ref.locator);
  const std::vector<MultipartPart> parts{
      {"text", std::string(text), "", ""},
      {"model", binding.model_name, "", ""},
      {"reference_audio", voice, fs::path(voice_ref.locator).filename().string(),
       "application/octet-stream"},
  };
  const HttpResponse res =
      live_request(binding, std::string(text) + "\n" + stable_hash(voice),
                   [&] { return transport_->post_multipart(binding.endpoint, parts); });
  if (res.body.empty()) throw BackendUnavailable("TTS endpoint returned no audio");
  fs::create_directories(options_.spool_dir);
  const fs::path out_path = options_.spool_dir / (stable_hash(res.body) + ".wav");
  {
    std::ofstream out(out_path, std::ios::binary);
    out << res.body;
  }
  return AudioRef{out_path.string(), voice_ref.sample_rate, std::nullopt};
}

bool Gateway::probe(const BackendBinding& binding) {
  if (binding.provider == ProviderKind::kScripted) return binding.script != nullptr;
  return transport_->reachable(binding.endpoint);
}

}  // namespace iasr::gateway
