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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace iasr::gateway {

enum class Role { kAsr, kLlm, kTts };
enum class ProviderKind { kLive, kScripted };

std::string_view to_string(Role role);
Role parse_role(std::string_view name);

struct Sampling {
  double temperature = 0.0;
  int max_tokens = 1024;
};

// Speech input or output. `text` is set on placeholder audio produced by the
// scripted TTS provider and lets a scripted ASR echo it back.
struct AudioRef {
  std::string locator;
  int sample_rate = 16000;
  std::optional<std::string> text;

  friend bool operator==(const AudioRef&, const AudioRef&) = default;
};

void to_json(nlohmann::json& j, const AudioRef& a);
void from_json(const nlohmann::json& j, AudioRef& a);

struct ChatMessage {
  std::string role;
  std::string content;
};

// Identifies one request inside a scenario: which utterance, which turn,
// which agent prompt, which parse attempt. Scripted lookups key on it and
// the call counters tally by agent.
struct RequestContext {
  std::string utterance_id;
  std::optional<int> turn;
  std::string agent;
  int attempt = 0;
};

class ScenarioScript;

struct BackendBinding {
  Role role = Role::kLlm;
  ProviderKind provider = ProviderKind::kScripted;
  std::string endpoint;
  std::string model_name;
  std::shared_ptr<const ScenarioScript> script;
  Sampling sampling;

  // Throws ConfigError unless exactly one of endpoint/script is populated
  // and it matches the provider.
  void validate() const;
};

// Scripted responses, loaded from JSONL. Each line is one of
//   {"role": R, "key": {...}, "response": S, "delay_ms": N}
//   {"role": R, "default_policy": "echo" | "error"}
// A key either holds a "fingerprint" or any subset of utt/turn/agent/attempt.
// Lookup: exact fingerprint first, then the structured entry whose fields
// all match with the most fields specified (file order breaks ties).
class ScenarioScript {
 public:
  struct Key {
    std::optional<std::string> fingerprint;
    std::optional<std::string> utt;
    std::optional<int> turn;
    std::optional<std::string> agent;
    std::optional<int> attempt;

    int specificity() const;
    bool matches(const RequestContext& ctx) const;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct Entry {
    Role role = Role::kLlm;
    Key key;
    std::string response;
    std::chrono::milliseconds delay{0};
  };
  enum class DefaultPolicy { kError, kEcho };

  ScenarioScript() = default;

  static ScenarioScript load(const std::filesystem::path& path);
  static ScenarioScript parse(std::string_view jsonl);

  // Throws ConfigError on a duplicate key for the same role.
  void add(Entry entry);
  void set_default_policy(Role role, DefaultPolicy policy);
  DefaultPolicy default_policy(Role role) const;

  const Entry* lookup(Role role, std::string_view fingerprint, const RequestContext& ctx) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }

  std::string to_jsonl() const;

 private:
  std::vector<Entry> entries_;
  std::map<Role, DefaultPolicy> policies_;
};

// Stable 64-bit FNV-1a, rendered as 16 hex digits.
std::string stable_hash(std::string_view data);

// Fingerprint of a chat request: hash of role plus the rendered prompt with
// whitespace runs collapsed.
std::string chat_fingerprint(const std::vector<ChatMessage>& messages);

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
};

struct MultipartPart {
  std::string name;
  std::string content;
  std::string filename;
  std::string content_type;
};

// Transport used by live providers. Returns std::nullopt on a transport
// failure (connection refused, timeout); any HTTP status is a response.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual std::optional<HttpResponse> post_json(const std::string& url, const std::string& body) = 0;
  virtual std::optional<HttpResponse> post_multipart(const std::string& url,
                                                     const std::vector<MultipartPart>& parts) = 0;
  virtual bool reachable(const std::string& url) = 0;
};

std::unique_ptr<HttpTransport> make_http_transport(std::chrono::seconds timeout);

struct GatewayOptions {
  std::optional<std::filesystem::path> cache_dir;
  bool cache_stochastic = false;
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{250};
  int max_in_flight_per_role = 4;
  std::filesystem::path spool_dir = std::filesystem::temp_directory_path() / "iasr-spool";
  std::chrono::seconds timeout{120};
};

struct CallCounters {
  std::map<std::string, std::uint64_t> by_agent;  // scripted + live model calls
  std::uint64_t network_requests = 0;
  std::uint64_t cache_hits = 0;

  std::uint64_t agent(const std::string& name) const;
};

class Gateway {
 public:
  explicit Gateway(GatewayOptions options = {}, std::unique_ptr<HttpTransport> transport = nullptr);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Each operation rejects a binding of the wrong role before any I/O.
  std::string transcribe(const AudioRef& audio, const BackendBinding& binding,
                         const RequestContext& ctx = {});
  std::string chat(const std::vector<ChatMessage>& messages, const BackendBinding& binding,
                   const RequestContext& ctx = {});
  AudioRef synthesize(std::string_view text, const AudioRef& voice_ref,
                      const BackendBinding& binding, const RequestContext& ctx = {});

  // True for scripted bindings; live bindings must answer an HTTP request.
  bool probe(const BackendBinding& binding);

  CallCounters counters() const;
  void reset_counters();

 private:
  class RoleLimiter;

  std::string scripted(Role role, std::string_view fingerprint, const RequestContext& ctx,
                       const BackendBinding& binding, const std::optional<std::string>& echo);
  HttpResponse live_request(const BackendBinding& binding, const std::string& cache_material,
                            const std::function<std::optional<HttpResponse>()>& send);
  void count(const RequestContext& ctx, Role role);

  GatewayOptions options_;
  std::unique_ptr<HttpTransport> transport_;
  std::map<Role, std::unique_ptr<RoleLimiter>> limiters_;

  mutable std::mutex counters_mutex_;
  CallCounters counters_;
  std::mutex cache_mutex_;
};

}  // namespace iasr::gateway
