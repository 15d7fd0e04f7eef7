// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "ticl/errors.hpp"

namespace ticl {

struct GenerationRequest {
  std::string prompt;
  double temperature = 1.0;
  int max_tokens = 2048;
  std::optional<std::int64_t> seed;
  /// Telemetry label: "explore", "explain", "judge", ...
  std::string tag;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;

  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

struct GenerationResult {
  std::string text;
  TokenUsage usage;
  long latency_ms = 0;
  std::string provider_id;
  int attempt_count = 1;
};

struct ProviderConfig {
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env;
  int max_retries = 3;
  int backoff_base_ms = 500;
  int max_parallel = 4;
  /// Minimum spacing between request starts; 0 disables rate limiting.
  int min_interval_ms = 0;
  int timeout_ms = 120000;
};

void validate(const ProviderConfig& config);
void validate(const GenerationRequest& request);

/// One position of a batch: a result or the error that ended that item.
struct BatchItem {
  std::optional<GenerationResult> result;
  std::string error;
  ErrorKind error_kind = ErrorKind::kInternal;
  int status = 0;

  bool ok() const { return result.has_value(); }
};

/// Spaces request starts at least `interval` apart across threads.
class RateLimiter {
 public:
  explicit RateLimiter(std::chrono::milliseconds interval) : interval_(interval) {}
  void acquire();

 private:
  std::chrono::milliseconds interval_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point next_{};
};

/// Appends JSON-lines telemetry records (tag, latency, tokens). Latency and
/// wall-clock data live only here so run artifacts stay reproducible.
class TelemetrySink {
 public:
  explicit TelemetrySink(std::filesystem::path path) : path_(std::move(path)) {}
  void record(const GenerationRequest& request, const GenerationResult& result);

 private:
  std::filesystem::path path_;
  std::mutex mu_;
};

/// A text-generation endpoint. Implementations supply `attempt`; this class
/// owns retry with exponential backoff, rate limiting and batch fan-out.
/// Instances are safe to share across threads.
class Provider {
 public:
  explicit Provider(ProviderConfig config);
  virtual ~Provider() = default;
  Provider(const Provider&) = delete;
  Provider& operator=(const Provider&) = delete;

  /// Retries transient failures up to max_retries times (max_retries + 1
  /// attempts in total). Throws TransportError when attempts run out or on a
  /// permanent failure, ConfigError when credentials cannot be resolved.
  GenerationResult generate(const GenerationRequest& request);

  /// Results in request order; at most max_parallel requests in flight.
  /// A failing item never aborts the rest of the batch.
  std::vector<BatchItem> generate_batch(std::span<const GenerationRequest> requests);

  const ProviderConfig& config() const { return config_; }
  virtual std::string id() const = 0;

  void set_telemetry(std::shared_ptr<TelemetrySink> sink) { telemetry_ = std::move(sink); }
  /// Replaces the backoff sleep; tests use it to skip waiting.
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

 protected:
  /// One transport attempt. Throw TransportError on failure.
  virtual GenerationResult attempt(const GenerationRequest& request) = 0;

 private:
  ProviderConfig config_;
  RateLimiter limiter_;
  std::shared_ptr<TelemetrySink> telemetry_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
};

/// Rough whitespace token count, used where an endpoint reports no usage.
long approx_tokens(const std::string& text);

// ---------------------------------------------------------------------------
// Scripted provider

struct ScriptMatcher {
  enum class Kind { kAny, kSubstring, kRegex };
  Kind kind = Kind::kAny;
  std::string pattern;

  static ScriptMatcher any() { return {}; }
  static ScriptMatcher substring(std::string s) { return {Kind::kSubstring, std::move(s)}; }
  static ScriptMatcher regex(std::string s) { return {Kind::kRegex, std::move(s)}; }
};

using Responder = std::function<std::string(const GenerationRequest&)>;

struct ScriptEntry {
  ScriptMatcher matcher;
  /// Fixed response. "{{hash}}" is replaced by a hash of the prompt so
  /// repeated entries still produce prompt-dependent, reproducible text.
  std::string response;
  /// When set, overrides `response`.
  Responder responder;
  /// Non-zero: the attempt fails with this HTTP status instead of answering.
  int fail_status = 0;
  /// Remaining uses; std::nullopt means unlimited.
  std::optional<int> remaining = 1;
};

ScriptEntry reply(ScriptMatcher matcher, std::string response, std::optional<int> times = 1);
ScriptEntry reply_with(ScriptMatcher matcher, Responder responder, std::optional<int> times = std::nullopt);
ScriptEntry fail(ScriptMatcher matcher, int status, std::optional<int> times = 1);

/// Deterministic provider for tests and offline runs. Each attempt consumes
/// the first entry whose matcher applies to the prompt; no match raises
/// ScriptExhaustedError. Script consumption is serialized.
class ScriptedProvider : public Provider {
 public:
  explicit ScriptedProvider(std::vector<ScriptEntry> script, ProviderConfig config = default_config());

  static ProviderConfig default_config();

  /// Loads a script from JSON: [{"match": "any" | {"substring": s} |
  /// {"regex": s}, "response": s | "fail": status | "choice": [s...],
  /// "times": n | null}]. "choice" picks by hashing the prompt with "seed".
  static std::unique_ptr<ScriptedProvider> from_json_file(const std::filesystem::path& path,
                                                          ProviderConfig config = default_config());
  static std::unique_ptr<ScriptedProvider> from_json(const std::string& text, ProviderConfig config = default_config());

  std::string id() const override { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  /// Sleep applied outside the script lock on every attempt, so concurrent
  /// callers overlap.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  int calls() const;
  int calls_with_tag(const std::string& tag) const;
  int peak_in_flight() const;
  std::vector<GenerationRequest> log() const;

 protected:
  GenerationResult attempt(const GenerationRequest& request) override;

 private:
  std::vector<ScriptEntry> script_;
  std::vector<std::regex> compiled_;
  mutable std::mutex mu_;
  std::vector<GenerationRequest> log_;
  int in_flight_ = 0;
  int peak_ = 0;
  std::chrono::milliseconds latency_{0};
  std::string id_ = "scripted";
};

// ---------------------------------------------------------------------------
// HTTP provider

/// Request/response field mapping for a chat- or completions-style endpoint.
struct HttpProfile {
  ProviderConfig config;
  /// "messages" sends [{"role":"user","content":prompt}]; any other value
  /// names a top-level string field that receives the prompt.
  std::string prompt_field = "messages";
  /// JSON pointer to the generated text in the response.
  std::string output_path = "/choices/0/message/content";
  std::string prompt_tokens_path = "/usage/prompt_tokens";
  std::string completion_tokens_path = "/usage/completion_tokens";
};

class HttpProvider : public Provider {
 public:
  explicit HttpProvider(HttpProfile profile);
  std::string id() const override { return profile_.config.model_name; }

 protected:
  GenerationResult attempt(const GenerationRequest& request) override;

 private:
  HttpProfile profile_;
};

/// Splits "scheme://host[:port]/path" for the HTTP clients.
struct UrlParts {
  std::string scheme_host_port;
  std::string path;
};
UrlParts split_url(const std::string& url);

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body with optional bearer auth. Connection failures and
/// timeouts throw a transient TransportError with status 0.
HttpResponse http_post_json(const std::string& url, const std::string& bearer_token, const std::string& body,
                            int timeout_ms);

/// Resolves a bearer token from the named environment variable; empty name
/// means no auth. Throws ConfigError when the variable is unset.
std::string resolve_api_key(const std::string& env_name);

}  // namespace ticl
