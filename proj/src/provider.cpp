// SPDX-License-Identifier: Apache-2.0
#include "ticl/provider.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace ticl {

void validate(const ProviderConfig& config) {
  if (config.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (config.max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
  if (config.backoff_base_ms < 0) throw ConfigError("backoff_base_ms must be >= 0");
}

void validate(const GenerationRequest& request) {
  if (request.prompt.empty()) throw ConfigError("generation request has an empty prompt");
  if (request.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (request.temperature < 0.0) throw ConfigError("temperature must be >= 0");
}

void RateLimiter::acquire() {
  if (interval_.count() <= 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

void TelemetrySink::record(const GenerationRequest& request, const GenerationResult& result) {
  nlohmann::ordered_json j;
  j["time_ms"] = std::chrono::duration_cast<std::chrono::milliseconds>(
                     std::chrono::system_clock::now().time_since_epoch())
                     .count();
  j["tag"] = request.tag;
  j["provider"] = result.provider_id;
  j["latency_ms"] = result.latency_ms;
  j["prompt_tokens"] = result.usage.prompt_tokens;
  j["completion_tokens"] = result.usage.completion_tokens;
  j["attempts"] = result.attempt_count;
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app);
  out << j.dump() << '\n';
}

Provider::Provider(ProviderConfig config)
    : config_(std::move(config)), limiter_(std::chrono::milliseconds(config_.min_interval_ms)) {
  validate(config_);
  sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

GenerationResult Provider::generate(const GenerationRequest& request) {
  validate(request);
  const int max_attempts = config_.max_retries + 1;
  for (int attempt_no = 1;; ++attempt_no) {
    limiter_.acquire();
    const auto start = std::chrono::steady_clock::now();
    try {
      GenerationResult result = attempt(request);
      result.attempt_count = attempt_no;
      if (result.latency_ms == 0) {
        result.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - start)
                                .count();
      }
      if (result.provider_id.empty()) result.provider_id = id();
      if (telemetry_) telemetry_->record(request, result);
      return result;
    } catch (const TransportError& e) {
      if (!e.transient()) throw;
      if (attempt_no >= max_attempts) {
        throw TransportError(id() + ": giving up after " + std::to_string(attempt_no) +
                                 " attempts; last error: " + e.what(),
                             e.status(), true);
      }
    }
    const long delay = static_cast<long>(config_.backoff_base_ms) << std::min(attempt_no - 1, 16);
    if (delay > 0) sleeper_(std::chrono::milliseconds(delay));
  }
}

std::vector<BatchItem> Provider::generate_batch(std::span<const GenerationRequest> requests) {
  std::vector<BatchItem> items(requests.size());
  if (requests.empty()) return items;

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        items[i].result = generate(requests[i]);
      } catch (const TransportError& e) {
        items[i].error = e.what();
        items[i].error_kind = e.kind();
        items[i].status = e.status();
      } catch (const Error& e) {
        items[i].error = e.what();
        items[i].error_kind = e.kind();
      } catch (const std::exception& e) {
        items[i].error = e.what();
      }
    }
  };

  const std::size_t workers = std::min<std::size_t>(config_.max_parallel, requests.size());
  if (workers == 1) {
    worker();
    return items;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();  // joins
  return items;
}

long approx_tokens(const std::string& text) {
  std::istringstream in(text);
  long n = 0;
  std::string word;
  while (in >> word) ++n;
  return n;
}

std::string resolve_api_key(const std::string& env_name) {
  if (env_name.empty()) return {};
  const char* value = std::getenv(env_name.c_str());
  if (value == nullptr || *value == '\0') {
    throw ConfigError("environment variable " + env_name + " is not set (provider credentials)");
  }
  return value;
}

UrlParts split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint_url must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace ticl
