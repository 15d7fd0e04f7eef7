// SPDX-License-Identifier: Apache-2.0
#include <httplib.h>

#include <nlohmann/json.hpp>

#include "ticl/provider.hpp"

namespace ticl {

HttpResponse http_post_json(const std::string& url, const std::string& bearer_token, const std::string& body,
                            int timeout_ms) {
  const UrlParts parts = split_url(url);
  httplib::Client client(parts.scheme_host_port);
  const auto timeout = std::chrono::milliseconds(timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);

  auto res = client.Post(parts.path, headers, body, "application/json");
  if (!res) {
    throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()), 0, true);
  }
  return {res->status, res->body};
}

HttpProvider::HttpProvider(HttpProfile profile) : Provider(profile.config), profile_(std::move(profile)) {
  if (profile_.config.endpoint_url.empty()) throw ConfigError("http provider needs endpoint_url");
  split_url(profile_.config.endpoint_url);
}

GenerationResult HttpProvider::attempt(const GenerationRequest& request) {
  const auto& cfg = profile_.config;
  const std::string key = resolve_api_key(cfg.api_key_env);

  nlohmann::ordered_json body;
  body["model"] = cfg.model_name;
  if (profile_.prompt_field == "messages") {
    body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}});
  } else {
    body[profile_.prompt_field] = request.prompt;
  }
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_tokens;
  if (request.seed) body["seed"] = *request.seed;

  const auto start = std::chrono::steady_clock::now();
  HttpResponse res = http_post_json(cfg.endpoint_url, key, body.dump(), cfg.timeout_ms);
  if (res.status != 200) {
    throw TransportError(cfg.endpoint_url + " returned HTTP " + std::to_string(res.status), res.status,
                         is_transient_status(res.status));
  }

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(res.body);
  } catch (const nlohmann::json::parse_error& e) {
    throw TransportError(std::string("unparseable response body: ") + e.what(), res.status, false);
  }
  GenerationResult out;
  try {
    out.text = doc.at(nlohmann::json::json_pointer(profile_.output_path)).get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw TransportError("response has no string at " + profile_.output_path, res.status, false);
  }
  auto read_count = [&](const std::string& path, long fallback) {
    if (path.empty()) return fallback;
    nlohmann::json::json_pointer ptr(path);
    return doc.contains(ptr) && doc[ptr].is_number() ? doc[ptr].get<long>() : fallback;
  };
  out.usage.prompt_tokens = read_count(profile_.prompt_tokens_path, approx_tokens(request.prompt));
  out.usage.completion_tokens = read_count(profile_.completion_tokens_path, approx_tokens(out.text));
  out.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  out.provider_id = cfg.model_name;
  return out;
}

}  // namespace ticl
