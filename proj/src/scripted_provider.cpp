// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ticl/provider.hpp"
#include "ticl/rng.hpp"

namespace ticl {

namespace {

std::string expand_hash(std::string text, const std::string& prompt) {
  static const std::string kToken = "{{hash}}";
  const std::string digest = hex64(fnv1a64(prompt)).substr(0, 12);
  for (auto pos = text.find(kToken); pos != std::string::npos; pos = text.find(kToken, pos + digest.size())) {
    text.replace(pos, kToken.size(), digest);
  }
  return text;
}

}  // namespace

ScriptEntry reply(ScriptMatcher matcher, std::string response, std::optional<int> times) {
  ScriptEntry e;
  e.matcher = std::move(matcher);
  e.response = std::move(response);
  e.remaining = times;
  return e;
}

ScriptEntry reply_with(ScriptMatcher matcher, Responder responder, std::optional<int> times) {
  ScriptEntry e;
  e.matcher = std::move(matcher);
  e.responder = std::move(responder);
  e.remaining = times;
  return e;
}

ScriptEntry fail(ScriptMatcher matcher, int status, std::optional<int> times) {
  ScriptEntry e;
  e.matcher = std::move(matcher);
  e.fail_status = status;
  e.remaining = times;
  return e;
}

ProviderConfig ScriptedProvider::default_config() {
  ProviderConfig c;
  c.endpoint_url = "scripted://local";
  c.model_name = "scripted";
  c.max_retries = 3;
  c.backoff_base_ms = 0;
  c.max_parallel = 1;
  return c;
}

ScriptedProvider::ScriptedProvider(std::vector<ScriptEntry> script, ProviderConfig config)
    : Provider(std::move(config)), script_(std::move(script)) {
  if (script_.empty()) throw ConfigError("scripted provider needs a non-empty script");
  for (const auto& e : script_) {
    compiled_.emplace_back(e.matcher.kind == ScriptMatcher::Kind::kRegex ? e.matcher.pattern : std::string());
  }
}

GenerationResult ScriptedProvider::attempt(const GenerationRequest& request) {
  std::string text;
  int fail_status = 0;
  Responder responder;
  {
    std::lock_guard lock(mu_);
    log_.push_back(request);
    std::size_t i = 0;
    for (; i < script_.size(); ++i) {
      auto& e = script_[i];
      if (e.remaining && *e.remaining <= 0) continue;
      bool match = false;
      switch (e.matcher.kind) {
        case ScriptMatcher::Kind::kAny:
          match = true;
          break;
        case ScriptMatcher::Kind::kSubstring:
          match = request.prompt.find(e.matcher.pattern) != std::string::npos;
          break;
        case ScriptMatcher::Kind::kRegex:
          match = std::regex_search(request.prompt, compiled_[i]);
          break;
      }
      if (!match) continue;
      if (e.remaining) --*e.remaining;
      fail_status = e.fail_status;
      responder = e.responder;
      text = e.response;
      break;
    }
    if (i == script_.size()) {
      throw ScriptExhaustedError("scripted provider: no script entry matches prompt (tag '" + request.tag + "')");
    }
    ++in_flight_;
    peak_ = std::max(peak_, in_flight_);
  }

  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  auto leave = [this] {
    std::lock_guard lock(mu_);
    --in_flight_;
  };
  if (fail_status != 0) {
    leave();
    throw TransportError("scripted failure with status " + std::to_string(fail_status), fail_status,
                         is_transient_status(fail_status));
  }
  try {
    text = responder ? responder(request) : expand_hash(std::move(text), request.prompt);
  } catch (...) {
    leave();
    throw;
  }
  leave();

  GenerationResult r;
  r.text = std::move(text);
  r.usage.prompt_tokens = approx_tokens(request.prompt);
  r.usage.completion_tokens = approx_tokens(r.text);
  r.provider_id = id_;
  r.latency_ms = latency_.count();
  return r;
}

int ScriptedProvider::calls() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(log_.size());
}

int ScriptedProvider::calls_with_tag(const std::string& tag) const {
  std::lock_guard lock(mu_);
  return static_cast<int>(std::count_if(log_.begin(), log_.end(), [&](const auto& r) { return r.tag == tag; }));
}

int ScriptedProvider::peak_in_flight() const {
  std::lock_guard lock(mu_);
  return peak_;
}

std::vector<GenerationRequest> ScriptedProvider::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::unique_ptr<ScriptedProvider> ScriptedProvider::from_json(const std::string& text, ProviderConfig config) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("invalid script JSON: ") + e.what());
  }
  if (doc.is_object() && doc.contains("script")) doc = doc["script"];
  if (!doc.is_array()) throw ConfigError("script must be a JSON array");

  std::vector<ScriptEntry> entries;
  for (const auto& item : doc) {
    ScriptEntry e;
    const auto& m = item.value("match", nlohmann::json("any"));
    if (m.is_string() && m.get<std::string>() == "any") {
      e.matcher = ScriptMatcher::any();
    } else if (m.is_object() && m.contains("substring")) {
      e.matcher = ScriptMatcher::substring(m["substring"].get<std::string>());
    } else if (m.is_object() && m.contains("regex")) {
      e.matcher = ScriptMatcher::regex(m["regex"].get<std::string>());
    } else {
      throw ConfigError("script entry has an unknown matcher: " + m.dump());
    }
    if (item.contains("times")) {
      e.remaining = item["times"].is_null() ? std::nullopt : std::optional<int>(item["times"].get<int>());
    }
    if (item.contains("fail")) {
      e.fail_status = item["fail"].get<int>();
    } else if (item.contains("choice")) {
      auto choices = item["choice"].get<std::vector<std::string>>();
      if (choices.empty()) throw ConfigError("script 'choice' needs at least one option");
      const std::uint64_t seed = item.value("seed", std::uint64_t{0});
      e.responder = [choices, seed](const GenerationRequest& r) {
        return choices[fnv1a64(r.prompt, 0xcbf29ce484222325ULL ^ (seed * 0x9e3779b97f4a7c15ULL)) % choices.size()];
      };
    } else if (item.contains("response")) {
      e.response = item["response"].get<std::string>();
    } else {
      throw ConfigError("script entry needs 'response', 'fail' or 'choice'");
    }
    entries.push_back(std::move(e));
  }
  return std::make_unique<ScriptedProvider>(std::move(entries), std::move(config));
}

std::unique_ptr<ScriptedProvider> ScriptedProvider::from_json_file(const std::filesystem::path& path,
                                                                   ProviderConfig config) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read script file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str(), std::move(config));
}

}  // namespace ticl
