// SPDX-License-Identifier: Apache-2.0
#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ticl/cli.hpp"
#include "ticl/errors.hpp"

namespace ticl::cli {

using nlohmann::json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig: return 2;
    case ErrorKind::kData: return 3;
    case ErrorKind::kTransport:
    case ErrorKind::kParse: return 4;
    default: return 1;
  }
}

std::string interpolate_env(const std::string& text) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    auto start = text.find("${", pos);
    if (start == std::string::npos) break;
    auto end = text.find('}', start + 2);
    if (end == std::string::npos) throw ConfigError("unterminated ${ in '" + text + "'");
    out.append(text, pos, start - pos);
    const std::string name = text.substr(start + 2, end - start - 2);
    const char* value = std::getenv(name.c_str());
    if (!value) throw ConfigError("environment variable " + name + " is not set");
    out += value;
    pos = end + 1;
  }
  out.append(text, pos, std::string::npos);
  return out;
}

namespace {

void expand(json& j) {
  if (j.is_string()) {
    j = interpolate_env(j.get<std::string>());
  } else if (j.is_structured()) {
    for (auto& child : j) expand(child);
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
void read(const json& j, const char* key, T& target) {
  if (j.contains(key) && !j[key].is_null()) target = j[key].get<T>();
}

const std::set<std::string> kRoles = {"generation", "explanation", "judge"};

ProviderProfile parse_profile(const json& j, const std::filesystem::path& base, const std::string& role) {
  ProviderProfile p;
  read(j, "type", p.type);
  if (p.type == "scripted") {
    if (!j.contains("script")) throw ConfigError("provider '" + role + "': scripted profile needs \"script\"");
    p.script = resolve(base, j["script"].get<std::string>());
  } else if (p.type == "http") {
    auto& c = p.http.config;
    read(j, "endpoint_url", c.endpoint_url);
    read(j, "model_name", c.model_name);
    read(j, "api_key_env", c.api_key_env);
    read(j, "max_retries", c.max_retries);
    read(j, "backoff_base_ms", c.backoff_base_ms);
    read(j, "max_parallel", c.max_parallel);
    read(j, "min_interval_ms", c.min_interval_ms);
    read(j, "timeout_ms", c.timeout_ms);
    read(j, "prompt_field", p.http.prompt_field);
    read(j, "output_path", p.http.output_path);
    read(j, "prompt_tokens_path", p.http.prompt_tokens_path);
    read(j, "completion_tokens_path", p.http.completion_tokens_path);
    if (c.endpoint_url.empty()) throw ConfigError("provider '" + role + "': http profile needs \"endpoint_url\"");
    validate(c);
  } else {
    throw ConfigError("provider '" + role + "': unknown type '" + p.type + "'");
  }
  if (j.contains("telemetry")) p.telemetry = resolve(base, j["telemetry"].get<std::string>());
  return p;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON at byte " + std::to_string(e.byte));
  }
  if (!j.is_object()) throw ConfigError(source + ": top level must be an object");
  expand(j);

  RunConfig c;
  try {
    if (j.contains("corpus")) {
      const auto& cp = j["corpus"];
      if (cp.is_string()) {
        c.corpus_paths.push_back(resolve(base_dir, cp.get<std::string>()));
      } else {
        for (const auto& p : cp) c.corpus_paths.push_back(resolve(base_dir, p.get<std::string>()));
      }
    }
    if (j.contains("corpus_options")) {
      const auto& o = j["corpus_options"];
      read(o, "strict", c.load.strict);
      read(o, "samples_per_author", c.load.samples_per_author);
      if (o.contains("dataset_tag")) c.load.dataset_tag = parse_dataset_tag(o["dataset_tag"].get<std::string>());
    }
    if (j.contains("split")) {
      const auto& o = j["split"];
      read(o, "strict", c.split.strict);
      read(o, "train", c.split.train);
      read(o, "val", c.split.val);
      read(o, "test", c.split.test);
    }
    if (j.contains("output_dir")) c.output_dir = resolve(base_dir, j["output_dir"].get<std::string>());
    if (j.contains("templates_dir")) c.templates_dir = resolve(base_dir, j["templates_dir"].get<std::string>());
    read(j, "seed", c.seed);

    if (j.contains("providers")) {
      for (const auto& [role, profile] : j["providers"].items()) {
        if (role == "embedding") {
          read(profile, "type", c.embedding.type);
          read(profile, "dimension", c.embedding.dimension);
          auto& h = c.embedding.http;
          read(profile, "endpoint_url", h.endpoint_url);
          read(profile, "model_name", h.model_name);
          read(profile, "api_key_env", h.api_key_env);
          read(profile, "input_field", h.input_field);
          read(profile, "output_path", h.output_path);
          read(profile, "timeout_ms", h.timeout_ms);
          read(profile, "max_retries", h.max_retries);
          h.dimension = c.embedding.type == "http" ? c.embedding.dimension : 0;
          if (c.embedding.type != "hash" && c.embedding.type != "tfidf" && c.embedding.type != "http") {
            throw ConfigError("provider 'embedding': unknown type '" + c.embedding.type + "'");
          }
          continue;
        }
        if (!kRoles.count(role)) throw ConfigError("unknown provider role '" + role + "'");
        c.providers[role] = parse_profile(profile, base_dir, role);
      }
    }

    if (j.contains("ticl")) {
      const auto& t = j["ticl"];
      read(t, "epochs", c.ticl.epochs);
      if (t.contains("icl_sample_size") && !(t["icl_sample_size"].is_string() && t["icl_sample_size"] == "all")) {
        c.ticl.icl_sample_size = t["icl_sample_size"].get<std::size_t>();
      }
      if (t.contains("checkpoint_interval") &&
          !(t["checkpoint_interval"].is_string() && t["checkpoint_interval"] == "epoch")) {
        c.ticl.checkpoint_interval = t["checkpoint_interval"].get<std::size_t>();
      }
      read(t, "max_attempts_per_example", c.ticl.max_attempts_per_example);
      read(t, "eval_examples_per_judge", c.ticl.eval_examples_per_judge);
      read(t, "eval_generations", c.ticl.eval_generations);
      read(t, "step_retries", c.ticl.step_retries);
      read(t, "temperature", c.ticl.temperature);
      read(t, "explain_temperature", c.ticl.explain_temperature);
      read(t, "max_tokens", c.ticl.max_tokens);
      if (t.contains("preset")) c.ticl = engine::apply_preset(c.ticl, t["preset"].get<std::string>());
    }
    if (j.contains("baselines")) {
      const auto& b = j["baselines"];
      read(b, "generations_per_task", c.baseline.generations_per_task);
      read(b, "temperature", c.baseline.decoding.temperature);
      read(b, "max_tokens", c.baseline.decoding.max_tokens);
      if (b.contains("opro")) {
        const auto& o = b["opro"];
        read(o, "iterations", c.opro.iterations);
        read(o, "candidates_per_iteration", c.opro.candidates_per_iteration);
        read(o, "exemplars", c.opro.exemplars);
        read(o, "scoring_generations_per_task", c.opro.scoring_generations_per_task);
        read(o, "seed_instruction", c.opro.seed_instruction);
        read(o, "meta_temperature", c.opro.meta_temperature);
      }
    }
    if (j.contains("judge")) {
      const auto& o = j["judge"];
      read(o, "sample_n", c.judge.plan.sample_n);
      read(o, "generations_per_task", c.judge.plan.generations_per_task);
      read(o, "tasks", c.judge.plan.tasks);
      read(o, "require_counts", c.judge.plan.require_counts);
      read(o, "examples_per_judge", c.judge.execute.examples_per_judge);
      read(o, "max_parse_attempts", c.judge.execute.max_parse_attempts);
      read(o, "redraw_exemplars", c.judge.execute.redraw_exemplars);
      read(o, "temperature", c.judge.execute.temperature);
      read(o, "max_tokens", c.judge.execute.max_tokens);
      read(o, "top_k", c.judge.top_k);
      if (o.contains("estimator")) c.judge.estimator = judge::parse_se_estimator(o["estimator"].get<std::string>());
      if (o.contains("distractor")) {
        c.judge.distractor = judge::parse_distractor_strategy(o["distractor"].get<std::string>());
      }
    }
    if (j.contains("analysis")) {
      const auto& o = j["analysis"];
      read(o, "alpha", c.analysis.alpha);
      read(o, "min_n", c.analysis.min_n);
      read(o, "max_n", c.analysis.max_n);
      read(o, "p_level", c.analysis.p_level);
    }
  } catch (const json::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  c.ticl.validate();
  c.baseline.validate();
  c.opro.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path.parent_path(), path.string());
}

std::shared_ptr<Provider> make_provider(const RunConfig& config, const std::string& role) {
  auto it = config.providers.find(role);
  if (it == config.providers.end()) it = config.providers.find("generation");
  if (it == config.providers.end()) throw ConfigError("no provider profile for role '" + role + "' or 'generation'");
  const auto& p = it->second;
  std::shared_ptr<Provider> provider;
  if (p.type == "scripted") {
    provider = ScriptedProvider::from_json_file(p.script);
  } else {
    provider = std::make_shared<HttpProvider>(p.http);
  }
  if (!p.telemetry.empty()) provider->set_telemetry(std::make_shared<TelemetrySink>(p.telemetry));
  return provider;
}

std::unique_ptr<baselines::EmbeddingScorer> make_scorer(const RunConfig& config,
                                                        const std::vector<AuthorCorpus>& corpora) {
  const auto& e = config.embedding;
  if (e.type == "hash") return std::make_unique<baselines::HashScorer>(e.dimension, config.seed);
  if (e.type == "http") return std::make_unique<baselines::HttpEmbeddingScorer>(e.http);
  std::vector<std::string> background;
  for (const auto& c : corpora) {
    for (const auto& s : c.samples) background.push_back(s.reference);
  }
  return std::make_unique<baselines::TfidfScorer>(background);
}

DirLock::DirLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
  std::filesystem::create_directories(dir);
  int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0 && errno == EEXIST) {
    std::ifstream f(path_);
    long pid = 0;
    f >> pid;
    if (pid > 0 && ::kill(static_cast<pid_t>(pid), 0) != 0 && errno == ESRCH) {
      std::filesystem::remove(path_);
      fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    }
  }
  if (fd < 0) {
    throw ConfigError("output directory " + dir.string() + " is locked by another ticl process (" + path_.string() +
                      ")");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

DirLock::~DirLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace ticl::cli
