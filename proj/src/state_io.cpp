// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ticl/engine.hpp"
#include "ticl/errors.hpp"

namespace ticl::engine {

using nlohmann::json;

namespace {

json config_json(const TiclConfig& c) {
  json j;
  j["epochs"] = c.epochs;
  j["icl_sample_size"] = c.icl_sample_size ? json(*c.icl_sample_size) : json("all");
  j["checkpoint_interval"] = c.checkpoint_interval ? json(*c.checkpoint_interval) : json("epoch");
  j["max_attempts_per_example"] = c.max_attempts_per_example;
  j["rng_seed"] = c.rng_seed;
  j["eval_examples_per_judge"] = c.eval_examples_per_judge;
  j["eval_generations"] = c.eval_generations;
  j["step_retries"] = c.step_retries;
  j["temperature"] = c.temperature;
  j["explain_temperature"] = c.explain_temperature;
  j["max_tokens"] = c.max_tokens;
  j["initial_icl"] = c.initial_icl;
  j["include_explanations"] = c.include_explanations;
  j["checkpointing"] = c.checkpointing;
  j["negatives_enabled"] = c.negatives_enabled;
  j["preset"] = c.preset;
  return j;
}

json sample_json(const WritingSample& s) {
  json j;
  j["sample_id"] = s.sample_id;
  j["author_id"] = s.author_id;
  j["task"] = s.task;
  j["reference"] = s.reference;
  j["prompt_key"] = s.prompt_key ? json(*s.prompt_key) : json(nullptr);
  return j;
}

WritingSample sample_from(const json& j) {
  WritingSample s;
  s.sample_id = j.at("sample_id").get<std::string>();
  s.author_id = j.at("author_id").get<std::string>();
  s.task = j.at("task").get<std::string>();
  s.reference = j.at("reference").get<std::string>();
  if (j.contains("prompt_key") && !j["prompt_key"].is_null()) s.prompt_key = j["prompt_key"].get<std::string>();
  return s;
}

json dataset_json(const std::vector<AugmentedExample>& dataset) {
  json arr = json::array();
  for (const auto& e : dataset) {
    json attempts = json::array();
    for (const auto& a : e.attempts) {
      attempts.push_back({{"negative", a.negative}, {"explanation", a.explanation}, {"iteration", a.iteration}});
    }
    arr.push_back({{"sample", sample_json(e.sample)}, {"attempts", attempts}});
  }
  return arr;
}

std::vector<AugmentedExample> dataset_from(const json& arr) {
  std::vector<AugmentedExample> out;
  for (const auto& e : arr) {
    AugmentedExample ex;
    ex.sample = sample_from(e.at("sample"));
    for (const auto& a : e.at("attempts")) {
      ex.attempts.push_back(
          {a.at("negative").get<std::string>(), a.at("explanation").get<std::string>(), a.at("iteration").get<int>()});
    }
    out.push_back(std::move(ex));
  }
  return out;
}

json ref_json(const CheckpointRef& r) {
  return {{"checkpoint_id", r.checkpoint_id},
          {"step", r.step},
          {"val_score", r.val_score},
          {"scored", r.scored},
          {"path", r.path}};
}

CheckpointRef ref_from(const json& j) {
  CheckpointRef r;
  r.checkpoint_id = j.at("checkpoint_id").get<std::string>();
  r.step = j.at("step").get<long>();
  r.val_score = j.at("val_score").get<double>();
  r.scored = j.at("scored").get<bool>();
  r.path = j.at("path").get<std::string>();
  return r;
}

json parse_document(const std::string& text, const std::string& source, const char* kind) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(source + ": corrupt " + kind + " file, parse error at byte " + std::to_string(e.byte));
  }
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw DataError(source + ": not a " + std::string(kind) + " document (no schema_version)");
  }
  const auto& v = doc["schema_version"];
  if (!v.is_number_integer() || v.get<int>() != kStateSchemaVersion) {
    throw MigrationError(source + ": " + kind + " schema version " + v.dump() + " is not supported; this build reads " +
                         std::to_string(kStateSchemaVersion) + ". Migrate the file or start a fresh run.");
  }
  return doc;
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

std::string canonical_config(const TiclConfig& config) { return config_json(config).dump(); }

std::string config_hash(const TiclConfig& config) { return hex64(fnv1a64(canonical_config(config))); }

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write " + tmp.string());
    f << text;
    f.flush();
    if (!f) throw DataError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string state_to_json(const TiclState& s) {
  json j;
  j["schema_version"] = kStateSchemaVersion;
  j["kind"] = "ticl_state";
  j["author_id"] = s.author_id;
  j["config_hash"] = s.config_hash;
  j["dataset"] = dataset_json(s.dataset);
  j["order"] = s.order;
  j["epoch"] = s.epoch;
  j["step"] = s.step;
  j["rng_state"] = s.rng.serialize();
  j["best_checkpoint"] = ref_json(s.best_checkpoint);
  j["best_dataset"] = dataset_json(s.best_dataset);
  json ckpts = json::array();
  for (const auto& r : s.checkpoints) ckpts.push_back(ref_json(r));
  j["checkpoints"] = ckpts;
  json hist = json::array();
  for (const auto& h : s.history) {
    hist.push_back({{"sample_id", h.sample_id},
                    {"epoch", h.epoch},
                    {"step", h.step},
                    {"outcome", h.outcome},
                    {"evicted", h.evicted},
                    {"prompt_tokens", h.usage.prompt_tokens},
                    {"completion_tokens", h.usage.completion_tokens}});
  }
  j["history"] = hist;
  return j.dump(2) + "\n";
}

TiclState state_from_json(const std::string& text, const std::string& source) {
  json j = parse_document(text, source, "state");
  TiclState s;
  try {
    s.author_id = j.at("author_id").get<std::string>();
    s.config_hash = j.at("config_hash").get<std::string>();
    s.dataset = dataset_from(j.at("dataset"));
    s.order = j.at("order").get<std::vector<std::size_t>>();
    s.epoch = j.at("epoch").get<int>();
    s.step = j.at("step").get<long>();
    s.rng = Rng::deserialize(j.at("rng_state").get<std::string>());
    s.best_checkpoint = ref_from(j.at("best_checkpoint"));
    s.best_dataset = dataset_from(j.at("best_dataset"));
    for (const auto& r : j.at("checkpoints")) s.checkpoints.push_back(ref_from(r));
    for (const auto& h : j.at("history")) {
      StepRecord r;
      r.sample_id = h.at("sample_id").get<std::string>();
      r.epoch = h.at("epoch").get<int>();
      r.step = h.at("step").get<long>();
      r.outcome = h.at("outcome").get<std::string>();
      r.evicted = h.at("evicted").get<bool>();
      r.usage.prompt_tokens = h.at("prompt_tokens").get<long>();
      r.usage.completion_tokens = h.at("completion_tokens").get<long>();
      s.history.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw DataError(source + ": malformed state (" + e.what() + ")");
  }
  for (std::size_t idx : s.order) {
    if (idx >= s.dataset.size()) throw DataError(source + ": order index out of range");
  }
  return s;
}

void save_state(const TiclState& state, const std::filesystem::path& path) {
  write_file_atomic(path, state_to_json(state));
}

TiclState load_state(const std::filesystem::path& path) { return state_from_json(read_all(path), path.string()); }

void write_checkpoint(const std::filesystem::path& path, const CheckpointRef& ref, const TiclState& state,
                      const TiclConfig& config) {
  json j;
  j["schema_version"] = kStateSchemaVersion;
  j["kind"] = "ticl_checkpoint";
  j["checkpoint_id"] = ref.checkpoint_id;
  j["step"] = ref.step;
  j["author_id"] = state.author_id;
  j["config_hash"] = state.config_hash;
  j["provenance"] = {{"preset", config.preset}, {"epoch", state.epoch}, {"config", config_json(config)}};
  j["dataset"] = dataset_json(state.dataset);
  write_file_atomic(path, j.dump(2) + "\n");
}

std::vector<AugmentedExample> load_checkpoint_dataset(const std::filesystem::path& path) {
  json j = parse_document(read_all(path), path.string(), "checkpoint");
  try {
    return dataset_from(j.at("dataset"));
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": malformed checkpoint (" + e.what() + ")");
  }
}

void write_manifest(const std::filesystem::path& path, const TiclState& state, const TiclConfig& config,
                    long total_steps, bool complete) {
  json j;
  j["schema_version"] = kStateSchemaVersion;
  j["kind"] = "ticl_manifest";
  j["preset"] = config.preset;
  j["author_id"] = state.author_id;
  j["config_hash"] = state.config_hash;
  j["config"] = config_json(config);
  j["total_steps"] = total_steps;
  j["completed_steps"] = state.step;
  j["complete"] = complete;
  j["best_checkpoint"] = ref_json(state.best_checkpoint);
  json ckpts = json::array();
  for (const auto& r : state.checkpoints) ckpts.push_back(ref_json(r));
  j["checkpoints"] = ckpts;
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace ticl::engine
