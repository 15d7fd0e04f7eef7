// SPDX-License-Identifier: Apache-2.0
#include "ticl/outputs.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ticl/errors.hpp"
#include "ticl/prompts.hpp"

namespace ticl {

std::vector<Generation> collect_generations(std::span<const BatchItem> items, const OutputParser& parse) {
  std::vector<Generation> out;
  bool any = false;
  ErrorKind last_kind = ErrorKind::kInternal;
  int last_status = 0;
  for (const auto& item : items) {
    Generation g;
    if (!item.ok()) {
      g.error = item.error.empty() ? "generation failed" : item.error;
      last_kind = item.error_kind;
      last_status = item.status;
    } else {
      try {
        g.text = parse ? parse(item.result->text) : prompts::parse_fenced_output(item.result->text);
        any = true;
      } catch (const ParseError& e) {
        g.error = e.what();
        last_kind = ErrorKind::kParse;
      }
    }
    out.push_back(std::move(g));
  }
  if (!any && !out.empty()) {
    const std::string msg = "all " + std::to_string(out.size()) + " generations failed; last: " + out.back().error;
    switch (last_kind) {
      case ErrorKind::kParse: throw ParseError(msg);
      case ErrorKind::kTransport: throw TransportError(msg, last_status, false);
      case ErrorKind::kConfig: throw ConfigError(msg);
      case ErrorKind::kData: throw DataError(msg);
      default: throw Error(ErrorKind::kInternal, msg);
    }
  }
  return out;
}

std::string to_jsonl(std::span<const OutputRecord> records) {
  std::string out;
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["author_id"] = r.author_id;
    j["task_id"] = r.task_id;
    j["method"] = r.method;
    j["generation_index"] = r.generation_index;
    j["text"] = r.text;
    if (!r.error.empty()) j["error"] = r.error;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<OutputRecord> parse_outputs(const std::string& text, const std::string& source) {
  std::vector<OutputRecord> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw DataError(where + ": record is not an object");
    OutputRecord r;
    try {
      r.author_id = j.at("author_id").get<std::string>();
      r.task_id = j.at("task_id").get<std::string>();
      r.method = j.value("method", std::string());
      r.generation_index = j.value("generation_index", std::size_t{0});
      r.text = j.at("text").get<std::string>();
      r.error = j.value("error", std::string());
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_outputs(const std::filesystem::path& path, std::span<const OutputRecord> records) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write " + path.string());
  f << to_jsonl(records);
}

std::vector<OutputRecord> read_outputs(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read outputs file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_outputs(ss.str(), path.string());
}

std::map<std::string, judge::TaskOutputs> group_outputs(std::span<const OutputRecord> records,
                                                        const std::string& method) {
  std::map<std::string, std::map<std::string, std::map<std::size_t, std::string>>> ordered;
  for (const auto& r : records) {
    if (!r.error.empty() || (!method.empty() && r.method != method)) continue;
    ordered[r.author_id][r.task_id][r.generation_index] = r.text;
  }
  std::map<std::string, judge::TaskOutputs> out;
  for (auto& [author, tasks] : ordered) {
    for (auto& [task, gens] : tasks) {
      auto& v = out[author][task];
      for (auto& [idx, text] : gens) v.push_back(std::move(text));
    }
  }
  return out;
}

}  // namespace ticl
