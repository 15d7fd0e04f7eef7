// SPDX-License-Identifier: Apache-2.0
#include "ticl/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ticl/errors.hpp"

namespace ticl::prompts {

namespace detail {
const std::map<std::string, std::string>& builtin_templates();
}

namespace {

std::string rstrip_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

std::string trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::size_t b = 0, e = s.size();
  while (b < e && ws(s[b])) ++b;
  while (e > b && ws(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string join(const std::vector<std::string>& blocks, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out += sep;
    out += blocks[i];
  }
  return out;
}

void require_text(std::string_view value, const char* what) {
  if (trim(value).empty()) throw ConfigError(std::string(what) + " must be non-empty");
}

std::string example_blocks(std::span<const AugmentedExample> examples, const FewShotOptions& options,
                           const TemplateSet& t) {
  std::vector<std::string> blocks;
  int index = 1;
  for (const auto& ex : examples) {
    const std::string k = std::to_string(index++);
    std::string block = t.render("example", {{"index", k}, {"task", trim(ex.sample.task)},
                                             {"reference", trim(ex.sample.reference)}});
    if (options.include_attempts) {
      int j = 1;
      for (const auto& a : ex.attempts) {
        const char* name = options.include_explanations ? "attempt" : "attempt_negative_only";
        std::map<std::string, std::string> vars{
            {"index", k}, {"attempt_index", std::to_string(j++)}, {"negative", trim(a.negative)}};
        if (options.include_explanations) vars["explanation"] = trim(a.explanation);
        block += "\n\n";
        block += t.render(name, vars);
      }
    }
    blocks.push_back(std::move(block));
  }
  return join(blocks, "\n\n") + "\n";
}

std::vector<AugmentedExample> plain(std::span<const WritingSample> samples) {
  std::vector<AugmentedExample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back({s, {}});
  return out;
}

std::string top_level(const TemplateSet& t, const std::string& name, const std::map<std::string, std::string>& vars) {
  return t.render(name, vars) + "\n";
}

}  // namespace

const TemplateSet& TemplateSet::defaults() {
  static const TemplateSet kDefaults = [] {
    TemplateSet t;
    for (const auto& [name, text] : detail::builtin_templates()) t.texts_[name] = rstrip_newlines(text);
    return t;
  }();
  return kDefaults;
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("template directory not found: " + dir.string());
  TemplateSet t = defaults();
  for (auto& [name, text] : t.texts_) {
    auto file = dir / (name + ".txt");
    if (!std::filesystem::exists(file)) continue;
    std::ifstream in(file, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    text = rstrip_newlines(buf.str());
  }
  return t;
}

const std::string& TemplateSet::get(const std::string& name) const {
  auto it = texts_.find(name);
  if (it == texts_.end()) throw ConfigError("unknown template '" + name + "'");
  return it->second;
}

std::vector<std::string> TemplateSet::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : texts_) out.push_back(name);
  return out;
}

std::string TemplateSet::render(const std::string& name, const std::map<std::string, std::string>& vars) const {
  const std::string& text = get(name);
  std::string out;
  out.reserve(text.size() + 256);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto open = text.find("{{", pos);
    if (open == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    auto close = text.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(text, pos, std::string::npos);
      break;
    }
    out.append(text, pos, open - pos);
    const std::string key = text.substr(open + 2, close - open - 2);
    auto it = vars.find(key);
    if (it == vars.end()) throw ConfigError("template '" + name + "' references unknown placeholder {{" + key + "}}");
    out += it->second;
    pos = close + 2;
  }
  return out;
}

std::string render_fewshot(std::string_view task, std::span<const AugmentedExample> examples,
                           const FewShotOptions& options, const TemplateSet& t) {
  if (examples.empty()) throw ConfigError("render_fewshot needs at least one example (use render_zero_shot)");
  require_text(task, "target task");
  return top_level(t, options.include_attempts ? "ticl" : "fewshot",
                   {{"examples", example_blocks(examples, options, t)}, {"target_task", trim(task)}});
}

std::string render_fewshot(std::string_view task, std::span<const WritingSample> examples, const TemplateSet& t) {
  auto augmented = plain(examples);
  return render_fewshot(task, augmented, FewShotOptions{}, t);
}

std::string render_zero_shot(std::string_view task, const TemplateSet& t) {
  require_text(task, "target task");
  return top_level(t, "zero_shot", {{"target_task", trim(task)}});
}

std::string render_explanation(std::string_view task, std::string_view reference, std::string_view generated,
                               const TemplateSet& t) {
  require_text(task, "task");
  require_text(reference, "reference text");
  require_text(generated, "generated text");
  return top_level(t, "explanation",
                   {{"task", trim(task)}, {"reference_text", trim(reference)}, {"generated_text", trim(generated)}});
}

std::string render_judge(std::span<const std::string> author_examples, std::string_view option_a,
                         std::string_view option_b, std::size_t expected_examples, const TemplateSet& t) {
  if (author_examples.size() != expected_examples) {
    throw ConfigError("render_judge expects " + std::to_string(expected_examples) + " author examples, got " +
                      std::to_string(author_examples.size()));
  }
  require_text(option_a, "option A");
  require_text(option_b, "option B");
  std::vector<std::string> blocks;
  for (std::size_t i = 0; i < author_examples.size(); ++i) {
    blocks.push_back(t.render("judge_example", {{"index", std::to_string(i + 1)}, {"text", trim(author_examples[i])}}));
  }
  return top_level(t, "judge",
                   {{"examples", join(blocks, "\n") + "\n"}, {"option_a", trim(option_a)}, {"option_b", trim(option_b)}});
}

std::string render_cot_style_guide(std::string_view task, std::span<const WritingSample> examples,
                                   const TemplateSet& t) {
  if (examples.empty()) throw ConfigError("render_cot_style_guide needs at least one example");
  require_text(task, "target task");
  auto augmented = plain(examples);
  return top_level(t, "cot_style_guide",
                   {{"examples", example_blocks(augmented, {}, t)}, {"target_task", trim(task)}});
}

std::string render_cot_writing(std::string_view task, std::span<const WritingSample> examples,
                               std::string_view style_guide, const TemplateSet& t) {
  if (examples.empty()) throw ConfigError("render_cot_writing needs at least one example");
  require_text(task, "target task");
  if (trim(style_guide).empty()) throw ConfigError("render_cot_writing needs a non-empty style guide");
  auto augmented = plain(examples);
  return top_level(t, "cot_writing",
                   {{"examples", example_blocks(augmented, {}, t)},
                    {"target_task", trim(task)},
                    {"style_guide", trim(style_guide)}});
}

std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", score);
  return buf;
}

std::string render_opro_meta(std::span<const ScoredInstruction> history, std::span<const WritingSample> exemplars,
                             const TemplateSet& t) {
  if (history.empty()) throw ConfigError("render_opro_meta needs a non-empty history");
  std::vector<ScoredInstruction> sorted(history.begin(), history.end());
  for (const auto& h : sorted) {
    if (!std::isfinite(h.score)) throw ConfigError("OPRO history scores must be finite");
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredInstruction& a, const ScoredInstruction& b) { return a.score < b.score; });
  std::vector<std::string> entries;
  for (const auto& h : sorted) {
    entries.push_back(
        t.render("opro_history_entry", {{"instruction", trim(h.instruction)}, {"score", format_score(h.score)}}));
  }
  std::vector<std::string> shots;
  for (const auto& e : exemplars) {
    shots.push_back(t.render("opro_exemplar", {{"task", trim(e.task)}, {"reference", trim(e.reference)}}));
  }
  return top_level(t, "opro_meta",
                   {{"history", join(entries, "\n\n") + "\n"},
                    {"exemplars", shots.empty() ? std::string() : join(shots, "\n\n") + "\n"}});
}

std::string render_opro_writing(std::string_view task, std::string_view instruction, const TemplateSet& t) {
  require_text(task, "target task");
  require_text(instruction, "instruction");
  return top_level(t, "opro_writing", {{"target_task", trim(task)}, {"instruction", trim(instruction)}});
}

// ---------------------------------------------------------------------------

std::string parse_fenced_output(std::string_view raw) {
  auto open = raw.find("```");
  std::string body;
  if (open == std::string_view::npos) {
    body = trim(raw);
  } else {
    std::size_t start = open + 3;
    auto eol = raw.find('\n', start);
    if (eol != std::string_view::npos) {
      std::string_view info = raw.substr(start, eol - start);
      const bool info_string = std::none_of(info.begin(), info.end(), [](char c) { return c == ' ' || c == '`'; });
      if (info_string) start = eol + 1;
    }
    auto close = raw.find("```", start);
    body = trim(raw.substr(start, close == std::string_view::npos ? std::string_view::npos : close - start));
  }
  if (body.empty()) throw ParseError("no text found in model output");
  return body;
}

std::string extract_json_object(std::string_view raw, bool strict) {
  if (strict) {
    std::string t = trim(raw);
    auto doc = nlohmann::json::parse(t, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) throw ParseError("strict mode: input is not a single JSON object");
    return t;
  }
  for (std::size_t begin = raw.find('{'); begin != std::string_view::npos; begin = raw.find('{', begin + 1)) {
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = begin; i < raw.size(); ++i) {
      char c = raw[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        std::string candidate(raw.substr(begin, i - begin + 1));
        auto doc = nlohmann::json::parse(candidate, nullptr, false);
        if (!doc.is_discarded() && doc.is_object()) return candidate;
        break;
      }
    }
  }
  throw ParseError("no JSON object found in model output");
}

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

nlohmann::json object_of(std::string_view raw, bool strict) {
  return nlohmann::json::parse(extract_json_object(raw, strict));
}

}  // namespace

ParsedExplanation parse_explanation_json(std::string_view raw, bool strict) {
  auto doc = object_of(raw, strict);
  if (!doc.contains("explanation") || !doc.contains("is_consistent")) {
    throw ParseError("explanation JSON must contain 'explanation' and 'is_consistent'");
  }
  ParsedExplanation out;
  const auto& e = doc["explanation"];
  out.explanation = e.is_string() ? trim(e.get<std::string>()) : e.dump();
  if (out.explanation.empty()) throw ParseError("explanation is empty");
  const auto& v = doc["is_consistent"];
  if (v.is_boolean()) {
    out.is_consistent = v.get<bool>();
  } else if (v.is_string()) {
    std::string s = lower(trim(v.get<std::string>()));
    if (s == "yes") out.is_consistent = true;
    else if (s == "no") out.is_consistent = false;
    else throw ParseError("is_consistent must be yes or no, got '" + v.get<std::string>() + "'");
  } else {
    throw ParseError("is_consistent must be yes or no");
  }
  return out;
}

JudgeAnswer parse_judge_json(std::string_view raw, bool strict) {
  auto doc = object_of(raw, strict);
  if (!doc.contains("answer") || !doc["answer"].is_string()) throw ParseError("judge JSON has no string 'answer'");
  std::string a = lower(trim(doc["answer"].get<std::string>()));
  if (a == "a") return JudgeAnswer::kA;
  if (a == "b") return JudgeAnswer::kB;
  throw ParseError("judge answer must be A or B, got '" + doc["answer"].get<std::string>() + "'");
}

std::string parse_opro_response(std::string_view raw) {
  try {
    auto doc = object_of(raw, false);
    if (doc.contains("response") && doc["response"].is_string()) {
      std::string r = trim(doc["response"].get<std::string>());
      if (!r.empty()) return r;
    }
  } catch (const ParseError&) {
  }
  return parse_fenced_output(raw);
}

}  // namespace ticl::prompts
