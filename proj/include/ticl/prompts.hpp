// SPDX-License-Identifier: Apache-2.0
//
// Prompt templates for few-shot writing, trial-and-error augmented writing,
// explanation/validation, pairwise judging, two-stage CoT and OPRO, plus
// parsers for the responses they elicit.
#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ticl/corpus.hpp"

namespace ticl {

/// A model generation judged inconsistent with the reference, with the
/// critique that explains the gap.
struct Attempt {
  std::string negative;
  std::string explanation;
  /// Epoch in which the attempt was created.
  int iteration = 0;

  friend bool operator==(const Attempt&, const Attempt&) = default;
};

struct AugmentedExample {
  WritingSample sample;
  std::vector<Attempt> attempts;

  friend bool operator==(const AugmentedExample&, const AugmentedExample&) = default;
};

namespace prompts {

/// The eight-aspect style list shared by most templates.
inline constexpr std::string_view kStyleAspects =
    "(1) length, (2) format, (3) paragraph structure, (4) sentence structure, (5) punctuation, (6) syntax, "
    "(7) voice, and (8) diction";

/// Named template texts. Defaults are compiled in from templates/*.txt.
class TemplateSet {
 public:
  static const TemplateSet& defaults();
  /// Defaults overridden by any <name>.txt present in `dir`.
  static TemplateSet load(const std::filesystem::path& dir);

  const std::string& get(const std::string& name) const;
  std::vector<std::string> names() const;

  /// Single-pass {{placeholder}} substitution. Throws ConfigError for a
  /// placeholder missing from `vars`.
  std::string render(const std::string& name, const std::map<std::string, std::string>& vars) const;

 private:
  std::map<std::string, std::string> texts_;
};

struct FewShotOptions {
  /// Emit "Stylistically Inconsistent Writing" blocks (TICL template).
  bool include_attempts = false;
  /// With attempts: emit the explanation header and text for each attempt.
  bool include_explanations = true;
};

std::string render_fewshot(std::string_view task, std::span<const AugmentedExample> examples,
                           const FewShotOptions& options = {}, const TemplateSet& t = TemplateSet::defaults());
std::string render_fewshot(std::string_view task, std::span<const WritingSample> examples,
                           const TemplateSet& t = TemplateSet::defaults());

std::string render_zero_shot(std::string_view task, const TemplateSet& t = TemplateSet::defaults());

std::string render_explanation(std::string_view task, std::string_view reference, std::string_view generated,
                               const TemplateSet& t = TemplateSet::defaults());

std::string render_judge(std::span<const std::string> author_examples, std::string_view option_a,
                         std::string_view option_b, std::size_t expected_examples = 5,
                         const TemplateSet& t = TemplateSet::defaults());

std::string render_cot_style_guide(std::string_view task, std::span<const WritingSample> examples,
                                   const TemplateSet& t = TemplateSet::defaults());
std::string render_cot_writing(std::string_view task, std::span<const WritingSample> examples,
                               std::string_view style_guide, const TemplateSet& t = TemplateSet::defaults());

struct ScoredInstruction {
  std::string instruction;
  double score = 0.0;

  friend bool operator==(const ScoredInstruction&, const ScoredInstruction&) = default;
};

/// History is listed by ascending score; equal scores keep insertion order.
std::string render_opro_meta(std::span<const ScoredInstruction> history, std::span<const WritingSample> exemplars,
                             const TemplateSet& t = TemplateSet::defaults());
std::string render_opro_writing(std::string_view task, std::string_view instruction,
                                const TemplateSet& t = TemplateSet::defaults());

/// Score text as shown in the OPRO meta-prompt.
std::string format_score(double score);

// ---------------------------------------------------------------------------
// Parsing

/// Contents of the first ``` fenced block (an info string such as "json" on
/// the opening line is skipped), or the whole trimmed text when there is no
/// fence. Throws ParseError when the result is empty.
std::string parse_fenced_output(std::string_view raw);

/// Text of the first balanced JSON object that parses. With `strict`, the
/// trimmed input must be exactly one object. Throws ParseError.
std::string extract_json_object(std::string_view raw, bool strict = false);

struct ParsedExplanation {
  std::string explanation;
  bool is_consistent = false;
};

/// Reads {"explanation": ..., "is_consistent": "yes"|"no"} (case-insensitive).
ParsedExplanation parse_explanation_json(std::string_view raw, bool strict = false);

enum class JudgeAnswer { kA, kB };

/// Reads "answer" and normalizes " b " to B. Anything else is a ParseError.
JudgeAnswer parse_judge_json(std::string_view raw, bool strict = false);

/// Reads "response" from the OPRO writing JSON; falls back to fenced text.
std::string parse_opro_response(std::string_view raw);

}  // namespace prompts
}  // namespace ticl
