// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include "support/fixtures.hpp"
#include "support/golden.hpp"
#include "ticl/errors.hpp"
#include "ticl/prompts.hpp"

using namespace ticl;
using namespace ticl::prompts;

using ticl::testing::golden;
using ticl::testing::load_inputs;
using ticl::testing::normalize;

TEST(Golden, Explanation) {
  auto in = load_inputs();
  EXPECT_EQ(normalize(render_explanation(in.samples[0].task, in.samples[0].reference,
                                         in.raw["generated_text"].get<std::string>())),
            normalize(golden("explanation")));
}

TEST(Golden, FewShot) {
  auto in = load_inputs();
  const std::string task = in.raw["target_task"].get<std::string>();
  EXPECT_EQ(normalize(render_fewshot(task, std::span<const WritingSample>(in.samples))), normalize(golden("fewshot")));
  std::vector<AugmentedExample> plain;
  for (const auto& s : in.samples) plain.push_back({s, {}});
  EXPECT_EQ(render_fewshot(task, std::span<const AugmentedExample>(plain)),
            render_fewshot(task, std::span<const WritingSample>(in.samples)));
}

TEST(Golden, Ticl) {
  auto in = load_inputs();
  FewShotOptions opts;
  opts.include_attempts = true;
  EXPECT_EQ(normalize(render_fewshot(in.raw["target_task"].get<std::string>(), in.augmented, opts)),
            normalize(golden("ticl")));
}

TEST(Golden, Judge) {
  auto in = load_inputs();
  auto ex = in.raw["judge_examples"].get<std::vector<std::string>>();
  EXPECT_EQ(normalize(render_judge(ex, in.raw["option_a"].get<std::string>(), in.raw["option_b"].get<std::string>())),
            normalize(golden("judge")));
}

TEST(Golden, CotStyleGuideAndWriting) {
  auto in = load_inputs();
  const std::string task = in.raw["target_task"].get<std::string>();
  EXPECT_EQ(normalize(render_cot_style_guide(task, in.samples)), normalize(golden("cot_style_guide")));
  EXPECT_EQ(normalize(render_cot_writing(task, in.samples, in.raw["style_guide"].get<std::string>())),
            normalize(golden("cot_writing")));
}

TEST(Golden, OproMetaAndWriting) {
  auto in = load_inputs();
  std::vector<ScoredInstruction> history;
  for (const auto& h : in.raw["opro_history"]) history.push_back({h["instruction"].get<std::string>(), h["score"].get<double>()});
  EXPECT_EQ(normalize(render_opro_meta(history, in.samples)), normalize(golden("opro_meta")));
  EXPECT_EQ(normalize(render_opro_writing(in.raw["target_task"].get<std::string>(),
                                          in.raw["opro_instruction"].get<std::string>())),
            normalize(golden("opro_writing")));
}

TEST(Templates, EightAspectListAppearsEverywhereItShould) {
  auto in = load_inputs();
  const std::string aspects(kStyleAspects);
  std::vector<std::string> rendered{
      render_explanation("t", "r", "g"),
      render_fewshot("t", std::span<const WritingSample>(in.samples)),
      render_judge(in.raw["judge_examples"].get<std::vector<std::string>>(), "a", "b"),
      render_cot_style_guide("t", in.samples),
      render_opro_meta(std::vector<ScoredInstruction>{{"x", 0.1}}, in.samples),
  };
  for (const auto& r : rendered) EXPECT_NE(r.find(aspects), std::string::npos);
}

TEST(Templates, OproHistoryAscendingStable) {
  std::vector<ScoredInstruction> h{{"INS-HIGH", 0.9}, {"INS-LOW", 0.1}, {"INS-MID-1", 0.5}, {"INS-MID-2", 0.5}};
  auto text = render_opro_meta(h, std::vector<WritingSample>{});
  auto p_low = text.find("INS-LOW"), p_m1 = text.find("INS-MID-1"), p_m2 = text.find("INS-MID-2"), p_high = text.find("INS-HIGH");
  EXPECT_LT(p_low, p_m1);
  EXPECT_LT(p_m1, p_m2);
  EXPECT_LT(p_m2, p_high);
}

TEST(Templates, NegativeOnlyOmitsExplanations) {
  auto in = load_inputs();
  FewShotOptions opts;
  opts.include_attempts = true;
  opts.include_explanations = false;
  auto text = render_fewshot("t", in.augmented, opts);
  EXPECT_NE(text.find("Stylistically Inconsistent Writing 1-1"), std::string::npos);
  EXPECT_EQ(text.find("Inconsistent stylistic elements"), std::string::npos);
  EXPECT_EQ(text.find(in.raw["attempt"]["explanation"].get<std::string>()), std::string::npos);
}

TEST(Templates, ErrorsAndOverrides) {
  EXPECT_THROW(render_fewshot("t", std::span<const WritingSample>()), ConfigError);
  EXPECT_THROW(render_judge(std::vector<std::string>{"one"}, "a", "b"), ConfigError);
  EXPECT_THROW(render_cot_writing("t", std::vector<WritingSample>{}, ""), ConfigError);
  EXPECT_THROW(TemplateSet::defaults().render("zero_shot", {}), ConfigError);

  ticl::testing::ScratchDir dir("tpl");
  ticl::testing::spit(dir.path() / "zero_shot.txt", "Custom: {{target_task}}\n");
  auto set = TemplateSet::load(dir.path());
  EXPECT_EQ(render_zero_shot("go", set), "Custom: go\n");
  EXPECT_NE(set.get("judge"), "");
}

TEST(Templates, SubstitutionIsSinglePass) {
  EXPECT_NE(render_zero_shot("{{target_task}}").find("{{target_task}}"), std::string::npos);
}

TEST(Parse, FencedOutput) {
  EXPECT_EQ(parse_fenced_output("```\nout\n```"), "out");
  EXPECT_EQ(parse_fenced_output("Sure!\n```text\nline 1\nline 2\n```\nbye"), "line 1\nline 2");
  EXPECT_EQ(parse_fenced_output("  no fence  "), "no fence");
  EXPECT_EQ(parse_fenced_output("```\nunclosed"), "unclosed");
  EXPECT_THROW(parse_fenced_output("```\n```"), ParseError);
  EXPECT_THROW(parse_fenced_output("   "), ParseError);
}

TEST(Parse, ExplanationJson) {
  auto p = parse_explanation_json(R"(noise {"explanation": "Too long.", "is_consistent": "No"} trailing)");
  EXPECT_EQ(p.explanation, "Too long.");
  EXPECT_FALSE(p.is_consistent);
  EXPECT_TRUE(parse_explanation_json(R"({"explanation": "ok", "is_consistent": true})").is_consistent);
  EXPECT_TRUE(parse_explanation_json("```json\n{\"explanation\": \"ok\", \"is_consistent\": \"yes\"}\n```").is_consistent);
  EXPECT_THROW(parse_explanation_json(R"({"explanation": "x", "is_consistent": "maybe"})"), ParseError);
  EXPECT_THROW(parse_explanation_json("not json"), ParseError);
  EXPECT_THROW(parse_explanation_json(R"(x {"explanation": "x", "is_consistent": "no"})", true), ParseError);
}

TEST(Parse, JudgeAnswer) {
  EXPECT_EQ(parse_judge_json(R"({"explanation": {}, "answer": " b "})"), JudgeAnswer::kB);
  EXPECT_EQ(parse_judge_json(R"({"answer": "A"})"), JudgeAnswer::kA);
  EXPECT_THROW(parse_judge_json(R"({"answer": "C"})"), ParseError);
  EXPECT_THROW(parse_judge_json(R"({"verdict": "A"})"), ParseError);
}

TEST(Parse, OproResponse) {
  EXPECT_EQ(parse_opro_response(R"({"thought": "t", "response": "final text"})"), "final text");
  EXPECT_EQ(parse_opro_response("```\nfallback\n```"), "fallback");
  EXPECT_EQ(format_score(0.25), "0.250");
}
