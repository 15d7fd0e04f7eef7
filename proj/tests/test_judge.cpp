// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "ticl/errors.hpp"
#include "ticl/judge.hpp"

using namespace ticl;
using namespace ticl::judge;
using ticl::testing::chi_square_oracle;

namespace {

TaskOutputs outputs(const std::string& prefix, int tasks = 3, int gens = 5) {
  TaskOutputs o;
  for (int t = 0; t < tasks; ++t) {
    for (int g = 0; g < gens; ++g) {
      o["task" + std::to_string(t)].push_back(prefix + " t" + std::to_string(t) + " g" + std::to_string(g));
    }
  }
  return o;
}

std::map<std::string, std::string> refs(int tasks = 3) {
  std::map<std::string, std::string> r;
  for (int t = 0; t < tasks; ++t) r["task" + std::to_string(t)] = "reference t" + std::to_string(t);
  return r;
}

std::vector<std::string> exemplars() { return {"e1", "e2", "e3", "e4", "e5", "e6", "e7"}; }

}  // namespace

TEST(Plan, VsCandidateArithmetic) {
  auto plan = plan_vs_candidate("a1", outputs("ours"), outputs("theirs"), 7);
  EXPECT_EQ(plan.candidate_pairs, 75u);
  EXPECT_EQ(plan.pairs.size(), 40u);
  std::set<std::tuple<std::string, std::size_t, std::size_t>> seen;
  for (const auto& p : plan.pairs) {
    EXPECT_TRUE(seen.insert({p.task_id, p.left_index, p.right_index}).second);
    EXPECT_EQ(p.left_text, "ours t" + p.task_id.substr(4) + " g" + std::to_string(p.left_index));
  }
  auto again = plan_vs_candidate("a1", outputs("ours"), outputs("theirs"), 7);
  for (std::size_t i = 0; i < plan.pairs.size(); ++i) {
    EXPECT_EQ(plan.pairs[i].left_text, again.pairs[i].left_text);
    EXPECT_EQ(plan.pairs[i].orientation, again.pairs[i].orientation);
  }
}

TEST(Plan, VsAuthorBothOrientations) {
  auto plan = plan_vs_author("a1", outputs("ours"), refs());
  EXPECT_EQ(plan.pairs.size(), 30u);
  int ab = 0;
  for (std::size_t i = 0; i < plan.pairs.size(); i += 2) {
    EXPECT_EQ(plan.pairs[i].left_text, plan.pairs[i + 1].left_text);
    EXPECT_EQ(plan.pairs[i].orientation, Orientation::kAB);
    EXPECT_EQ(plan.pairs[i + 1].orientation, Orientation::kBA);
    ++ab;
  }
  EXPECT_EQ(ab, 15);
}

TEST(Plan, TenAuthorTotals) {
  std::vector<ComparisonPlan> cands, authors;
  for (int a = 0; a < 10; ++a) {
    const std::string id = "author" + std::to_string(a);
    cands.push_back(plan_vs_candidate(id, outputs("o"), outputs("t"), static_cast<std::uint64_t>(a)));
    authors.push_back(plan_vs_author(id, outputs("o"), refs()));
  }
  EXPECT_EQ(merge(cands).pairs.size(), 400u);
  EXPECT_EQ(merge(authors).pairs.size(), 300u);
  EXPECT_THROW(merge({cands[0], authors[0]}), ConfigError);
}

TEST(Plan, Errors) {
  PlanOptions big;
  big.sample_n = 76;
  EXPECT_THROW(plan_vs_candidate("a", outputs("o"), outputs("t"), 1, big), DataError);
  EXPECT_THROW(plan_vs_candidate("a", outputs("o", 3, 4), outputs("t"), 1), DataError);
  EXPECT_THROW(plan_vs_author("a", outputs("o"), refs(2)), DataError);
  PlanOptions loose;
  loose.require_counts = false;
  loose.sample_n = 4;
  EXPECT_EQ(plan_vs_candidate("a", outputs("o", 1, 2), outputs("t", 1, 2), 1, loose).pairs.size(), 4u);
}

TEST(Plan, OrientationIsMixed) {
  int ab = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& p : plan_vs_candidate("a", outputs("o"), outputs("t"), seed).pairs) {
      ab += p.orientation == Orientation::kAB;
      ++total;
    }
  }
  EXPECT_GT(ab, total * 4 / 10);
  EXPECT_LT(ab, total * 6 / 10);
}

TEST(Execute, PositionBiasedJudgeGivesFiftyPercentVsAuthor) {
  ScriptedProvider judge_stub({reply(ScriptMatcher::any(), R"({"answer": "A"})", std::nullopt)});
  auto plan = plan_vs_author("a1", outputs("ours"), refs());
  auto verdicts = execute(plan, exemplars(), judge_stub, 3);
  auto report = aggregate(verdicts, SeEstimator::kBinomial, "vs_author");
  EXPECT_EQ(report.wins, 15);
  EXPECT_EQ(report.total, 30);
  EXPECT_DOUBLE_EQ(report.win_rate, 50.0);
  EXPECT_EQ(judge_stub.calls(), 30);
}

TEST(Execute, PromptsCarryFiveExemplarsAndTheRightOrder) {
  ScriptedProvider judge_stub({reply(ScriptMatcher::any(), R"({"answer": "B"})", std::nullopt)});
  auto plan = plan_vs_author("a1", outputs("ours", 1, 1), refs(1), PlanOptions{40, 1, 1, true, "ours", "author"});
  auto verdicts = execute(plan, exemplars(), judge_stub, 3);
  auto log = judge_stub.log();
  ASSERT_EQ(log.size(), 2u);
  for (const auto& r : log) {
    EXPECT_EQ(ticl::testing::count_substr(r.prompt, "EXAMPLE "), 5);
    EXPECT_EQ(r.tag, "judge");
    EXPECT_EQ(r.temperature, 0.0);
  }
  EXPECT_LT(log[0].prompt.find("ours t0 g0"), log[0].prompt.find("reference t0"));
  EXPECT_GT(log[1].prompt.find("ours t0 g0"), log[1].prompt.find("reference t0"));
  EXPECT_EQ(*verdicts[0].winner, Side::kRight);
  EXPECT_EQ(*verdicts[1].winner, Side::kLeft);
}

TEST(Execute, ParseRetryThenUnresolved) {
  ScriptedProvider flaky({reply(ScriptMatcher::any(), "garbage", 1),
                          reply(ScriptMatcher::any(), R"({"answer": "A"})", std::nullopt)});
  auto plan = plan_vs_author("a1", outputs("o", 1, 1), refs(1), PlanOptions{40, 1, 1, true, "ours", "author"});
  ExecuteOptions opts;
  opts.redraw_exemplars = false;
  auto v = execute(plan, exemplars(), flaky, 1, opts);
  int retried = 0;
  for (const auto& x : v) {
    EXPECT_TRUE(x.resolved());
    retried += x.parse_attempts == 2;
  }
  EXPECT_EQ(retried, 1);

  ScriptedProvider broken({reply(ScriptMatcher::any(), "never json", std::nullopt)});
  EXPECT_THROW(execute(plan, exemplars(), broken, 1), DataError);
  EXPECT_EQ(broken.calls(), 4);
  EXPECT_THROW(execute(plan, std::vector<std::string>{"e1"}, broken, 1), DataError);
}

TEST(Aggregate, PerAuthorAndClusterSe) {
  std::vector<Verdict> v;
  auto add = [&](const std::string& a, int wins, int losses) {
    for (int i = 0; i < wins; ++i) v.push_back({v.size(), a, "t", Orientation::kAB, Side::kLeft, {}, 0, 1, ""});
    for (int i = 0; i < losses; ++i) v.push_back({v.size(), a, "t", Orientation::kAB, Side::kRight, {}, 0, 1, ""});
  };
  add("x", 3, 1);
  add("y", 1, 3);
  add("z", 2, 2);
  v.push_back({v.size(), "z", "t", Orientation::kAB, std::nullopt, {}, 0, 2, "bad"});
  auto r = aggregate(v, SeEstimator::kAuthorCluster);
  EXPECT_DOUBLE_EQ(r.win_rate, 50.0);
  EXPECT_EQ(r.unresolved, 1);
  EXPECT_EQ(r.per_author["z"].unresolved, 1);
  // Rates 75, 25, 50: sample sd 25, divided by sqrt(3).
  EXPECT_NEAR(r.std_error, 25.0 / std::sqrt(3.0), 1e-12);
  auto b = aggregate(v, SeEstimator::kBinomial);
  EXPECT_NEAR(b.std_error, binomial_se_percent(6, 12), 1e-12);
  EXPECT_THROW(aggregate({}), DataError);
}

TEST(Stats, BinomialSe) {
  EXPECT_NEAR(binomial_se_percent(53, 100), 4.99, 0.01);
  EXPECT_NEAR(binomial_se_percent(53, 100), 100 * std::sqrt(0.53 * 0.47 / 100), 1e-12);
  EXPECT_EQ(binomial_se_percent(0, 0), 0.0);
}

TEST(Stats, ZTestMatchesChiSquareOracle) {
  std::mt19937_64 gen(99);
  for (int i = 0; i < 20; ++i) {
    std::uniform_int_distribution<long> n(20, 400);
    const long na = n(gen), nb = n(gen);
    const long wa = std::uniform_int_distribution<long>(1, na - 1)(gen);
    const long wb = std::uniform_int_distribution<long>(1, nb - 1)(gen);
    EXPECT_NEAR(two_proportion_z_test(wa, na, wb, nb).p_value, chi_square_oracle(wa, na, wb, nb), 1e-9)
        << wa << "/" << na << " vs " << wb << "/" << nb;
  }
}

TEST(Stats, SignificanceOfIdenticalReportsIsOne) {
  WinRateReport a;
  a.mode = "vs_author";
  a.wins = 53;
  a.total = 100;
  EXPECT_DOUBLE_EQ(significance(a, a), 1.0);
  WinRateReport degenerate = a;
  degenerate.wins = 100;
  EXPECT_DOUBLE_EQ(significance(degenerate, degenerate), 1.0);
  WinRateReport other = a;
  other.mode = "vs_candidate";
  EXPECT_THROW(significance(a, other), ConfigError);
  WinRateReport empty;
  EXPECT_THROW(significance(empty, empty), DataError);
}

TEST(Stats, FormatMeanSe) {
  EXPECT_EQ(format_mean_se(96.64, 1.04), "96.6_{1.0}");
  EXPECT_EQ(format_mean_se(50, 4.99, 2), "50.00_{4.99}");
}

TEST(Benchmark, OracleJudgeIsPerfectAndTopKIsRanked) {
  std::vector<AuthorCorpus> corpora;
  for (const char* id : {"ann", "bob", "cat"}) corpora.push_back(ticl::testing::make_author(id));
  // Answers with whichever option shares the author tag of EXAMPLE 1.
  ScriptedProvider oracle({reply_with(ScriptMatcher::any(), [](const GenerationRequest& r) {
    const auto& p = r.prompt;
    const auto ex = p.find("EXAMPLE 1:");
    const auto by = p.find(" by ", ex);
    const std::string tag = p.substr(by, p.find(" in a", by) - by);
    const auto a = p.find("# Option A:"), b = p.find("# Option B:");
    return p.substr(a, b - a).find(tag) != std::string::npos ? std::string(R"({"answer": "A"})")
                                                               : std::string(R"({"answer": "B"})");
  })});
  BenchmarkOptions opts;
  opts.seed = 5;
  opts.top_k = 2;
  for (auto strategy : {DistractorStrategy::kTfidf, DistractorStrategy::kSamePrompt}) {
    auto report = benchmark_judge(corpora, strategy, oracle, opts);
    ASSERT_EQ(report.authors.size(), 3u);
    for (const auto& a : report.authors) {
      EXPECT_FALSE(a.skipped) << a.note;
      EXPECT_EQ(a.total, 5);
      EXPECT_DOUBLE_EQ(a.accuracy, 100.0);
    }
    EXPECT_DOUBLE_EQ(report.mean_accuracy, 100.0);
    EXPECT_EQ(report.top_k, (std::vector<std::string>{"ann", "bob"}));
  }
  EXPECT_EQ(parse_distractor_strategy("same_prompt"), DistractorStrategy::kSamePrompt);
  EXPECT_THROW(parse_distractor_strategy("nope"), ConfigError);
}
