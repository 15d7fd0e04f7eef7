// SPDX-License-Identifier: Apache-2.0
//
// Pairwise LLM-as-a-judge evaluation: comparison planning with order-bias
// control, verdict collection, win-rate statistics and significance tests,
// and judge-accuracy benchmarking against distractor texts.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ticl/corpus.hpp"
#include "ticl/prompts.hpp"
#include "ticl/provider.hpp"

namespace ticl::judge {

/// task_id -> generations for that task.
using TaskOutputs = std::map<std::string, std::vector<std::string>>;

/// kAB shows the left text as option A; kBA shows it as option B.
enum class Orientation { kAB, kBA };
enum class Side { kLeft, kRight };
enum class PlanMode { kVsCandidate, kVsAuthor };

std::string to_string(Orientation o);
std::string to_string(PlanMode m);

struct PlannedPair {
  std::string author_id;
  std::string task_id;
  std::string left_source;
  std::string right_source;
  std::size_t left_index = 0;
  std::size_t right_index = 0;
  std::string left_text;
  std::string right_text;
  Orientation orientation = Orientation::kAB;
};

struct ComparisonPlan {
  PlanMode mode = PlanMode::kVsCandidate;
  std::uint64_t plan_seed = 0;
  /// Size of the full cross product before subsampling.
  std::size_t candidate_pairs = 0;
  std::vector<PlannedPair> pairs;
};

struct PlanOptions {
  std::size_t sample_n = 40;
  std::size_t generations_per_task = 5;
  std::size_t tasks = 3;
  /// Enforce the generation and task counts above.
  bool require_counts = true;
  std::string left_source = "ours";
  std::string right_source = "theirs";
};

/// Cross product per task, `sample_n` pairs drawn without replacement, each
/// with a uniform random orientation. The left side is `ours`.
ComparisonPlan plan_vs_candidate(const std::string& author_id, const TaskOutputs& ours, const TaskOutputs& theirs,
                                 std::uint64_t seed, const PlanOptions& options = {});

/// Every generation against the author's single reference per task, each
/// pair in both orientations (AB then BA). No subsampling.
ComparisonPlan plan_vs_author(const std::string& author_id, const TaskOutputs& ours,
                              const std::map<std::string, std::string>& author, const PlanOptions& options = {});

/// Concatenates per-author plans of one mode.
ComparisonPlan merge(const std::vector<ComparisonPlan>& plans);

struct Verdict {
  std::size_t pair_index = 0;
  std::string author_id;
  std::string task_id;
  Orientation orientation = Orientation::kAB;
  std::optional<Side> winner;
  std::optional<prompts::JudgeAnswer> raw_answer;
  long judge_latency_ms = 0;
  int parse_attempts = 0;
  std::string error;

  bool resolved() const { return winner.has_value(); }
};

/// Maps the judge's letter back to a side through the pair's orientation.
Side side_for(prompts::JudgeAnswer answer, Orientation orientation);

struct ExecuteOptions {
  std::size_t examples_per_judge = 5;
  /// Total parse attempts per pair before it is recorded as unresolved.
  int max_parse_attempts = 2;
  /// Draw a fresh exemplar set for every pair (otherwise one set per call).
  bool redraw_exemplars = true;
  double temperature = 0.0;
  int max_tokens = 1024;
  const prompts::TemplateSet* templates = nullptr;
};

/// Judges every pair. Exemplars come from `author_train_examples`; draws are
/// made up front so results do not depend on completion order. Throws
/// DataError when every pair ends unresolved.
std::vector<Verdict> execute(const ComparisonPlan& plan, const std::vector<std::string>& author_train_examples,
                             Provider& provider, std::uint64_t seed, const ExecuteOptions& options = {});

/// As above with per-author exemplar pools for multi-author plans.
std::vector<Verdict> execute(const ComparisonPlan& plan,
                             const std::map<std::string, std::vector<std::string>>& exemplars_by_author,
                             Provider& provider, std::uint64_t seed, const ExecuteOptions& options = {});

enum class SeEstimator { kBinomial, kAuthorCluster };

std::string to_string(SeEstimator e);
SeEstimator parse_se_estimator(const std::string& text);

struct AuthorStats {
  long wins = 0;
  long total = 0;
  long unresolved = 0;
  double win_rate = 0.0;
  double std_error = 0.0;
  /// No resolved verdicts; excluded from the overall mean.
  bool flagged = false;
};

struct WinRateReport {
  std::string mode;
  SeEstimator estimator = SeEstimator::kBinomial;
  std::map<std::string, AuthorStats> per_author;
  /// Unweighted mean of per-author win rates (percent).
  double win_rate = 0.0;
  double std_error = 0.0;
  long wins = 0;
  long total = 0;
  long unresolved = 0;
};

/// Wins are counted for the left source. Throws DataError on an empty input
/// or when no author has a resolved verdict.
WinRateReport aggregate(const std::vector<Verdict>& verdicts, SeEstimator estimator = SeEstimator::kBinomial,
                        const std::string& mode = {});

/// 100 * sqrt(p (1 - p) / n) for wins/total.
double binomial_se_percent(long wins, long total);

struct ZTest {
  double z = 0.0;
  double p_value = 1.0;
};

/// Pooled two-proportion z-test, two-sided.
ZTest two_proportion_z_test(long wins_a, long total_a, long wins_b, long total_b);

/// p-value comparing the pooled resolved counts of two reports.
double significance(const WinRateReport& a, const WinRateReport& b);

enum class DistractorStrategy { kSamePrompt, kTfidf };
DistractorStrategy parse_distractor_strategy(const std::string& text);

struct BenchmarkOptions {
  std::uint64_t seed = 0;
  std::size_t top_k = 10;
  SplitOptions split;
  ExecuteOptions execute;
};

struct AuthorAccuracy {
  std::string author_id;
  long correct = 0;
  long total = 0;
  double accuracy = 0.0;
  double std_error = 0.0;
  bool skipped = false;
  std::string note;
};

struct BenchmarkReport {
  std::string strategy;
  std::vector<AuthorAccuracy> authors;
  std::vector<std::string> top_k;
  double mean_accuracy = 0.0;
  double mean_std_error = 0.0;
  double top_k_accuracy = 0.0;
  double top_k_std_error = 0.0;
};

/// Each held-out sample (val + test) of each author is paired against a
/// distractor from another author and judged with exemplars from the same
/// author's train split. Accuracy is the share of pairs won by the true text.
BenchmarkReport benchmark_judge(const std::vector<AuthorCorpus>& corpora, DistractorStrategy strategy,
                                Provider& provider, const BenchmarkOptions& options = {});

/// "mean_{se}" with one decimal, as in published accuracy tables.
std::string format_mean_se(double mean, double se, int decimals = 1);

}  // namespace ticl::judge
