// SPDX-License-Identifier: Apache-2.0
#include "ticl/judge.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <spdlog/spdlog.h>

#include "ticl/errors.hpp"
#include "ticl/rng.hpp"

namespace ticl::judge {

std::string to_string(Orientation o) { return o == Orientation::kAB ? "AB" : "BA"; }
std::string to_string(PlanMode m) { return m == PlanMode::kVsCandidate ? "vs_candidate" : "vs_author"; }
std::string to_string(SeEstimator e) { return e == SeEstimator::kBinomial ? "binomial" : "author_cluster"; }

SeEstimator parse_se_estimator(const std::string& text) {
  if (text == "binomial") return SeEstimator::kBinomial;
  if (text == "author_cluster") return SeEstimator::kAuthorCluster;
  throw ConfigError("unknown std-error estimator '" + text + "'");
}

DistractorStrategy parse_distractor_strategy(const std::string& text) {
  if (text == "same_prompt") return DistractorStrategy::kSamePrompt;
  if (text == "tfidf") return DistractorStrategy::kTfidf;
  throw ConfigError("unknown distractor strategy '" + text + "'");
}

namespace {

void check_counts(const TaskOutputs& outputs, const char* side, const PlanOptions& options) {
  if (!options.require_counts) return;
  if (outputs.size() != options.tasks) {
    throw DataError(std::string(side) + " outputs cover " + std::to_string(outputs.size()) + " tasks; expected " +
                    std::to_string(options.tasks));
  }
  for (const auto& [task, gens] : outputs) {
    if (gens.size() != options.generations_per_task) {
      throw DataError(std::string(side) + " has " + std::to_string(gens.size()) + " generations for task '" + task +
                      "'; expected " + std::to_string(options.generations_per_task));
    }
  }
}

}  // namespace

ComparisonPlan plan_vs_candidate(const std::string& author_id, const TaskOutputs& ours, const TaskOutputs& theirs,
                                 std::uint64_t seed, const PlanOptions& options) {
  check_counts(ours, "left", options);
  check_counts(theirs, "right", options);
  std::vector<PlannedPair> all;
  for (const auto& [task, left] : ours) {
    auto it = theirs.find(task);
    if (it == theirs.end()) throw DataError("right side has no outputs for task '" + task + "'");
    for (std::size_t i = 0; i < left.size(); ++i) {
      for (std::size_t j = 0; j < it->second.size(); ++j) {
        all.push_back({author_id, task, options.left_source, options.right_source, i, j, left[i], it->second[j],
                       Orientation::kAB});
      }
    }
  }
  if (options.sample_n > all.size()) {
    throw DataError("sample_n " + std::to_string(options.sample_n) + " exceeds the " + std::to_string(all.size()) +
                    " available pairs");
  }
  ComparisonPlan plan;
  plan.mode = PlanMode::kVsCandidate;
  plan.plan_seed = seed;
  plan.candidate_pairs = all.size();
  Rng rng(seed);
  for (std::size_t idx : rng.sample(all.size(), options.sample_n)) {
    PlannedPair p = all[idx];
    p.orientation = rng.coin() ? Orientation::kBA : Orientation::kAB;
    plan.pairs.push_back(std::move(p));
  }
  return plan;
}

ComparisonPlan plan_vs_author(const std::string& author_id, const TaskOutputs& ours,
                              const std::map<std::string, std::string>& author, const PlanOptions& options) {
  check_counts(ours, "left", options);
  ComparisonPlan plan;
  plan.mode = PlanMode::kVsAuthor;
  for (const auto& [task, gens] : ours) {
    auto it = author.find(task);
    if (it == author.end()) throw DataError("no author reference for task '" + task + "'");
    for (std::size_t i = 0; i < gens.size(); ++i) {
      for (Orientation o : {Orientation::kAB, Orientation::kBA}) {
        plan.pairs.push_back({author_id, task, options.left_source, "author", i, 0, gens[i], it->second, o});
      }
      ++plan.candidate_pairs;
    }
  }
  return plan;
}

ComparisonPlan merge(const std::vector<ComparisonPlan>& plans) {
  ComparisonPlan out;
  if (plans.empty()) return out;
  out.mode = plans.front().mode;
  out.plan_seed = plans.front().plan_seed;
  for (const auto& p : plans) {
    if (p.mode != out.mode) throw ConfigError("cannot merge plans of different modes");
    out.candidate_pairs += p.candidate_pairs;
    out.pairs.insert(out.pairs.end(), p.pairs.begin(), p.pairs.end());
  }
  return out;
}

Side side_for(prompts::JudgeAnswer answer, Orientation orientation) {
  const bool a = answer == prompts::JudgeAnswer::kA;
  if (orientation == Orientation::kAB) return a ? Side::kLeft : Side::kRight;
  return a ? Side::kRight : Side::kLeft;
}

std::vector<Verdict> execute(const ComparisonPlan& plan, const std::vector<std::string>& author_train_examples,
                             Provider& provider, std::uint64_t seed, const ExecuteOptions& options) {
  std::map<std::string, std::vector<std::string>> pools;
  for (const auto& p : plan.pairs) pools[p.author_id] = author_train_examples;
  return execute(plan, pools, provider, seed, options);
}

std::vector<Verdict> execute(const ComparisonPlan& plan,
                             const std::map<std::string, std::vector<std::string>>& exemplars_by_author,
                             Provider& provider, std::uint64_t seed, const ExecuteOptions& options) {
  const auto& templates = options.templates ? *options.templates : prompts::TemplateSet::defaults();
  Rng rng(seed);
  std::map<std::string, std::vector<std::string>> fixed;

  std::vector<GenerationRequest> requests;
  std::vector<Verdict> verdicts(plan.pairs.size());
  for (std::size_t i = 0; i < plan.pairs.size(); ++i) {
    const auto& pair = plan.pairs[i];
    auto pool = exemplars_by_author.find(pair.author_id);
    if (pool == exemplars_by_author.end() || pool->second.size() < options.examples_per_judge) {
      throw DataError("author '" + pair.author_id + "' has fewer than " + std::to_string(options.examples_per_judge) +
                      " train texts for judge exemplars");
    }
    std::vector<std::string> exemplars;
    if (options.redraw_exemplars || !fixed.count(pair.author_id)) {
      for (std::size_t idx : rng.sample(pool->second.size(), options.examples_per_judge)) {
        exemplars.push_back(pool->second[idx]);
      }
      if (!options.redraw_exemplars) fixed[pair.author_id] = exemplars;
    } else {
      exemplars = fixed[pair.author_id];
    }
    const bool ab = pair.orientation == Orientation::kAB;
    GenerationRequest req;
    req.prompt = prompts::render_judge(exemplars, ab ? pair.left_text : pair.right_text,
                                       ab ? pair.right_text : pair.left_text, options.examples_per_judge, templates);
    req.temperature = options.temperature;
    req.max_tokens = options.max_tokens;
    req.tag = "judge";
    requests.push_back(std::move(req));

    verdicts[i].pair_index = i;
    verdicts[i].author_id = pair.author_id;
    verdicts[i].task_id = pair.task_id;
    verdicts[i].orientation = pair.orientation;
  }

  std::vector<std::size_t> pending(plan.pairs.size());
  for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;
  for (int round = 1; round <= options.max_parse_attempts && !pending.empty(); ++round) {
    std::vector<GenerationRequest> batch;
    for (auto i : pending) batch.push_back(requests[i]);
    auto results = provider.generate_batch(batch);
    std::vector<std::size_t> retry;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      Verdict& v = verdicts[pending[k]];
      const BatchItem& item = results[k];
      if (!item.ok()) {
        v.error = item.error;
        continue;  // transport failures were already retried by the provider
      }
      v.parse_attempts = round;
      v.judge_latency_ms += item.result->latency_ms;
      try {
        auto answer = prompts::parse_judge_json(item.result->text);
        v.raw_answer = answer;
        v.winner = side_for(answer, v.orientation);
        v.error.clear();
      } catch (const ParseError& e) {
        v.error = e.what();
        retry.push_back(pending[k]);
      }
    }
    pending = std::move(retry);
  }

  const bool any = std::any_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.resolved(); });
  if (!verdicts.empty() && !any) throw DataError("judge: every comparison ended unresolved");
  return verdicts;
}

double binomial_se_percent(long wins, long total) {
  if (total <= 0) return 0.0;
  const double p = static_cast<double>(wins) / static_cast<double>(total);
  return 100.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(total));
}

namespace {

// Sample standard deviation of the values divided by sqrt(count).
double cluster_se(const std::vector<double>& values) {
  if (values.size() < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return sd / std::sqrt(static_cast<double>(values.size()));
}

}  // namespace

WinRateReport aggregate(const std::vector<Verdict>& verdicts, SeEstimator estimator, const std::string& mode) {
  if (verdicts.empty()) throw DataError("aggregate: no verdicts");
  WinRateReport report;
  report.mode = mode;
  report.estimator = estimator;
  for (const auto& v : verdicts) {
    auto& s = report.per_author[v.author_id];
    if (!v.resolved()) {
      ++s.unresolved;
      ++report.unresolved;
      continue;
    }
    ++s.total;
    ++report.total;
    if (*v.winner == Side::kLeft) {
      ++s.wins;
      ++report.wins;
    }
  }
  std::vector<double> rates;
  for (auto& [author, s] : report.per_author) {
    if (s.total == 0) {
      s.flagged = true;
      spdlog::warn("author {} has no resolved verdicts; excluded from the mean", author);
      continue;
    }
    s.win_rate = 100.0 * static_cast<double>(s.wins) / static_cast<double>(s.total);
    s.std_error = binomial_se_percent(s.wins, s.total);
    rates.push_back(s.win_rate);
  }
  if (rates.empty()) throw DataError("aggregate: no author has a resolved verdict");
  double sum = 0.0;
  for (double r : rates) sum += r;
  report.win_rate = sum / static_cast<double>(rates.size());
  report.std_error =
      estimator == SeEstimator::kBinomial ? binomial_se_percent(report.wins, report.total) : cluster_se(rates);
  return report;
}

ZTest two_proportion_z_test(long wins_a, long total_a, long wins_b, long total_b) {
  if (total_a <= 0 || total_b <= 0) throw DataError("two-proportion test needs nonzero totals");
  const double na = static_cast<double>(total_a), nb = static_cast<double>(total_b);
  const double pa = wins_a / na, pb = wins_b / nb;
  const double pooled = static_cast<double>(wins_a + wins_b) / (na + nb);
  const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / na + 1.0 / nb));
  ZTest t;
  if (se == 0.0) return t;  // pooled proportion 0 or 1 forces pa == pb
  t.z = (pa - pb) / se;
  t.p_value = std::erfc(std::fabs(t.z) / std::sqrt(2.0));
  return t;
}

double significance(const WinRateReport& a, const WinRateReport& b) {
  if (!a.mode.empty() && !b.mode.empty() && a.mode != b.mode) {
    throw ConfigError("significance: reports use different comparison modes");
  }
  return two_proportion_z_test(a.wins, a.total, b.wins, b.total).p_value;
}

std::string format_mean_se(double mean, double se, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f_{%.*f}", decimals, mean, decimals, se);
  return buf;
}

BenchmarkReport benchmark_judge(const std::vector<AuthorCorpus>& corpora, DistractorStrategy strategy,
                                Provider& provider, const BenchmarkOptions& options) {
  BenchmarkReport report;
  report.strategy = strategy == DistractorStrategy::kSamePrompt ? "same_prompt" : "tfidf";
  Rng rng(options.seed);

  for (const auto& corpus : corpora) {
    AuthorAccuracy acc;
    acc.author_id = corpus.author_id;
    const std::uint64_t author_seed = rng.next();
    try {
      SplitCorpus sc = split(corpus, options.seed, options.split);
      std::vector<std::string> exemplars;
      for (const auto& s : sc.train) exemplars.push_back(s.reference);
      std::vector<WritingSample> held_out = sc.val;
      held_out.insert(held_out.end(), sc.test.begin(), sc.test.end());

      std::vector<AuthorCorpus> pool;
      for (const auto& other : corpora) {
        if (other.author_id != corpus.author_id) pool.push_back(other);
      }

      Rng author_rng(author_seed);
      ComparisonPlan plan;
      plan.mode = PlanMode::kVsCandidate;
      plan.plan_seed = author_seed;
      std::set<std::string> used;
      for (const auto& sample : held_out) {
        WritingSample distractor = strategy == DistractorStrategy::kSamePrompt
                                       ? select_distractor_same_prompt(sample, pool, author_rng.next())
                                       : select_distractor_tfidf(corpus.author_id, exemplars, pool, used).sample;
        used.insert(distractor.author_id + "/" + distractor.sample_id);
        PlannedPair p;
        p.author_id = corpus.author_id;
        p.task_id = sample.sample_id;
        p.left_source = "author";
        p.right_source = "distractor:" + distractor.author_id + "/" + distractor.sample_id;
        p.left_text = sample.reference;
        p.right_text = distractor.reference;
        p.orientation = author_rng.coin() ? Orientation::kBA : Orientation::kAB;
        plan.pairs.push_back(std::move(p));
      }
      plan.candidate_pairs = plan.pairs.size();

      auto verdicts = execute(plan, exemplars, provider, author_rng.next(), options.execute);
      for (const auto& v : verdicts) {
        if (!v.resolved()) continue;
        ++acc.total;
        if (*v.winner == Side::kLeft) ++acc.correct;
      }
      acc.accuracy = acc.total ? 100.0 * static_cast<double>(acc.correct) / static_cast<double>(acc.total) : 0.0;
      acc.std_error = binomial_se_percent(acc.correct, acc.total);
    } catch (const DataError& e) {
      acc.skipped = true;
      acc.note = e.what();
      spdlog::warn("benchmark: skipping author {}: {}", corpus.author_id, e.what());
    }
    report.authors.push_back(std::move(acc));
  }

  std::vector<const AuthorAccuracy*> ranked;
  for (const auto& a : report.authors) {
    if (!a.skipped && a.total > 0) ranked.push_back(&a);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const AuthorAccuracy* x, const AuthorAccuracy* y) {
    if (x->accuracy != y->accuracy) return x->accuracy > y->accuracy;
    return x->author_id < y->author_id;
  });
  auto summarize = [](const std::vector<const AuthorAccuracy*>& items, double& mean, double& se) {
    std::vector<double> values;
    for (const auto* a : items) values.push_back(a->accuracy);
    mean = 0.0;
    for (double v : values) mean += v;
    if (!values.empty()) mean /= static_cast<double>(values.size());
    se = cluster_se(values);
  };
  summarize(ranked, report.mean_accuracy, report.mean_std_error);
  ranked.resize(std::min(ranked.size(), options.top_k));
  for (const auto* a : ranked) report.top_k.push_back(a->author_id);
  summarize(ranked, report.top_k_accuracy, report.top_k_std_error);
  return report;
}

}  // namespace ticl::judge
