// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the `ticl` executable. Each command reads a
// RunConfig, writes deterministic artifacts under the output directory and
// prints a short summary.
#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ticl/baselines.hpp"
#include "ticl/corpus.hpp"
#include "ticl/engine.hpp"
#include "ticl/judge.hpp"
#include "ticl/lexstats.hpp"
#include "ticl/provider.hpp"

namespace ticl::cli {

/// Provider profile for one role, as written in the config file.
struct ProviderProfile {
  /// scripted | http
  std::string type = "scripted";
  std::filesystem::path script;
  HttpProfile http;
  std::filesystem::path telemetry;
};

struct EmbeddingSettings {
  /// hash | tfidf | http
  std::string type = "tfidf";
  std::size_t dimension = 64;
  baselines::EmbeddingProfile http;
};

struct JudgeSettings {
  judge::PlanOptions plan;
  judge::ExecuteOptions execute;
  judge::SeEstimator estimator = judge::SeEstimator::kBinomial;
  judge::DistractorStrategy distractor = judge::DistractorStrategy::kTfidf;
  std::size_t top_k = 10;
};

struct RunConfig {
  std::vector<std::filesystem::path> corpus_paths;
  LoadOptions load;
  SplitOptions split;
  std::map<std::string, ProviderProfile> providers;
  EmbeddingSettings embedding;
  engine::TiclConfig ticl;
  baselines::BaselineSpec baseline;
  baselines::OproConfig opro;
  JudgeSettings judge;
  lexstats::FightinConfig analysis;
  std::filesystem::path output_dir = "out";
  std::filesystem::path templates_dir;
  std::uint64_t seed = 0;
};

/// Parses a JSON config. "${VAR}" inside strings expands from the
/// environment; relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const std::string& source = "config");
RunConfig load_config(const std::filesystem::path& path);
/// Expands ${VAR}; throws ConfigError when a variable is unset.
std::string interpolate_env(const std::string& text);

/// Provider for a role; roles without a profile fall back to "generation".
std::shared_ptr<Provider> make_provider(const RunConfig& config, const std::string& role);
std::unique_ptr<baselines::EmbeddingScorer> make_scorer(const RunConfig& config,
                                                        const std::vector<AuthorCorpus>& corpora);

/// Exclusive per-output-directory lock (a .lock file created with O_EXCL).
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path path_;
};

struct CommonArgs {
  std::filesystem::path config;
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> authors;
  std::optional<std::filesystem::path> templates;
};

struct RunArgs {
  CommonArgs common;
  std::string method = "ticl";
  std::string preset = "full";
  bool resume = false;
  std::optional<long> stop_after_step;
};

struct EvaluateArgs {
  CommonArgs common;
  /// vs_candidate | vs_author
  std::string mode = "vs_author";
  std::filesystem::path ours;
  std::filesystem::path theirs;
  std::string label;
};

struct BenchmarkArgs {
  CommonArgs common;
  std::optional<std::string> strategy;
};

struct AnalyzeArgs {
  CommonArgs common;
  std::filesystem::path a;
  std::filesystem::path b;
  std::string label;
};

struct ReportArgs {
  std::filesystem::path input;
};

void cmd_ingest(const CommonArgs& args, std::ostream& out);
void cmd_run(const RunArgs& args, std::ostream& out);
void cmd_evaluate(const EvaluateArgs& args, std::ostream& out);
void cmd_benchmark_judge(const BenchmarkArgs& args, std::ostream& out);
void cmd_analyze(const AnalyzeArgs& args, std::ostream& out);
void cmd_report(const ReportArgs& args, std::ostream& out);

/// 1 internal, 2 config, 3 data, 4 provider (transport or unparseable output).
int exit_code_for(ErrorKind kind);

}  // namespace ticl::cli
