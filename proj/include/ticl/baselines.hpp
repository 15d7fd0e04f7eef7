// SPDX-License-Identifier: Apache-2.0
//
// Tuning-free baselines (zero-shot, few-shot, two-stage CoT, OPRO) and the
// embedding scorers behind OPRO's style similarity.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ticl/corpus.hpp"
#include "ticl/lexstats.hpp"
#include "ticl/outputs.hpp"
#include "ticl/prompts.hpp"
#include "ticl/provider.hpp"

namespace ticl::baselines {

enum class Kind { kZeroShot, kFewShot, kCot, kOpro };

std::string to_string(Kind kind);
Kind parse_kind(const std::string& text);

struct BaselineSpec {
  Kind kind = Kind::kFewShot;
  std::size_t generations_per_task = 5;
  /// Decoding defaults; the prompt field is ignored.
  GenerationRequest decoding;
  std::uint64_t seed = 0;
  const prompts::TemplateSet* templates = nullptr;

  void validate() const;
};

/// Each returns exactly `generations_per_task` entries, failures marked per
/// entry. Throws when every generation failed.
std::vector<Generation> run_zero_shot(const std::string& task, Provider& provider, const BaselineSpec& spec);
std::vector<Generation> run_few_shot(const std::string& task, std::span<const WritingSample> train,
                                     Provider& provider, const BaselineSpec& spec);
/// Two calls per generation: a fresh style guide, then the writing.
std::vector<Generation> run_cot(const std::string& task, std::span<const WritingSample> train, Provider& provider,
                                const BaselineSpec& spec);

// ---------------------------------------------------------------------------
// Style scoring

class EmbeddingScorer {
 public:
  virtual ~EmbeddingScorer() = default;
  virtual std::vector<double> embed(const std::string& text) = 0;
  virtual std::string id() const = 0;
};

/// Deterministic pseudo-embeddings derived from a hash of the text. Equal
/// texts get equal vectors; anything else is effectively random.
class HashScorer : public EmbeddingScorer {
 public:
  explicit HashScorer(std::size_t dim = 64, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {}
  std::vector<double> embed(const std::string& text) override;
  std::string id() const override { return "hash"; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// TF-IDF vectors over a vocabulary fitted on a background corpus.
class TfidfScorer : public EmbeddingScorer {
 public:
  explicit TfidfScorer(std::span<const std::string> background);
  std::vector<double> embed(const std::string& text) override;
  std::string id() const override { return "tfidf"; }

 private:
  lexstats::TfidfModel model_;
};

struct EmbeddingProfile {
  std::string endpoint_url;
  std::string model_name;
  std::string api_key_env;
  /// Expected vector length; 0 accepts any.
  std::size_t dimension = 0;
  std::string input_field = "input";
  std::string output_path = "/data/0/embedding";
  int timeout_ms = 60000;
  int max_retries = 3;
};

/// Remote embedding endpoint (OpenAI-style request/response by default).
class HttpEmbeddingScorer : public EmbeddingScorer {
 public:
  explicit HttpEmbeddingScorer(EmbeddingProfile profile);
  std::vector<double> embed(const std::string& text) override;
  std::string id() const override { return profile_.model_name; }

 private:
  EmbeddingProfile profile_;
  std::string token_;
};

/// Mean cosine between the candidate's embedding and each reference's, in
/// [-1, 1]. A zero-norm embedding counts as similarity 0.
double style_score(const std::string& candidate, std::span<const std::string> references, EmbeddingScorer& scorer);

// ---------------------------------------------------------------------------
// OPRO

struct OproConfig {
  std::size_t iterations = 10;
  std::size_t candidates_per_iteration = 2;
  /// Train examples shown in each meta-prompt.
  std::size_t exemplars = 3;
  /// Generations per validation task when scoring an instruction.
  std::size_t scoring_generations_per_task = 1;
  std::string seed_instruction = "Let's think step by step";
  double meta_temperature = 1.0;
  BaselineSpec spec{Kind::kOpro, 5, {}, 0, nullptr};

  void validate() const;
};

struct OproState {
  std::vector<prompts::ScoredInstruction> history;
  std::size_t iterations = 0;
  std::size_t candidates_per_iteration = 0;
  std::string best_instruction;
  double best_score = 0.0;
  /// Scoring generations spent on proposed candidates (the seed excluded).
  long candidate_scoring_generations = 0;
  long seed_scoring_generations = 0;
  long skipped_candidates = 0;
};

struct OproResult {
  OproState state;
  /// Test task sample_id -> generations with the best instruction.
  std::map<std::string, std::vector<Generation>> outputs;
};

/// Throws ConfigError without a scorer and DataError on an empty val split.
OproResult run_opro(const SplitCorpus& split, Provider& provider, EmbeddingScorer* scorer, const OproConfig& config);

}  // namespace ticl::baselines
