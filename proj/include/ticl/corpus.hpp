// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ticl {

struct WritingSample {
  std::string sample_id;
  std::string author_id;
  /// The writing prompt.
  std::string task;
  /// The author's response to `task`.
  std::string reference;
  /// Groups samples written to the same prompt by different authors.
  std::optional<std::string> prompt_key;

  friend bool operator==(const WritingSample&, const WritingSample&) = default;
};

enum class DatasetTag { kSamePromptStyle, kFreeTopicStyle };

std::string to_string(DatasetTag tag);
DatasetTag parse_dataset_tag(const std::string& text);

struct AuthorCorpus {
  std::string author_id;
  std::vector<WritingSample> samples;
  DatasetTag dataset_tag = DatasetTag::kFreeTopicStyle;
};

struct SplitCorpus {
  std::string author_id;
  std::vector<WritingSample> train;
  std::vector<WritingSample> val;
  std::vector<WritingSample> test;
  std::uint64_t split_seed = 0;
};

struct LoadOptions {
  /// Require exactly `samples_per_author` records per author.
  bool strict = true;
  std::size_t samples_per_author = 12;
  /// Applied to every loaded corpus; records may override via "dataset_tag".
  DatasetTag dataset_tag = DatasetTag::kFreeTopicStyle;
};

/// Reads a JSON-lines file, or every *.jsonl file in a directory (sorted by
/// name). Records are grouped by author_id in first-seen order. Throws
/// DataError with "<file>:<line>" context on the first malformed record.
std::vector<AuthorCorpus> load_corpora(const std::filesystem::path& path, const LoadOptions& options = {});

/// Parses JSON-lines text; `source` labels error messages.
std::vector<AuthorCorpus> parse_corpora(const std::string& text, const std::string& source,
                                        const LoadOptions& options = {});

/// Canonical JSON-lines encoding: one record per line, keys in fixed order.
std::string serialize_corpus(const AuthorCorpus& corpus);

struct SplitOptions {
  bool strict = true;
  std::size_t train = 7;
  std::size_t val = 2;
  std::size_t test = 3;
};

/// Seeded 7/2/3 partition (strict mode uses the first 12 samples). Lenient
/// mode takes floor(N * val / total) and floor(N * test / total) with a
/// minimum of one test sample; the remainder goes to train.
SplitCorpus split(const AuthorCorpus& corpus, std::uint64_t seed, const SplitOptions& options = {});

/// The pool sample with the highest TF-IDF cosine to any of `examples`.
/// Samples by `target_author` and ids listed in `exclude` ("author/sample")
/// are never returned. Ties go to the smallest (author_id, sample_id).
struct DistractorChoice {
  WritingSample sample;
  double similarity = 0.0;
};
DistractorChoice select_distractor_tfidf(const std::string& target_author, const std::vector<std::string>& examples,
                                         const std::vector<AuthorCorpus>& pool,
                                         const std::set<std::string>& exclude = {});

/// Convenience form: the target's examples are all of its reference texts.
DistractorChoice select_distractor_tfidf(const AuthorCorpus& target, const std::vector<AuthorCorpus>& pool);

/// Uniform choice among pool samples (other authors) sharing the target's
/// prompt_key. Throws DataError when none match.
WritingSample select_distractor_same_prompt(const WritingSample& target, const std::vector<AuthorCorpus>& pool,
                                            std::uint64_t rng_seed);

}  // namespace ticl
