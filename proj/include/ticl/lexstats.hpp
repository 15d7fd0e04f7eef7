// SPDX-License-Identifier: Apache-2.0
//
// Closed-form text statistics: tokenization, Fightin' Words log-odds
// z-scores, Flesch Reading Ease and TF-IDF cosine similarity.
#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ticl::lexstats {

/// Lowercased word tokens. A token is a maximal run of word characters:
/// ASCII letters and digits plus any non-ASCII code point outside the
/// Unicode punctuation/symbol blocks. Everything else separates tokens, so
/// "e-mail Tom's" yields {"e", "mail", "tom", "s"}.
std::vector<std::string> tokenize(std::string_view text);

/// Space-joined n-grams of `tokens` for every order in [min_n, max_n].
std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int min_n, int max_n);

struct NgramScore {
  std::string ngram;
  double z_score = 0.0;
  double log_odds_delta = 0.0;
  /// Two-sided p-value of z under the standard normal.
  double p_value = 1.0;
  long count_a = 0;
  long count_b = 0;
};

struct FightinConfig {
  /// Uniform Dirichlet pseudo-count per vocabulary entry.
  double alpha = 0.01;
  int min_n = 1;
  int max_n = 2;
  double p_level = 0.05;
  /// Optional informative prior: per-ngram pseudo-counts taken from a
  /// background corpus, scaled so they sum to alpha * |V|. Types absent
  /// from the background fall back to alpha.
  std::vector<std::string> background;
};

/// Monroe et al. log-odds ratio with a Dirichlet prior. Returns one score per
/// n-gram in the union vocabulary, sorted by z descending (ties by n-gram).
/// Throws DataError when either corpus has no tokens.
std::vector<NgramScore> fightin_words(std::span<const std::string> corpus_a,
                                      std::span<const std::string> corpus_b,
                                      const FightinConfig& config = {});

/// Two-sided critical |z| for a p-level (1.95996... at 0.05).
double critical_z(double p_level);

/// Scores whose |z| meets the critical value for `p_level`.
std::vector<NgramScore> significant(const std::vector<NgramScore>& scores, double p_level);

/// Vowel-group heuristic, version 1: count maximal runs of [aeiouy] over the
/// lowercased ASCII letters of `word`; a final lone "e" after a consonant is
/// silent unless it is the only group; result floored at 1.
/// Throws DataError on an empty word.
int count_syllables(std::string_view word);

struct ReadabilityCounts {
  int words = 0;
  int sentences = 0;
  int syllables = 0;
};

ReadabilityCounts readability_counts(std::string_view text);

/// 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words).
/// Sentences end at runs of '.', '!' or '?'; text with no terminator is one
/// sentence. Throws DataError when the text has no words.
double flesch_reading_ease(std::string_view text);

/// Sparse vector: (term index, weight) sorted by index.
using SparseVector = std::vector<std::pair<int, double>>;

double cosine(const SparseVector& u, const SparseVector& v);
double cosine(std::span<const double> u, std::span<const double> v);

/// tf = raw count, idf = ln((1 + N) / (1 + df)) + 1, rows L2-normalized.
class TfidfModel {
 public:
  static TfidfModel fit(std::span<const std::string> docs);

  SparseVector transform(std::string_view doc) const;
  std::vector<SparseVector> transform(std::span<const std::string> docs) const;

  std::size_t vocabulary_size() const { return idf_.size(); }
  /// idf for a term; terms outside the fitted vocabulary return 0.
  double idf(const std::string& term) const;

 private:
  std::unordered_map<std::string, int> index_;
  std::vector<double> idf_;
};

/// Fit on `docs` and return their L2-normalized vectors.
std::vector<SparseVector> tfidf(std::span<const std::string> docs);

/// Pairwise cosine matrix of tfidf(docs).
std::vector<std::vector<double>> cosine_matrix(std::span<const std::string> docs);

}  // namespace ticl::lexstats
