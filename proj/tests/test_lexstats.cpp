// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

#include "support/oracles.hpp"
#include "ticl/errors.hpp"
#include "ticl/lexstats.hpp"

using namespace ticl;
using namespace ticl::lexstats;
using ticl::testing::monroe_oracle;

TEST(Tokenize, LowercasesAndSplitsPunctuation) {
  EXPECT_EQ(tokenize("Hello, World! It's"), (std::vector<std::string>{"hello", "world", "it", "s"}));
  EXPECT_EQ(tokenize("Caf\u00e9\u2014na\u00efve"), (std::vector<std::string>{"caf\u00e9", "na\u00efve"}));
  EXPECT_TRUE(tokenize("... !!").empty());
}

TEST(Ngrams, SpaceJoinedOrders) {
  std::vector<std::string> t{"a", "b", "c"};
  EXPECT_EQ(ngrams(t, 1, 2), (std::vector<std::string>{"a", "b", "c", "a b", "b c"}));
  EXPECT_EQ(ngrams(t, 3, 3), (std::vector<std::string>{"a b c"}));
}

TEST(FightinWords, UnigramToyMatchesOracle) {
  std::vector<std::string> a{"a a b"}, b{"a b b"};
  FightinConfig cfg;
  cfg.min_n = cfg.max_n = 1;
  auto scores = fightin_words(a, b, cfg);
  auto oracle = monroe_oracle(a, b, 0.01, 1, 1);
  ASSERT_EQ(scores.size(), 2u);
  for (const auto& s : scores) {
    EXPECT_NEAR(s.log_odds_delta, oracle.at(s.ngram).delta.convert_to<double>(), 1e-9) << s.ngram;
    EXPECT_NEAR(s.z_score, oracle.at(s.ngram).z.convert_to<double>(), 1e-9) << s.ngram;
  }
  EXPECT_EQ(scores.front().ngram, "a");
  EXPECT_GT(scores.front().z_score, 0);
}

TEST(FightinWords, PooledBigramVocabularyMatchesOracle) {
  std::vector<std::string> a{"a a b"}, b{"a b b"};
  auto scores = fightin_words(a, b);
  auto oracle = monroe_oracle(a, b, 0.01, 1, 2);
  ASSERT_EQ(scores.size(), oracle.size());
  for (const auto& s : scores) {
    EXPECT_NEAR(s.log_odds_delta, oracle.at(s.ngram).delta.convert_to<double>(), 1e-9) << s.ngram;
    EXPECT_NEAR(s.z_score, oracle.at(s.ngram).z.convert_to<double>(), 1e-9) << s.ngram;
  }
}

TEST(FightinWords, NgramsDoNotCrossDocuments) {
  std::vector<std::string> a{"x", "y"}, b{"x y"};
  auto scores = fightin_words(a, b);
  for (const auto& s : scores) {
    if (s.ngram == "x y") {
      EXPECT_EQ(s.count_a, 0);
      EXPECT_EQ(s.count_b, 1);
    }
  }
}

TEST(FightinWords, AntisymmetryProperty) {
  std::mt19937 gen(1234);
  const std::vector<std::string> words{"the", "a", "cat", "dog", "ran", "sat", "on", "mat", "log", "quick"};
  for (int trial = 0; trial < 100; ++trial) {
    auto doc = [&] {
      std::uniform_int_distribution<int> len(1, 12), pick(0, static_cast<int>(words.size()) - 1);
      std::string d;
      for (int i = 0, n = len(gen); i < n; ++i) d += (i ? " " : "") + words[static_cast<std::size_t>(pick(gen))];
      return d;
    };
    std::vector<std::string> a{doc(), doc()}, b{doc()};
    auto ab = fightin_words(a, b);
    auto ba = fightin_words(b, a);
    std::map<std::string, double> zab, dab;
    for (const auto& s : ab) {
      zab[s.ngram] = s.z_score;
      dab[s.ngram] = s.log_odds_delta;
    }
    ASSERT_EQ(ab.size(), ba.size());
    for (const auto& s : ba) {
      EXPECT_NEAR(s.z_score, -zab.at(s.ngram), 1e-12);
      EXPECT_NEAR(s.log_odds_delta, -dab.at(s.ngram), 1e-12);
    }
  }
}

TEST(FightinWords, SignificanceAndErrors) {
  EXPECT_NEAR(critical_z(0.05), 1.959963984540054, 1e-12);
  std::vector<std::string> a(50, "x x x y"), b(50, "x y y y");
  auto scores = fightin_words(a, b);
  auto sig = significant(scores, 0.05);
  ASSERT_FALSE(sig.empty());
  for (const auto& s : sig) EXPECT_GE(std::fabs(s.z_score), critical_z(0.05));
  for (const auto& s : scores) EXPECT_NEAR(s.p_value, std::erfc(std::fabs(s.z_score) / std::sqrt(2.0)), 1e-12);
  std::vector<std::string> empty{"..."};
  EXPECT_THROW(fightin_words(empty, b), DataError);
  FightinConfig bad;
  bad.alpha = 0;
  EXPECT_THROW(fightin_words(a, b, bad), ConfigError);
}

TEST(Syllables, VowelGroupHeuristic) {
  EXPECT_EQ(count_syllables("go"), 1);
  EXPECT_EQ(count_syllables("cake"), 1);
  EXPECT_EQ(count_syllables("the"), 1);
  EXPECT_EQ(count_syllables("rhythm"), 1);
  EXPECT_EQ(count_syllables("beautiful"), 3);
  EXPECT_EQ(count_syllables("Running"), 2);
  EXPECT_EQ(count_syllables("x"), 1);
  EXPECT_THROW(count_syllables(""), DataError);
}

TEST(Readability, FleschFixtures) {
  // Three one-syllable words, three sentences.
  EXPECT_NEAR(flesch_reading_ease("Go. Sit. Run."), 206.835 - 1.015 * 1.0 - 84.6 * 1.0, 1e-9);
  EXPECT_NEAR(flesch_reading_ease("Go. Sit. Run."), 121.22, 1e-9);
  // Six one-syllable words, two sentences.
  EXPECT_NEAR(flesch_reading_ease("The cat sat. The dog ran."), 206.835 - 1.015 * 3.0 - 84.6, 1e-9);
  EXPECT_NEAR(flesch_reading_ease("The cat sat. The dog ran."), 119.19, 1e-9);
  auto c = readability_counts("No terminator here");
  EXPECT_EQ(c.words, 3);
  EXPECT_EQ(c.sentences, 1);
  EXPECT_THROW(flesch_reading_ease("!!!"), DataError);
}

TEST(Readability, MonosyllabicTextIsTheCeilingForOneWordSentences) {
  EXPECT_GE(flesch_reading_ease("Go. Sit. Run."), flesch_reading_ease("Beautiful. Wonderful. Unbelievable."));
}

TEST(Tfidf, ThreeDocumentMatrixMatchesHandComputation) {
  std::vector<std::string> docs{"a b", "a c", "a b b"};
  const double ia = 1.0;
  const double ib = std::log(4.0 / 3.0) + 1.0;
  const double ic = std::log(4.0 / 2.0) + 1.0;
  const double n1 = std::sqrt(ia * ia + ib * ib);
  const double n2 = std::sqrt(ia * ia + ic * ic);
  const double n3 = std::sqrt(ia * ia + 4 * ib * ib);
  const double expected[3][3] = {
      {1.0, ia * ia / (n1 * n2), (ia * ia + 2 * ib * ib) / (n1 * n3)},
      {ia * ia / (n1 * n2), 1.0, ia * ia / (n2 * n3)},
      {(ia * ia + 2 * ib * ib) / (n1 * n3), ia * ia / (n2 * n3), 1.0},
  };
  auto m = cosine_matrix(docs);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(m[i][j], expected[i][j], 1e-9) << i << "," << j;
  }
  auto model = TfidfModel::fit(docs);
  EXPECT_NEAR(model.idf("b"), ib, 1e-12);
  EXPECT_EQ(model.idf("zzz"), 0.0);
}

TEST(Tfidf, CosineEdgeCases) {
  SparseVector zero;
  SparseVector v{{0, 1.0}};
  EXPECT_EQ(cosine(zero, v), 0.0);
  std::vector<double> u{1, 0}, w{0, 1};
  EXPECT_EQ(cosine(std::span<const double>(u), std::span<const double>(w)), 0.0);
}
