// SPDX-License-Identifier: Apache-2.0
#include "ticl/lexstats.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numeric>

#include <boost/math/distributions/normal.hpp>

#include "ticl/errors.hpp"

namespace ticl::lexstats {

namespace {

// Decodes one UTF-8 code point starting at `i`, advancing `i`. Malformed
// bytes decode as U+FFFD and consume a single byte.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char c = byte(i);
  if (c < 0x80) {
    ++i;
    return c;
  }
  int len = 0;
  char32_t cp = 0;
  if ((c & 0xE0) == 0xC0) {
    len = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
    cp = c & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  if (i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    unsigned char cc = byte(i + k);
    if ((cc & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += len;
  return cp;
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  if (cp == 0xFFFD) return false;
  if (cp >= 0x80 && cp <= 0xBF) return false;     // Latin-1 controls, punctuation, symbols
  if (cp == 0xD7 || cp == 0xF7) return false;     // multiplication and division signs
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // general punctuation through misc symbols
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
  return true;
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp = decode_utf8(text, i);
    if (is_word_char(cp)) {
      append_utf8(current, to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> ngrams(const std::vector<std::string>& tokens, int min_n, int max_n) {
  std::vector<std::string> out;
  for (int n = min_n; n <= max_n; ++n) {
    if (n <= 0 || static_cast<std::size_t>(n) > tokens.size()) continue;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string gram = tokens[i];
      for (int k = 1; k < n; ++k) {
        gram += ' ';
        gram += tokens[i + k];
      }
      out.push_back(std::move(gram));
    }
  }
  return out;
}

namespace {

std::map<std::string, long> count_ngrams(std::span<const std::string> corpus, int min_n, int max_n) {
  std::map<std::string, long> counts;
  // n-grams never span document boundaries.
  for (const auto& doc : corpus) {
    for (auto& g : ngrams(tokenize(doc), min_n, max_n)) ++counts[g];
  }
  return counts;
}

}  // namespace

std::vector<NgramScore> fightin_words(std::span<const std::string> corpus_a,
                                      std::span<const std::string> corpus_b,
                                      const FightinConfig& config) {
  if (!(config.alpha > 0.0)) throw ConfigError("fightin_words: alpha must be positive");
  if (config.min_n < 1 || config.max_n < config.min_n || config.max_n > 3) {
    throw ConfigError("fightin_words: ngram range must satisfy 1 <= min <= max <= 3");
  }
  auto counts_a = count_ngrams(corpus_a, config.min_n, config.max_n);
  auto counts_b = count_ngrams(corpus_b, config.min_n, config.max_n);
  if (counts_a.empty() || counts_b.empty()) {
    throw DataError("fightin_words: both corpora must contain at least one token");
  }

  std::map<std::string, std::pair<long, long>> vocab;
  for (const auto& [g, c] : counts_a) vocab[g].first = c;
  for (const auto& [g, c] : counts_b) vocab[g].second = c;

  std::map<std::string, double> prior;
  const double uniform_total = config.alpha * static_cast<double>(vocab.size());
  if (!config.background.empty()) {
    auto bg = count_ngrams(config.background, config.min_n, config.max_n);
    long bg_total = 0;
    for (const auto& [g, c] : bg) bg_total += c;
    for (const auto& [g, _] : vocab) {
      auto it = bg.find(g);
      prior[g] = (it == bg.end() || bg_total == 0)
                     ? config.alpha
                     : uniform_total * static_cast<double>(it->second) / static_cast<double>(bg_total);
    }
  } else {
    for (const auto& [g, _] : vocab) prior[g] = config.alpha;
  }

  double a0 = 0.0;
  for (const auto& [_, a] : prior) a0 += a;
  double n_a = 0.0, n_b = 0.0;
  for (const auto& [_, c] : counts_a) n_a += static_cast<double>(c);
  for (const auto& [_, c] : counts_b) n_b += static_cast<double>(c);

  std::vector<NgramScore> scores;
  scores.reserve(vocab.size());
  for (const auto& [g, counts] : vocab) {
    const double a = prior[g];
    const double ya = static_cast<double>(counts.first);
    const double yb = static_cast<double>(counts.second);
    const double delta = std::log((ya + a) / (n_a + a0 - ya - a)) - std::log((yb + a) / (n_b + a0 - yb - a));
    const double variance = 1.0 / (ya + a) + 1.0 / (yb + a);
    NgramScore s;
    s.ngram = g;
    s.log_odds_delta = delta;
    s.z_score = delta / std::sqrt(variance);
    s.p_value = std::erfc(std::fabs(s.z_score) / std::sqrt(2.0));
    s.count_a = counts.first;
    s.count_b = counts.second;
    scores.push_back(std::move(s));
  }
  std::stable_sort(scores.begin(), scores.end(),
                   [](const NgramScore& x, const NgramScore& y) { return x.z_score > y.z_score; });
  return scores;
}

double critical_z(double p_level) {
  if (!(p_level > 0.0 && p_level < 1.0)) throw ConfigError("p_level must lie in (0, 1)");
  boost::math::normal_distribution<double> standard;
  return boost::math::quantile(boost::math::complement(standard, p_level / 2.0));
}

std::vector<NgramScore> significant(const std::vector<NgramScore>& scores, double p_level) {
  const double threshold = critical_z(p_level);
  std::vector<NgramScore> out;
  std::copy_if(scores.begin(), scores.end(), std::back_inserter(out),
               [&](const NgramScore& s) { return std::fabs(s.z_score) >= threshold; });
  return out;
}

int count_syllables(std::string_view word) {
  if (word.empty()) throw DataError("count_syllables: empty word");
  std::string letters;
  for (char c : word) {
    if (c >= 'A' && c <= 'Z') letters.push_back(static_cast<char>(c + 32));
    else if (c >= 'a' && c <= 'z') letters.push_back(c);
  }
  const auto is_vowel = [](char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
  };
  int groups = 0;
  bool in_group = false;
  std::size_t last_group_start = 0;
  for (std::size_t i = 0; i < letters.size(); ++i) {
    if (is_vowel(letters[i])) {
      if (!in_group) {
        ++groups;
        last_group_start = i;
      }
      in_group = true;
    } else {
      in_group = false;
    }
  }
  const bool lone_final_e = !letters.empty() && letters.back() == 'e' && last_group_start == letters.size() - 1;
  if (lone_final_e && groups > 1) --groups;
  return std::max(groups, 1);
}

ReadabilityCounts readability_counts(std::string_view text) {
  ReadabilityCounts counts;
  bool sentence_has_words = false;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      ++i;
      continue;
    }
    std::size_t start = i;
    while (i < text.size() && text[i] != ' ' && text[i] != '\t' && text[i] != '\n' && text[i] != '\r') ++i;
    std::string_view chunk = text.substr(start, i - start);
    // A chunk may carry several terminators ("Go.Sit."); split on them.
    std::size_t j = 0;
    while (j < chunk.size()) {
      std::size_t k = j;
      while (k < chunk.size() && chunk[k] != '.' && chunk[k] != '!' && chunk[k] != '?') ++k;
      std::string_view piece = chunk.substr(j, k - j);
      const bool has_alnum = std::any_of(piece.begin(), piece.end(), [](char ch) {
        unsigned char u = static_cast<unsigned char>(ch);
        return std::isalnum(u) || u >= 0x80;
      });
      if (has_alnum) {
        ++counts.words;
        counts.syllables += count_syllables(piece);
        sentence_has_words = true;
      }
      if (k < chunk.size()) {
        while (k < chunk.size() && (chunk[k] == '.' || chunk[k] == '!' || chunk[k] == '?')) ++k;
        if (sentence_has_words) ++counts.sentences;
        sentence_has_words = false;
      }
      j = k;
    }
  }
  if (sentence_has_words) ++counts.sentences;
  return counts;
}

double flesch_reading_ease(std::string_view text) {
  ReadabilityCounts c = readability_counts(text);
  if (c.words == 0) throw DataError("flesch_reading_ease: text contains no words");
  const double words = c.words;
  const double asl = words / static_cast<double>(c.sentences);
  return 206.835 - 1.015 * asl - 84.6 * (static_cast<double>(c.syllables) / words);
}

double cosine(const SparseVector& u, const SparseVector& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (const auto& [_, w] : u) nu += w * w;
  for (const auto& [_, w] : v) nv += w * w;
  if (nu == 0.0 || nv == 0.0) return 0.0;
  std::size_t i = 0, j = 0;
  while (i < u.size() && j < v.size()) {
    if (u[i].first == v[j].first) {
      dot += u[i].second * v[j].second;
      ++i;
      ++j;
    } else if (u[i].first < v[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

TfidfModel TfidfModel::fit(std::span<const std::string> docs) {
  TfidfModel model;
  std::map<std::string, int> df;
  for (const auto& doc : docs) {
    auto tokens = tokenize(doc);
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& t : tokens) ++df[t];
  }
  const double n = static_cast<double>(docs.size());
  int next = 0;
  for (const auto& [term, count] : df) {
    model.index_.emplace(term, next++);
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + count)) + 1.0);
  }
  return model;
}

SparseVector TfidfModel::transform(std::string_view doc) const {
  std::map<int, double> tf;
  for (const auto& t : tokenize(doc)) {
    auto it = index_.find(t);
    if (it != index_.end()) tf[it->second] += 1.0;
  }
  SparseVector v;
  double norm = 0.0;
  for (const auto& [idx, count] : tf) {
    double w = count * idf_[idx];
    v.emplace_back(idx, w);
    norm += w * w;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& [_, w] : v) w /= norm;
  }
  return v;
}

std::vector<SparseVector> TfidfModel::transform(std::span<const std::string> docs) const {
  std::vector<SparseVector> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(transform(d));
  return out;
}

double TfidfModel::idf(const std::string& term) const {
  auto it = index_.find(term);
  return it == index_.end() ? 0.0 : idf_[it->second];
}

std::vector<SparseVector> tfidf(std::span<const std::string> docs) {
  return TfidfModel::fit(docs).transform(docs);
}

std::vector<std::vector<double>> cosine_matrix(std::span<const std::string> docs) {
  auto vectors = tfidf(docs);
  std::vector<std::vector<double>> m(docs.size(), std::vector<double>(docs.size(), 0.0));
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t j = 0; j < docs.size(); ++j) m[i][j] = cosine(vectors[i], vectors[j]);
  }
  return m;
}

}  // namespace ticl::lexstats
