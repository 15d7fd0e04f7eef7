// SPDX-License-Identifier: Apache-2.0
#include "ticl/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "ticl/errors.hpp"
#include "ticl/lexstats.hpp"
#include "ticl/rng.hpp"

namespace ticl {

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string required_string(const nlohmann::json& record, const char* field, const std::string& where,
                            const std::string& sample_id) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) {
    throw DataError(where + ": sample '" + sample_id + "' is missing field '" + field + "'");
  }
  if (!it->is_string()) {
    throw DataError(where + ": sample '" + sample_id + "' field '" + field + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

std::string to_string(DatasetTag tag) {
  return tag == DatasetTag::kSamePromptStyle ? "same-prompt-style" : "free-topic-style";
}

DatasetTag parse_dataset_tag(const std::string& text) {
  if (text == "same-prompt-style") return DatasetTag::kSamePromptStyle;
  if (text == "free-topic-style") return DatasetTag::kFreeTopicStyle;
  throw ConfigError("unknown dataset_tag '" + text + "'");
}

std::vector<AuthorCorpus> parse_corpora(const std::string& text, const std::string& source,
                                        const LoadOptions& options) {
  std::vector<AuthorCorpus> corpora;
  std::map<std::string, std::size_t> by_author;
  std::map<std::string, std::string> owner_of_sample;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    const std::string where = source + ":" + std::to_string(line_no);

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    if (!record.is_object()) throw DataError(where + ": record must be a JSON object");

    std::string sample_id = record.contains("sample_id") && record["sample_id"].is_string()
                                ? record["sample_id"].get<std::string>()
                                : std::string("<unknown>");
    WritingSample s;
    s.sample_id = required_string(record, "sample_id", where, sample_id);
    s.author_id = required_string(record, "author_id", where, sample_id);
    s.task = required_string(record, "task", where, sample_id);
    s.reference = required_string(record, "reference", where, sample_id);
    for (const char* field : {"sample_id", "author_id", "task", "reference"}) {
      if (blank(record[field].get<std::string>())) {
        throw DataError(where + ": sample '" + sample_id + "' has empty field '" + field + "'");
      }
    }
    if (auto it = record.find("prompt_key"); it != record.end() && !it->is_null()) {
      if (!it->is_string()) throw DataError(where + ": prompt_key must be a string");
      s.prompt_key = it->get<std::string>();
    }

    const std::string key = s.author_id + "/" + s.sample_id;
    if (owner_of_sample.count(key)) {
      throw DataError(where + ": duplicate sample_id '" + s.sample_id + "' for author '" + s.author_id + "'");
    }
    owner_of_sample[key] = where;

    auto [it, inserted] = by_author.try_emplace(s.author_id, corpora.size());
    if (inserted) {
      AuthorCorpus c;
      c.author_id = s.author_id;
      c.dataset_tag = options.dataset_tag;
      corpora.push_back(std::move(c));
    }
    if (auto tag = record.find("dataset_tag"); tag != record.end() && tag->is_string()) {
      corpora[it->second].dataset_tag = parse_dataset_tag(tag->get<std::string>());
    }
    corpora[it->second].samples.push_back(std::move(s));
  }

  if (options.strict) {
    for (const auto& c : corpora) {
      if (c.samples.size() != options.samples_per_author) {
        throw DataError(source + ": author '" + c.author_id + "' has " + std::to_string(c.samples.size()) +
                        " samples; strict mode requires " + std::to_string(options.samples_per_author));
      }
    }
  }
  return corpora;
}

std::vector<AuthorCorpus> load_corpora(const std::filesystem::path& path, const LoadOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::exists(path)) throw DataError("corpus path does not exist: " + path.string());

  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .jsonl files in " + path.string());
  } else {
    files.push_back(path);
  }

  // Concatenate so an author split across files is still one corpus, but keep
  // per-file line numbers in error messages by parsing leniently per file first.
  std::vector<AuthorCorpus> merged;
  std::map<std::string, std::size_t> index;
  LoadOptions per_file = options;
  per_file.strict = false;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot read " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    for (auto& c : parse_corpora(buf.str(), file.string(), per_file)) {
      auto [it, inserted] = index.try_emplace(c.author_id, merged.size());
      if (inserted) {
        merged.push_back(std::move(c));
        continue;
      }
      auto& target = merged[it->second];
      for (auto& s : c.samples) {
        bool dup = std::any_of(target.samples.begin(), target.samples.end(),
                               [&](const WritingSample& t) { return t.sample_id == s.sample_id; });
        if (dup) {
          throw DataError(file.string() + ": duplicate sample_id '" + s.sample_id + "' for author '" + c.author_id +
                          "'");
        }
        target.samples.push_back(std::move(s));
      }
    }
  }
  if (options.strict) {
    for (const auto& c : merged) {
      if (c.samples.size() != options.samples_per_author) {
        throw DataError(path.string() + ": author '" + c.author_id + "' has " + std::to_string(c.samples.size()) +
                        " samples; strict mode requires " + std::to_string(options.samples_per_author));
      }
    }
  }
  return merged;
}

std::string serialize_corpus(const AuthorCorpus& corpus) {
  std::string out;
  for (const auto& s : corpus.samples) {
    nlohmann::ordered_json j;
    j["author_id"] = s.author_id;
    j["sample_id"] = s.sample_id;
    j["task"] = s.task;
    j["reference"] = s.reference;
    if (s.prompt_key) j["prompt_key"] = *s.prompt_key;
    out += j.dump();
    out += '\n';
  }
  return out;
}

SplitCorpus split(const AuthorCorpus& corpus, std::uint64_t seed, const SplitOptions& options) {
  const std::size_t total = options.train + options.val + options.test;
  std::size_t n = corpus.samples.size();
  std::size_t n_val = 0, n_test = 0;
  if (options.strict) {
    if (n < total) {
      throw DataError("author '" + corpus.author_id + "' has " + std::to_string(n) + " samples; split needs " +
                      std::to_string(total));
    }
    n = total;
    n_val = options.val;
    n_test = options.test;
  } else {
    if (n < 3) throw DataError("author '" + corpus.author_id + "' has too few samples for a non-empty test set");
    n_val = n * options.val / total;
    n_test = std::max<std::size_t>(1, n * options.test / total);
  }
  const std::size_t n_train = n - n_val - n_test;

  Rng rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order);

  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::size_t> idx(order.begin() + from, order.begin() + from + count);
    std::sort(idx.begin(), idx.end());
    std::vector<WritingSample> out;
    for (auto i : idx) out.push_back(corpus.samples[i]);
    return out;
  };
  SplitCorpus s;
  s.author_id = corpus.author_id;
  s.split_seed = seed;
  s.train = take(0, n_train);
  s.val = take(n_train, n_val);
  s.test = take(n_train + n_val, n_test);
  return s;
}

DistractorChoice select_distractor_tfidf(const std::string& target_author, const std::vector<std::string>& examples,
                                         const std::vector<AuthorCorpus>& pool, const std::set<std::string>& exclude) {
  std::vector<const WritingSample*> candidates;
  for (const auto& c : pool) {
    for (const auto& s : c.samples) {
      if (s.author_id == target_author || c.author_id == target_author) continue;
      if (exclude.count(s.author_id + "/" + s.sample_id)) continue;
      candidates.push_back(&s);
    }
  }
  if (candidates.empty()) throw DataError("select_distractor_tfidf: empty distractor pool");
  if (examples.empty()) throw DataError("select_distractor_tfidf: no target examples");
  std::sort(candidates.begin(), candidates.end(), [](const WritingSample* a, const WritingSample* b) {
    return std::tie(a->author_id, a->sample_id) < std::tie(b->author_id, b->sample_id);
  });

  std::vector<std::string> docs = examples;
  for (const auto* s : candidates) docs.push_back(s->reference);
  auto vectors = lexstats::tfidf(docs);

  DistractorChoice best{*candidates.front(), -1.0};
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    double sim = 0.0;
    for (std::size_t e = 0; e < examples.size(); ++e) {
      sim = std::max(sim, lexstats::cosine(vectors[e], vectors[examples.size() + k]));
    }
    // Candidates are visited in id order, so strict '>' keeps the smallest id on ties.
    if (sim > best.similarity) best = {*candidates[k], sim};
  }
  return best;
}

DistractorChoice select_distractor_tfidf(const AuthorCorpus& target, const std::vector<AuthorCorpus>& pool) {
  std::vector<std::string> examples;
  for (const auto& s : target.samples) examples.push_back(s.reference);
  return select_distractor_tfidf(target.author_id, examples, pool);
}

WritingSample select_distractor_same_prompt(const WritingSample& target, const std::vector<AuthorCorpus>& pool,
                                            std::uint64_t rng_seed) {
  if (!target.prompt_key) {
    throw DataError("sample '" + target.sample_id + "' has no prompt_key; use the tfidf distractor strategy");
  }
  std::vector<const WritingSample*> matches;
  for (const auto& c : pool) {
    for (const auto& s : c.samples) {
      if (s.author_id == target.author_id) continue;
      if (s.prompt_key && *s.prompt_key == *target.prompt_key) matches.push_back(&s);
    }
  }
  if (matches.empty()) {
    throw DataError("no pool sample shares prompt_key '" + *target.prompt_key +
                    "'; use the tfidf distractor strategy");
  }
  std::sort(matches.begin(), matches.end(), [](const WritingSample* a, const WritingSample* b) {
    return std::tie(a->author_id, a->sample_id) < std::tie(b->author_id, b->sample_id);
  });
  Rng rng(rng_seed);
  return *matches[rng.uniform_index(matches.size())];
}

}  // namespace ticl
