// SPDX-License-Identifier: Apache-2.0
// Shared builders for corpora, scripts and scratch directories.
#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ticl/corpus.hpp"
#include "ticl/provider.hpp"

namespace ticl::testing {

inline AuthorCorpus make_author(const std::string& id, std::size_t n = 12, const std::string& voice = "plain") {
  AuthorCorpus c;
  c.author_id = id;
  for (std::size_t i = 0; i < n; ++i) {
    WritingSample s;
    s.author_id = id;
    s.sample_id = id + "-" + (i < 10 ? "0" : "") + std::to_string(i);
    s.task = "Write about topic " + std::to_string(i) + ".";
    s.reference = "Reference " + std::to_string(i) + " by " + id + " in a " + voice + " voice about topic " +
                  std::to_string(i) + ".";
    s.prompt_key = "p" + std::to_string(i);
    c.samples.push_back(s);
  }
  return c;
}

inline SplitCorpus make_split(const std::string& id, std::size_t train, std::size_t val, std::size_t test = 0) {
  auto c = make_author(id, train + val + test);
  SplitCorpus sc;
  sc.author_id = id;
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    if (i < train) sc.train.push_back(c.samples[i]);
    else if (i < train + val) sc.val.push_back(c.samples[i]);
    else sc.test.push_back(c.samples[i]);
  }
  return sc;
}

inline constexpr const char* kInconsistent =
    R"({"explanation": "Use shorter sentences.", "is_consistent": "no"})";
inline constexpr const char* kConsistent = R"({"explanation": "Matches well.", "is_consistent": "yes"})";

/// Judge, explanation and writing routes. `verdict` is the explanation JSON;
/// `judge_answer` is "A" or "B".
inline std::vector<ScriptEntry> loop_script(const std::string& verdict = kInconsistent,
                                            const std::string& judge_answer = "A") {
  return {
      reply(ScriptMatcher::substring("impartial evaluator"), R"({"answer": ")" + judge_answer + R"("})", std::nullopt),
      reply(ScriptMatcher::substring("You are an editor."), verdict, std::nullopt),
      reply(ScriptMatcher::any(), "```\ncandidate {{hash}}\n```", std::nullopt),
  };
}

inline int count_substr(const std::string& hay, const std::string& needle) {
  int n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size())) ++n;
  return n;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f << text;
}

/// A fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("ticl-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace ticl::testing
