// SPDX-License-Identifier: Apache-2.0
//
// Generated outputs as JSON-lines records, shared by every method and by
// the judge's candidate-file input.
#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ticl/judge.hpp"
#include "ticl/provider.hpp"

namespace ticl {

/// One generation, or the error that replaced it.
struct Generation {
  std::string text;
  std::string error;

  bool ok() const { return error.empty(); }
  friend bool operator==(const Generation&, const Generation&) = default;
};

using OutputParser = std::function<std::string(std::string_view)>;

/// Parses each batch item (parse_fenced_output by default). Throws the error
/// of the last failure when no item succeeded.
std::vector<Generation> collect_generations(std::span<const BatchItem> items, const OutputParser& parse = {});

struct OutputRecord {
  std::string author_id;
  std::string task_id;
  std::string method;
  std::size_t generation_index = 0;
  std::string text;
  std::string error;

  friend bool operator==(const OutputRecord&, const OutputRecord&) = default;
};

std::string to_jsonl(std::span<const OutputRecord> records);
std::vector<OutputRecord> parse_outputs(const std::string& text, const std::string& source);
void write_outputs(const std::filesystem::path& path, std::span<const OutputRecord> records);
std::vector<OutputRecord> read_outputs(const std::filesystem::path& path);

/// author_id -> task_id -> successful texts in generation order.
std::map<std::string, judge::TaskOutputs> group_outputs(std::span<const OutputRecord> records,
                                                        const std::string& method = {});

}  // namespace ticl
