// SPDX-License-Identifier: Apache-2.0
#include "ticl/baselines.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "ticl/errors.hpp"
#include "ticl/rng.hpp"

namespace ticl::baselines {

std::string to_string(Kind kind) {
  switch (kind) {
    case Kind::kZeroShot: return "zero_shot";
    case Kind::kFewShot: return "few_shot";
    case Kind::kCot: return "cot";
    case Kind::kOpro: return "opro";
  }
  return "unknown";
}

Kind parse_kind(const std::string& text) {
  if (text == "zero_shot" || text == "zero-shot") return Kind::kZeroShot;
  if (text == "few_shot" || text == "few-shot") return Kind::kFewShot;
  if (text == "cot") return Kind::kCot;
  if (text == "opro") return Kind::kOpro;
  throw ConfigError("unknown baseline '" + text + "'");
}

void BaselineSpec::validate() const {
  if (generations_per_task < 1) throw ConfigError("generations_per_task must be at least 1");
  if (decoding.max_tokens < 1) throw ConfigError("max_tokens must be at least 1");
  if (decoding.temperature < 0) throw ConfigError("temperature must be non-negative");
}

namespace {

const prompts::TemplateSet& templates_of(const BaselineSpec& spec) {
  return spec.templates ? *spec.templates : prompts::TemplateSet::defaults();
}

GenerationRequest request_for(const BaselineSpec& spec, std::string prompt, const char* tag, Rng& rng) {
  GenerationRequest req = spec.decoding;
  req.prompt = std::move(prompt);
  req.tag = tag;
  req.seed = static_cast<std::int64_t>(rng.next() >> 1);
  return req;
}

std::vector<Generation> repeat_prompt(const std::string& prompt, const std::string& task, Provider& provider,
                                      const BaselineSpec& spec, const char* tag,
                                      const OutputParser& parse = {}) {
  spec.validate();
  Rng rng(fnv1a64(task, spec.seed));
  std::vector<GenerationRequest> requests;
  for (std::size_t k = 0; k < spec.generations_per_task; ++k) requests.push_back(request_for(spec, prompt, tag, rng));
  auto items = provider.generate_batch(requests);
  return collect_generations(items, parse);
}

}  // namespace

std::vector<Generation> run_zero_shot(const std::string& task, Provider& provider, const BaselineSpec& spec) {
  return repeat_prompt(prompts::render_zero_shot(task, templates_of(spec)), task, provider, spec, "zero_shot");
}

std::vector<Generation> run_few_shot(const std::string& task, std::span<const WritingSample> train,
                                     Provider& provider, const BaselineSpec& spec) {
  return repeat_prompt(prompts::render_fewshot(task, train, templates_of(spec)), task, provider, spec, "few_shot");
}

std::vector<Generation> run_cot(const std::string& task, std::span<const WritingSample> train, Provider& provider,
                                const BaselineSpec& spec) {
  spec.validate();
  const auto& templates = templates_of(spec);
  Rng rng(fnv1a64(task, spec.seed));
  const std::string stage1 = prompts::render_cot_style_guide(task, train, templates);
  std::vector<GenerationRequest> guide_requests;
  for (std::size_t k = 0; k < spec.generations_per_task; ++k) {
    guide_requests.push_back(request_for(spec, stage1, "cot_style_guide", rng));
  }
  auto guides = provider.generate_batch(guide_requests);

  std::vector<Generation> out(spec.generations_per_task);
  std::vector<GenerationRequest> writing_requests;
  std::vector<std::size_t> writing_index;
  for (std::size_t k = 0; k < guides.size(); ++k) {
    std::string guide;
    for (int attempt = 0; attempt < 2 && guide.empty(); ++attempt) {
      try {
        if (attempt == 1) {
          auto retry = provider.generate(guide_requests[k]);
          guide = prompts::parse_fenced_output(retry.text);
        } else if (guides[k].ok()) {
          guide = prompts::parse_fenced_output(guides[k].result->text);
        } else {
          out[k].error = guides[k].error;
          break;
        }
      } catch (const ParseError& e) {
        out[k].error = std::string("style guide: ") + e.what();
      } catch (const TransportError& e) {
        out[k].error = e.what();
      }
    }
    if (guide.empty()) continue;
    out[k].error.clear();
    writing_requests.push_back(
        request_for(spec, prompts::render_cot_writing(task, train, guide, templates), "cot_writing", rng));
    writing_index.push_back(k);
  }

  if (!writing_requests.empty()) {
    auto items = provider.generate_batch(writing_requests);
    for (std::size_t i = 0; i < items.size(); ++i) {
      Generation& g = out[writing_index[i]];
      if (!items[i].ok()) {
        g.error = items[i].error;
        continue;
      }
      try {
        g.text = prompts::parse_fenced_output(items[i].result->text);
      } catch (const ParseError& e) {
        g.error = e.what();
      }
    }
  }
  if (std::none_of(out.begin(), out.end(), [](const Generation& g) { return g.ok(); })) {
    throw ParseError("cot: every generation failed; last: " + out.back().error);
  }
  return out;
}

void OproConfig::validate() const {
  if (iterations < 1) throw ConfigError("opro iterations must be at least 1");
  if (candidates_per_iteration < 1) throw ConfigError("opro candidates_per_iteration must be at least 1");
  if (scoring_generations_per_task < 1) throw ConfigError("opro scoring generations must be at least 1");
  if (seed_instruction.empty()) throw ConfigError("opro seed instruction is empty");
  spec.validate();
}

namespace {

struct Scored {
  bool ok = false;
  double score = 0.0;
  long generations = 0;
};

Scored score_instruction(const std::string& instruction, const std::vector<WritingSample>& val, Provider& provider,
                         EmbeddingScorer& scorer, const OproConfig& config, Rng& rng) {
  const auto& templates = config.spec.templates ? *config.spec.templates : prompts::TemplateSet::defaults();
  std::vector<GenerationRequest> requests;
  for (const auto& sample : val) {
    for (std::size_t k = 0; k < config.scoring_generations_per_task; ++k) {
      requests.push_back(
          request_for(config.spec, prompts::render_opro_writing(sample.task, instruction, templates), "opro_score", rng));
    }
  }
  auto items = provider.generate_batch(requests);
  Scored out;
  out.generations = static_cast<long>(requests.size());
  double sum = 0.0;
  long n = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!items[i].ok()) continue;
    try {
      const auto text = prompts::parse_opro_response(items[i].result->text);
      const auto& ref = val[i / config.scoring_generations_per_task].reference;
      sum += style_score(text, std::span<const std::string>(&ref, 1), scorer);
      ++n;
    } catch (const ParseError&) {
    }
  }
  if (n == 0) return out;
  out.ok = true;
  out.score = sum / static_cast<double>(n);
  return out;
}

}  // namespace

OproResult run_opro(const SplitCorpus& split, Provider& provider, EmbeddingScorer* scorer, const OproConfig& config) {
  config.validate();
  if (!scorer) throw ConfigError("opro needs an embedding scorer");
  if (split.val.empty()) throw DataError("opro: author '" + split.author_id + "' has an empty validation split");
  if (split.train.empty()) throw DataError("opro: author '" + split.author_id + "' has no train examples");
  const auto& templates = config.spec.templates ? *config.spec.templates : prompts::TemplateSet::defaults();
  Rng rng(fnv1a64(split.author_id, config.spec.seed));

  OproResult result;
  OproState& st = result.state;
  st.candidates_per_iteration = config.candidates_per_iteration;

  auto seed = score_instruction(config.seed_instruction, split.val, provider, *scorer, config, rng);
  st.seed_scoring_generations = seed.generations;
  st.history.push_back({config.seed_instruction, seed.ok ? seed.score : 0.0});

  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::vector<WritingSample> exemplars;
    const std::size_t k = std::min(config.exemplars, split.train.size());
    for (std::size_t idx : rng.sample(split.train.size(), k)) exemplars.push_back(split.train[idx]);
    const std::string meta = prompts::render_opro_meta(st.history, exemplars, templates);
    std::vector<GenerationRequest> proposals;
    for (std::size_t c = 0; c < config.candidates_per_iteration; ++c) {
      auto req = request_for(config.spec, meta, "opro_meta", rng);
      req.temperature = config.meta_temperature;
      proposals.push_back(std::move(req));
    }
    auto items = provider.generate_batch(proposals);
    std::vector<prompts::ScoredInstruction> fresh;
    for (const auto& item : items) {
      std::string instruction;
      try {
        if (!item.ok()) throw ParseError(item.error);
        instruction = prompts::parse_fenced_output(item.result->text);
      } catch (const ParseError& e) {
        spdlog::warn("opro: skipping candidate ({})", e.what());
        ++st.skipped_candidates;
        continue;
      }
      auto scored = score_instruction(instruction, split.val, provider, *scorer, config, rng);
      st.candidate_scoring_generations += scored.generations;
      if (!scored.ok) {
        spdlog::warn("opro: no scorable output for a candidate instruction; skipped");
        ++st.skipped_candidates;
        continue;
      }
      fresh.push_back({instruction, scored.score});
    }
    st.history.insert(st.history.end(), fresh.begin(), fresh.end());
    ++st.iterations;
  }

  const auto* best = &st.history.front();
  for (const auto& h : st.history) {
    if (h.score > best->score) best = &h;
  }
  st.best_instruction = best->instruction;
  st.best_score = best->score;

  for (const auto& sample : split.test) {
    result.outputs[sample.sample_id] =
        repeat_prompt(prompts::render_opro_writing(sample.task, st.best_instruction, templates), sample.task,
                      provider, config.spec, "opro_generate",
                      [](std::string_view raw) { return prompts::parse_opro_response(raw); });
  }
  return result;
}

}  // namespace ticl::baselines
