// SPDX-License-Identifier: Apache-2.0
#include "ticl/engine.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include <spdlog/spdlog.h>

#include "ticl/errors.hpp"
#include "ticl/judge.hpp"

namespace ticl::engine {

void TiclConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (checkpoint_interval && *checkpoint_interval < 1) throw ConfigError("checkpoint_interval must be at least 1");
  if (icl_sample_size && *icl_sample_size < 1) throw ConfigError("icl_sample_size must be at least 1");
  if (max_attempts_per_example < 1) throw ConfigError("max_attempts_per_example must be at least 1");
  if (eval_examples_per_judge < 1) throw ConfigError("eval_examples_per_judge must be at least 1");
  if (eval_generations < 1) throw ConfigError("eval_generations must be at least 1");
  if (step_retries < 0) throw ConfigError("step_retries must be non-negative");
}

std::vector<std::string> preset_names() {
  return {"full", "no-initial-icl", "no-explanations", "no-checkpointing", "few-shot-only"};
}

TiclConfig apply_preset(TiclConfig base, const std::string& preset) {
  std::string key = preset;
  std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
  base.initial_icl = true;
  base.include_explanations = true;
  base.checkpointing = true;
  base.negatives_enabled = true;
  if (key == "full") {
  } else if (key == "no-initial-icl") {
    base.initial_icl = false;
  } else if (key == "no-explanations") {
    base.include_explanations = false;
  } else if (key == "no-checkpointing") {
    base.checkpointing = false;
  } else if (key == "few-shot-only") {
    base.negatives_enabled = false;
  } else {
    throw ConfigError("unknown preset '" + preset + "'");
  }
  base.preset = key;
  return base;
}

TiclState init_state(const SplitCorpus& split, const TiclConfig& config) {
  config.validate();
  if (split.train.size() < 2) {
    throw DataError("author '" + split.author_id + "' has " + std::to_string(split.train.size()) +
                    " train samples; at least 2 are needed so one can be held out");
  }
  TiclState state;
  state.author_id = split.author_id;
  state.config_hash = config_hash(config);
  for (const auto& s : split.train) state.dataset.push_back({s, {}});
  state.rng = Rng(config.rng_seed);
  state.order.resize(state.dataset.size());
  for (std::size_t i = 0; i < state.order.size(); ++i) state.order[i] = i;
  state.rng.shuffle(state.order);
  state.best_dataset = state.dataset;
  return state;
}

namespace {

bool has_attempts(const std::vector<AugmentedExample>& examples) {
  return std::any_of(examples.begin(), examples.end(), [](const AugmentedExample& e) { return !e.attempts.empty(); });
}

void add_usage(TokenUsage* total, const GenerationResult& r) {
  if (!total) return;
  total->prompt_tokens += r.usage.prompt_tokens;
  total->completion_tokens += r.usage.completion_tokens;
}

GenerationRequest make_request(std::string prompt, double temperature, int max_tokens, Rng& rng, const char* tag) {
  GenerationRequest req;
  req.prompt = std::move(prompt);
  req.temperature = temperature;
  req.max_tokens = max_tokens;
  req.seed = static_cast<std::int64_t>(rng.next() >> 1);
  req.tag = tag;
  return req;
}

// Calls the provider and parses, re-asking up to `retries` times on a
// transient transport failure or a parse failure. Permanent transport errors
// propagate so the run aborts with its state on disk.
template <typename Parse>
auto call_with_retries(Provider& provider, const GenerationRequest& req, int retries, TokenUsage* usage, Parse parse)
    -> std::optional<decltype(parse(std::string()))> {
  for (int attempt = 0; attempt <= retries; ++attempt) {
    try {
      auto result = provider.generate(req);
      add_usage(usage, result);
      return parse(result.text);
    } catch (const ParseError& e) {
      spdlog::warn("{}: unparseable response ({})", req.tag, e.what());
    } catch (const TransportError& e) {
      if (!e.transient()) throw;
      spdlog::warn("{}: provider failure ({})", req.tag, e.what());
    }
  }
  return std::nullopt;
}

}  // namespace

std::string render_prompt(const std::vector<AugmentedExample>& dataset, const std::string& task,
                          const TiclConfig& config, bool zero_shot, Rng* rng, const prompts::TemplateSet& templates) {
  if (zero_shot) return prompts::render_zero_shot(task, templates);
  std::vector<AugmentedExample> chosen;
  if (config.icl_sample_size && *config.icl_sample_size < dataset.size()) {
    if (!rng) throw ConfigError("render_prompt: sampling needs a generator");
    for (std::size_t idx : rng->sample(dataset.size(), *config.icl_sample_size)) chosen.push_back(dataset[idx]);
  } else {
    chosen = dataset;
  }
  prompts::FewShotOptions opts;
  opts.include_attempts = has_attempts(chosen);
  opts.include_explanations = config.include_explanations;
  return prompts::render_fewshot(task, chosen, opts, templates);
}

std::optional<std::string> explore_step(TiclState& state, std::size_t index, Provider& provider,
                                        const TiclConfig& config, const prompts::TemplateSet& templates,
                                        TokenUsage* usage) {
  if (index >= state.dataset.size()) throw ConfigError("explore_step: index out of range");
  const auto& target = state.dataset[index].sample;
  std::string prompt;
  if (!config.initial_icl && state.epoch == 0) {
    prompt = prompts::render_zero_shot(target.task, templates);
  } else {
    const std::size_t others = state.dataset.size() - 1;
    const std::size_t k = config.icl_sample_size ? std::min(*config.icl_sample_size, others) : others;
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < state.dataset.size(); ++i) {
      if (i != index) pool.push_back(i);
    }
    std::vector<AugmentedExample> icl;
    for (std::size_t draw : state.rng.sample(pool.size(), k)) icl.push_back(state.dataset[pool[draw]]);
    prompts::FewShotOptions opts;
    opts.include_attempts = has_attempts(icl);
    opts.include_explanations = config.include_explanations;
    prompt = prompts::render_fewshot(target.task, icl, opts, templates);
  }
  auto req = make_request(std::move(prompt), config.temperature, config.max_tokens, state.rng, "explore");
  return call_with_retries(provider, req, config.step_retries, usage,
                           [](const std::string& text) { return prompts::parse_fenced_output(text); });
}

LearnResult learn_step(TiclState& state, std::size_t index, const std::string& candidate, Provider& provider,
                       const TiclConfig& config, const prompts::TemplateSet& templates, TokenUsage* usage) {
  if (index >= state.dataset.size()) throw ConfigError("learn_step: index out of range");
  if (candidate.empty()) throw ConfigError("learn_step: empty candidate");
  auto& example = state.dataset[index];
  auto req = make_request(
      prompts::render_explanation(example.sample.task, example.sample.reference, candidate, templates),
      config.explain_temperature, config.max_tokens, state.rng, "explain");
  auto parsed = call_with_retries(provider, req, config.step_retries, usage,
                                  [](const std::string& text) { return prompts::parse_explanation_json(text); });
  LearnResult out;
  if (!parsed) {
    out.outcome = "skipped_explain";
    return out;
  }
  if (parsed->is_consistent) {
    out.outcome = "consistent";
    return out;
  }
  for (const auto& a : example.attempts) {
    if (a.negative == candidate) {
      out.outcome = "duplicate";
      return out;
    }
  }
  if (example.attempts.size() >= config.max_attempts_per_example) {
    example.attempts.erase(example.attempts.begin(),
                           example.attempts.begin() +
                               static_cast<std::ptrdiff_t>(example.attempts.size() - config.max_attempts_per_example + 1));
    out.evicted = true;
  }
  example.attempts.push_back({candidate, parsed->explanation, state.epoch});
  out.outcome = "accepted";
  return out;
}

EvalResult checkpoint_eval(const std::vector<AugmentedExample>& candidate, bool candidate_zero_shot,
                           const std::vector<AugmentedExample>& incumbent, bool incumbent_zero_shot,
                           const std::vector<WritingSample>& val, const std::vector<std::string>& judge_exemplars,
                           Provider& generator, Provider& judge_provider, const TiclConfig& config, Rng& rng,
                           const prompts::TemplateSet& templates) {
  if (val.empty()) throw DataError("checkpoint_eval: empty validation split");
  const std::size_t g = config.eval_generations;
  std::vector<GenerationRequest> requests;
  for (const auto& sample : val) {
    for (int side = 0; side < 2; ++side) {
      const auto& dataset = side == 0 ? candidate : incumbent;
      const bool zs = side == 0 ? candidate_zero_shot : incumbent_zero_shot;
      for (std::size_t k = 0; k < g; ++k) {
        requests.push_back(make_request(render_prompt(dataset, sample.task, config, zs, &rng, templates),
                                        config.temperature, config.max_tokens, rng, "validate"));
      }
    }
  }
  auto results = generator.generate_batch(requests);

  judge::ComparisonPlan plan;
  plan.mode = judge::PlanMode::kVsCandidate;
  plan.candidate_pairs = val.size() * g * g;
  std::size_t pos = 0;
  for (const auto& sample : val) {
    std::vector<std::optional<std::string>> outs[2];
    for (int side = 0; side < 2; ++side) {
      for (std::size_t k = 0; k < g; ++k, ++pos) {
        const auto& item = results[pos];
        if (!item.ok()) {
          spdlog::warn("validate: generation failed for {} ({})", sample.sample_id, item.error);
          outs[side].push_back(std::nullopt);
          continue;
        }
        try {
          outs[side].push_back(prompts::parse_fenced_output(item.result->text));
        } catch (const ParseError& e) {
          spdlog::warn("validate: unparseable generation for {} ({})", sample.sample_id, e.what());
          outs[side].push_back(std::nullopt);
        }
      }
    }
    for (std::size_t i = 0; i < g; ++i) {
      for (std::size_t j = 0; j < g; ++j) {
        if (!outs[0][i] || !outs[1][j]) continue;
        for (auto o : {judge::Orientation::kAB, judge::Orientation::kBA}) {
          plan.pairs.push_back({sample.author_id, sample.sample_id, "candidate", "incumbent", i, j, *outs[0][i],
                                *outs[1][j], o});
        }
      }
    }
  }

  EvalResult out;
  out.judge_calls = static_cast<long>(plan.pairs.size());
  const std::uint64_t judge_seed = rng.next();
  if (plan.pairs.empty()) {
    spdlog::warn("validate: no comparable outputs; keeping the incumbent");
    return out;
  }
  judge::ExecuteOptions exec;
  exec.examples_per_judge = std::min(config.eval_examples_per_judge, judge_exemplars.size());
  exec.templates = &templates;
  if (exec.examples_per_judge == 0) throw DataError("checkpoint_eval: no judge exemplars");
  try {
    auto verdicts = judge::execute(plan, judge_exemplars, judge_provider, judge_seed, exec);
    for (const auto& v : verdicts) {
      if (!v.resolved()) continue;
      ++out.resolved;
      if (*v.winner == judge::Side::kLeft) ++out.candidate_votes;
    }
  } catch (const DataError& e) {
    spdlog::warn("validate: {}; keeping the incumbent", e.what());
    return out;
  }
  out.candidate_wins = 2 * out.candidate_votes > out.resolved;
  return out;
}

namespace {

std::string checkpoint_id(long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "ckpt-%06ld", step);
  return buf;
}

bool zero_shot_at(const TiclConfig& config, long step) { return !config.initial_icl && step == 0; }

}  // namespace

TiclArtifact run(const SplitCorpus& split, const TiclConfig& config, const Providers& providers,
                 const RunOptions& options) {
  config.validate();
  if (!providers.generation) throw ConfigError("run: no generation provider");
  Provider& generator = *providers.generation;
  Provider& explainer = providers.explanation ? *providers.explanation : generator;
  const auto& templates = options.templates ? *options.templates : prompts::TemplateSet::defaults();

  const bool persist = !options.run_dir.empty();
  const auto state_path = options.run_dir / "state.json";
  const auto ckpt_dir = options.run_dir / "checkpoints";
  const auto manifest_path = options.run_dir / "manifest.json";
  if (persist) std::filesystem::create_directories(ckpt_dir);

  TiclState state;
  if (options.resume && persist && std::filesystem::exists(state_path)) {
    state = load_state(state_path);
    if (state.config_hash != config_hash(config)) {
      throw ConfigError("cannot resume " + state_path.string() + ": it was written with config " +
                        state.config_hash + ", current config is " + config_hash(config));
    }
    if (state.author_id != split.author_id) {
      throw ConfigError("cannot resume " + state_path.string() + ": it belongs to author '" + state.author_id + "'");
    }
    spdlog::info("{}: resuming at step {}", state.author_id, state.step);
  } else {
    state = init_state(split, config);
  }

  const long n_train = static_cast<long>(state.dataset.size());
  const long total = config.negatives_enabled ? n_train * config.epochs : 0;
  const long interval = static_cast<long>(config.checkpoint_interval.value_or(state.dataset.size()));
  std::vector<std::string> judge_exemplars;
  for (const auto& s : split.train) judge_exemplars.push_back(s.reference);

  auto snapshot = [&](long step) {
    CheckpointRef ref;
    ref.checkpoint_id = checkpoint_id(step);
    ref.step = step;
    if (persist) {
      const auto path = ckpt_dir / (ref.checkpoint_id + ".json");
      ref.path = std::filesystem::relative(path, options.run_dir).generic_string();
      write_checkpoint(path, ref, state, config);
    }
    return ref;
  };
  auto persist_all = [&] {
    if (!persist) return;
    save_state(state, state_path);
    write_manifest(manifest_path, state, config, total, state.step >= total);
  };

  if (state.checkpoints.empty()) {
    state.best_checkpoint = snapshot(0);
    state.best_dataset = state.dataset;
    state.checkpoints.push_back(state.best_checkpoint);
    persist_all();
  }

  while (state.step < total) {
    if (options.stop_after_step && state.step >= *options.stop_after_step) break;
    const std::size_t index = state.order[static_cast<std::size_t>(state.step % n_train)];
    StepRecord rec;
    rec.sample_id = state.dataset[index].sample.sample_id;
    rec.epoch = state.epoch;
    rec.step = state.step + 1;
    auto candidate = explore_step(state, index, generator, config, templates, &rec.usage);
    if (!candidate) {
      rec.outcome = "skipped_explore";
    } else {
      auto learned = learn_step(state, index, *candidate, explainer, config, templates, &rec.usage);
      rec.outcome = learned.outcome;
      rec.evicted = learned.evicted;
    }
    state.history.push_back(rec);
    ++state.step;
    state.epoch = static_cast<int>(state.step / n_train);

    if (state.step % interval == 0 || state.step == total) {
      CheckpointRef ref = snapshot(state.step);
      if (!config.checkpointing) {
        state.best_checkpoint = ref;
        state.best_dataset = state.dataset;
      } else if (state.dataset == state.best_dataset) {
        spdlog::info("{}: {} unchanged from the incumbent; not evaluated", state.author_id, ref.checkpoint_id);
      } else {
        if (!providers.judge) throw ConfigError("run: checkpointing needs a judge provider");
        auto eval = checkpoint_eval(state.dataset, false, state.best_dataset,
                                    zero_shot_at(config, state.best_checkpoint.step), split.val, judge_exemplars,
                                    generator, *providers.judge, config, state.rng, templates);
        if (eval.resolved > 0) {
          ref.scored = true;
          ref.val_score = static_cast<double>(eval.candidate_votes) / static_cast<double>(eval.resolved);
        }
        spdlog::info("{}: {} won {}/{} against {}", state.author_id, ref.checkpoint_id, eval.candidate_votes,
                     eval.resolved, state.best_checkpoint.checkpoint_id);
        if (eval.candidate_wins) {
          state.best_checkpoint = ref;
          state.best_dataset = state.dataset;
        }
      }
      state.checkpoints.push_back(ref);
    }
    persist_all();
  }

  TiclArtifact artifact;
  artifact.preset = config.preset;
  artifact.complete = state.step >= total;
  artifact.best = state.best_checkpoint;
  artifact.best_dataset = state.best_dataset;
  artifact.best_zero_shot = zero_shot_at(config, state.best_checkpoint.step);
  artifact.state = std::move(state);
  return artifact;
}

std::vector<Generation> generate_outputs(const TiclArtifact& artifact, const std::string& task, std::size_t g,
                                         Provider& provider, const TiclConfig& config,
                                         const prompts::TemplateSet& templates) {
  Rng rng(fnv1a64(task, config.rng_seed ^ 0x9e3779b97f4a7c15ULL));
  std::vector<GenerationRequest> requests;
  for (std::size_t k = 0; k < g; ++k) {
    requests.push_back(make_request(
        render_prompt(artifact.best_dataset, task, config, artifact.best_zero_shot, &rng, templates),
        config.temperature, config.max_tokens, rng, "generate"));
  }
  auto items = provider.generate_batch(requests);
  return collect_generations(items);
}

}  // namespace ticl::engine
