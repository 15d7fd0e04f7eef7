// SPDX-License-Identifier: Apache-2.0
//
// The trial-error-explain loop: hold-one-out exploration, explanation-gated
// augmentation of the in-context set, periodic checkpoint selection on the
// validation split, and resumable on-disk state.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ticl/corpus.hpp"
#include "ticl/outputs.hpp"
#include "ticl/prompts.hpp"
#include "ticl/provider.hpp"
#include "ticl/rng.hpp"

namespace ticl::engine {

struct TiclConfig {
  int epochs = 4;
  /// In-context examples per explore prompt; nullopt means all remaining.
  std::optional<std::size_t> icl_sample_size;
  /// Steps between checkpoints; nullopt means one epoch (|train| steps).
  std::optional<std::size_t> checkpoint_interval;
  std::size_t max_attempts_per_example = 8;
  std::uint64_t rng_seed = 0;
  std::size_t eval_examples_per_judge = 5;
  /// Generations per validation task and side in checkpoint selection.
  std::size_t eval_generations = 1;
  /// Re-asks after a failed provider call or unparseable response.
  int step_retries = 1;
  double temperature = 1.0;
  double explain_temperature = 0.0;
  int max_tokens = 2048;

  // Ablation switches.
  /// false: epoch 0 explores with the zero-shot prompt.
  bool initial_icl = true;
  /// false: attempts are rendered without their explanations.
  bool include_explanations = true;
  /// false: no validation selection; the final state is the result.
  bool checkpointing = true;
  /// false: no loop at all; the result is the plain few-shot set.
  bool negatives_enabled = true;
  std::string preset = "full";

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
};

/// Preset names: full, no-initial-icl, no-explanations, no-checkpointing,
/// few-shot-only. Only the ablation switches and the label change.
TiclConfig apply_preset(TiclConfig base, const std::string& preset);
std::vector<std::string> preset_names();

struct StepRecord {
  std::string sample_id;
  int epoch = 0;
  long step = 0;
  /// accepted | consistent | duplicate | skipped_explore | skipped_explain
  std::string outcome;
  bool evicted = false;
  TokenUsage usage;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct CheckpointRef {
  std::string checkpoint_id;
  long step = 0;
  /// Candidate win fraction against the incumbent; 0.5 when not scored.
  double val_score = 0.5;
  bool scored = false;
  std::string path;

  friend bool operator==(const CheckpointRef&, const CheckpointRef&) = default;
};

struct TiclState {
  std::string author_id;
  std::string config_hash;
  std::vector<AugmentedExample> dataset;
  /// Visiting order of dataset indices, fixed at init and reused each epoch.
  std::vector<std::size_t> order;
  /// Epoch of the next step; equals the epoch count once the run is done.
  int epoch = 0;
  /// Completed steps.
  long step = 0;
  Rng rng;
  CheckpointRef best_checkpoint;
  std::vector<AugmentedExample> best_dataset;
  std::vector<CheckpointRef> checkpoints;
  std::vector<StepRecord> history;

  friend bool operator==(const TiclState&, const TiclState&) = default;
};

/// Canonical JSON of the config (sorted keys) and its FNV-1a hash.
std::string canonical_config(const TiclConfig& config);
std::string config_hash(const TiclConfig& config);

/// Throws DataError when fewer than two train samples exist.
TiclState init_state(const SplitCorpus& split, const TiclConfig& config);

/// Samples the in-context set for `index` (never including it), renders the
/// prompt and returns the fenced candidate. nullopt when the step is skipped.
std::optional<std::string> explore_step(TiclState& state, std::size_t index, Provider& provider,
                                        const TiclConfig& config, const prompts::TemplateSet& templates,
                                        TokenUsage* usage = nullptr);

struct LearnResult {
  /// accepted | consistent | duplicate | skipped_explain
  std::string outcome;
  bool evicted = false;
};

LearnResult learn_step(TiclState& state, std::size_t index, const std::string& candidate, Provider& provider,
                       const TiclConfig& config, const prompts::TemplateSet& templates, TokenUsage* usage = nullptr);

/// Prompt for `task` conditioned on `dataset`. With `zero_shot` the dataset
/// is ignored. `rng` is needed only when K is smaller than the dataset.
std::string render_prompt(const std::vector<AugmentedExample>& dataset, const std::string& task,
                          const TiclConfig& config, bool zero_shot, Rng* rng, const prompts::TemplateSet& templates);

struct EvalResult {
  bool candidate_wins = false;
  long candidate_votes = 0;
  long resolved = 0;
  long judge_calls = 0;
};

/// Compares `candidate` against `incumbent` on validation tasks, both
/// orientations per pair. Ties and all-unresolved judging keep the incumbent.
EvalResult checkpoint_eval(const std::vector<AugmentedExample>& candidate, bool candidate_zero_shot,
                           const std::vector<AugmentedExample>& incumbent, bool incumbent_zero_shot,
                           const std::vector<WritingSample>& val, const std::vector<std::string>& judge_exemplars,
                           Provider& generator, Provider& judge, const TiclConfig& config, Rng& rng,
                           const prompts::TemplateSet& templates);

struct Providers {
  Provider* generation = nullptr;
  /// Defaults to `generation`.
  Provider* explanation = nullptr;
  Provider* judge = nullptr;
};

struct RunOptions {
  /// Where state.json, checkpoints/ and manifest.json go; empty keeps
  /// everything in memory.
  std::filesystem::path run_dir;
  /// Continue from run_dir/state.json when it exists.
  bool resume = false;
  /// Stop (state saved) once this many steps are complete.
  std::optional<long> stop_after_step;
  const prompts::TemplateSet* templates = nullptr;
};

struct TiclArtifact {
  std::string preset;
  TiclState state;
  CheckpointRef best;
  std::vector<AugmentedExample> best_dataset;
  /// The best dataset should be rendered with the zero-shot prompt.
  bool best_zero_shot = false;
  bool complete = false;
};

TiclArtifact run(const SplitCorpus& split, const TiclConfig& config, const Providers& providers,
                 const RunOptions& options = {});

/// `g` test-time generations for `task` from a finished artifact.
std::vector<Generation> generate_outputs(const TiclArtifact& artifact, const std::string& task, std::size_t g,
                                          Provider& provider, const TiclConfig& config,
                                          const prompts::TemplateSet& templates);

// Persistence (schema-versioned JSON).
inline constexpr int kStateSchemaVersion = 1;

void save_state(const TiclState& state, const std::filesystem::path& path);
/// Throws DataError naming the byte offset of a syntax error, and
/// MigrationError for a different schema version.
TiclState load_state(const std::filesystem::path& path);

std::string state_to_json(const TiclState& state);
TiclState state_from_json(const std::string& text, const std::string& source);

void write_checkpoint(const std::filesystem::path& path, const CheckpointRef& ref, const TiclState& state,
                      const TiclConfig& config);
/// Dataset stored in a checkpoint file.
std::vector<AugmentedExample> load_checkpoint_dataset(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const TiclState& state, const TiclConfig& config,
                    long total_steps, bool complete);

/// Writes `text` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace ticl::engine
