// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "ticl/cli.hpp"
#include "ticl/errors.hpp"
#include "ticl/outputs.hpp"
#include "ticl/rng.hpp"

namespace ticl::cli {

using nlohmann::ordered_json;

namespace {

constexpr int kReportSchemaVersion = 1;

struct Context {
  RunConfig config;
  std::vector<AuthorCorpus> corpora;
  prompts::TemplateSet templates;
};

Context open_context(const CommonArgs& args) {
  Context ctx;
  ctx.config = load_config(args.config);
  if (args.output) ctx.config.output_dir = *args.output;
  if (args.seed) ctx.config.seed = *args.seed;
  if (args.templates) ctx.config.templates_dir = *args.templates;
  ctx.templates = ctx.config.templates_dir.empty() ? prompts::TemplateSet::defaults()
                                                   : prompts::TemplateSet::load(ctx.config.templates_dir);
  if (ctx.config.corpus_paths.empty()) throw ConfigError("config lists no corpus paths");
  std::set<std::string> seen;
  for (const auto& path : ctx.config.corpus_paths) {
    for (auto& c : load_corpora(path, ctx.config.load)) {
      if (!seen.insert(c.author_id).second) {
        throw DataError("author '" + c.author_id + "' appears in more than one corpus path");
      }
      ctx.corpora.push_back(std::move(c));
    }
  }
  if (!args.authors.empty()) {
    std::vector<AuthorCorpus> kept;
    for (const auto& id : args.authors) {
      auto it = std::find_if(ctx.corpora.begin(), ctx.corpora.end(),
                             [&](const AuthorCorpus& c) { return c.author_id == id; });
      if (it == ctx.corpora.end()) throw DataError("author '" + id + "' is not in the corpus");
      kept.push_back(*it);
    }
    ctx.corpora = std::move(kept);
  }
  return ctx;
}

std::uint64_t author_seed(const std::string& author, std::uint64_t seed) { return fnv1a64(author, seed); }

void write_text(const std::filesystem::path& path, const std::string& text) { engine::write_file_atomic(path, text); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

ordered_json ref_json(const engine::CheckpointRef& r) {
  return {{"checkpoint_id", r.checkpoint_id},
          {"step", r.step},
          {"val_score", r.val_score},
          {"scored", r.scored},
          {"path", r.path}};
}

std::vector<std::string> test_ids(const SplitCorpus& split) {
  std::vector<std::string> ids;
  for (const auto& s : split.test) ids.push_back(s.sample_id);
  return ids;
}

}  // namespace

// ---------------------------------------------------------------------------

void cmd_ingest(const CommonArgs& args, std::ostream& out) {
  Context ctx = open_context(args);
  DirLock lock(ctx.config.output_dir);
  ordered_json index;
  index["schema_version"] = kReportSchemaVersion;
  index["kind"] = "corpus_index";
  index["seed"] = ctx.config.seed;
  index["authors"] = ordered_json::array();
  std::size_t samples = 0;
  for (const auto& c : ctx.corpora) {
    SplitCorpus sc = split(c, ctx.config.seed, ctx.config.split);
    ordered_json a;
    a["author_id"] = c.author_id;
    a["dataset_tag"] = to_string(c.dataset_tag);
    a["samples"] = c.samples.size();
    auto ids = [](const std::vector<WritingSample>& v) {
      std::vector<std::string> r;
      for (const auto& s : v) r.push_back(s.sample_id);
      return r;
    };
    a["train"] = ids(sc.train);
    a["val"] = ids(sc.val);
    a["test"] = ids(sc.test);
    index["authors"].push_back(a);
    samples += c.samples.size();
    out << c.author_id << ": " << c.samples.size() << " samples (train " << sc.train.size() << ", val "
        << sc.val.size() << ", test " << sc.test.size() << ")\n";
  }
  write_text(ctx.config.output_dir / "corpus_index.json", index.dump(2) + "\n");
  out << ctx.corpora.size() << " authors, " << samples << " samples indexed\n";
}

// ---------------------------------------------------------------------------

void cmd_run(const RunArgs& args, std::ostream& out) {
  Context ctx = open_context(args.common);
  auto& cfg = ctx.config;
  DirLock lock(cfg.output_dir);

  const bool is_ticl = args.method == "ticl";
  engine::TiclConfig ticl_cfg = cfg.ticl;
  std::optional<baselines::Kind> kind;
  if (is_ticl) {
    ticl_cfg = engine::apply_preset(ticl_cfg, args.preset.empty() ? cfg.ticl.preset : args.preset);
  } else {
    kind = baselines::parse_kind(args.method);
    if (!args.preset.empty() && args.preset != "full") throw ConfigError("--preset applies only to --method ticl");
  }
  const std::string label = is_ticl ? "ticl-" + ticl_cfg.preset : baselines::to_string(*kind);
  const auto root = cfg.output_dir / "runs" / label;
  std::filesystem::create_directories(root);

  auto generator = make_provider(cfg, "generation");
  auto explainer = make_provider(cfg, "explanation");
  auto judge_provider = make_provider(cfg, "judge");
  std::unique_ptr<baselines::EmbeddingScorer> scorer;
  if (kind == baselines::Kind::kOpro) scorer = make_scorer(cfg, ctx.corpora);

  baselines::BaselineSpec spec = cfg.baseline;
  spec.templates = &ctx.templates;
  if (kind) spec.kind = *kind;

  std::vector<OutputRecord> records;
  ordered_json manifest;
  manifest["schema_version"] = kReportSchemaVersion;
  manifest["kind"] = "run_manifest";
  manifest["label"] = label;
  manifest["method"] = args.method;
  manifest["preset"] = is_ticl ? ticl_cfg.preset : "";
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = is_ticl ? engine::config_hash(ticl_cfg) : "";
  manifest["generations_per_task"] = spec.generations_per_task;
  manifest["authors"] = ordered_json::array();
  bool complete = true;

  auto add_outputs = [&](const std::string& author, const std::string& task_id, const std::vector<Generation>& gens) {
    for (std::size_t k = 0; k < gens.size(); ++k) {
      records.push_back({author, task_id, label, k, gens[k].text, gens[k].error});
    }
  };

  for (const auto& corpus : ctx.corpora) {
    SplitCorpus sc = split(corpus, cfg.seed, cfg.split);
    const std::uint64_t aseed = author_seed(corpus.author_id, cfg.seed);
    ordered_json entry;
    entry["author_id"] = corpus.author_id;
    entry["test_tasks"] = test_ids(sc);

    if (is_ticl) {
      engine::TiclConfig acfg = ticl_cfg;
      acfg.rng_seed = aseed;
      engine::Providers providers{generator.get(), explainer.get(), judge_provider.get()};
      engine::RunOptions ropts;
      ropts.run_dir = root / "authors" / corpus.author_id;
      ropts.resume = args.resume;
      ropts.stop_after_step = args.stop_after_step;
      ropts.templates = &ctx.templates;
      auto artifact = engine::run(sc, acfg, providers, ropts);
      const long total = acfg.negatives_enabled ? static_cast<long>(sc.train.size()) * acfg.epochs : 0;
      entry["complete"] = artifact.complete;
      entry["steps"] = artifact.state.step;
      entry["total_steps"] = total;
      entry["best_checkpoint"] = ref_json(artifact.best);
      entry["best_zero_shot"] = artifact.best_zero_shot;
      entry["checkpoints"] = ordered_json::array();
      for (const auto& r : artifact.state.checkpoints) entry["checkpoints"].push_back(ref_json(r));
      entry["manifest"] = "authors/" + corpus.author_id + "/manifest.json";
      out << corpus.author_id << ": " << artifact.state.step << "/" << total << " steps, "
          << artifact.state.checkpoints.size() << " checkpoints, best " << artifact.best.checkpoint_id << "\n";
      if (!artifact.complete) {
        complete = false;
      } else {
        for (const auto& sample : sc.test) {
          add_outputs(corpus.author_id, sample.sample_id,
                      engine::generate_outputs(artifact, sample.task, spec.generations_per_task, *generator, acfg,
                                               ctx.templates));
        }
      }
    } else if (*kind == baselines::Kind::kOpro) {
      baselines::OproConfig ocfg = cfg.opro;
      ocfg.spec = spec;
      ocfg.spec.seed = aseed;
      auto result = baselines::run_opro(sc, *generator, scorer.get(), ocfg);
      ordered_json hist = ordered_json::array();
      for (const auto& h : result.state.history) hist.push_back({{"instruction", h.instruction}, {"score", h.score}});
      ordered_json st;
      st["schema_version"] = kReportSchemaVersion;
      st["kind"] = "opro_state";
      st["author_id"] = corpus.author_id;
      st["iterations"] = result.state.iterations;
      st["candidates_per_iteration"] = result.state.candidates_per_iteration;
      st["best_instruction"] = result.state.best_instruction;
      st["best_score"] = result.state.best_score;
      st["candidate_scoring_generations"] = result.state.candidate_scoring_generations;
      st["seed_scoring_generations"] = result.state.seed_scoring_generations;
      st["skipped_candidates"] = result.state.skipped_candidates;
      st["history"] = hist;
      write_text(root / "authors" / corpus.author_id / "opro.json", st.dump(2) + "\n");
      entry["complete"] = true;
      entry["best_instruction"] = result.state.best_instruction;
      for (const auto& sample : sc.test) add_outputs(corpus.author_id, sample.sample_id, result.outputs[sample.sample_id]);
      out << corpus.author_id << ": opro best score " << result.state.best_score << "\n";
    } else {
      spec.seed = aseed;
      for (const auto& sample : sc.test) {
        std::vector<Generation> gens;
        switch (*kind) {
          case baselines::Kind::kZeroShot: gens = baselines::run_zero_shot(sample.task, *generator, spec); break;
          case baselines::Kind::kFewShot: gens = baselines::run_few_shot(sample.task, sc.train, *generator, spec); break;
          default: gens = baselines::run_cot(sample.task, sc.train, *generator, spec); break;
        }
        add_outputs(corpus.author_id, sample.sample_id, gens);
      }
      entry["complete"] = true;
      out << corpus.author_id << ": " << sc.test.size() * spec.generations_per_task << " generations\n";
    }
    manifest["authors"].push_back(entry);
  }

  manifest["complete"] = complete;
  if (complete) {
    write_outputs(root / "outputs.jsonl", records);
    manifest["outputs"] = "outputs.jsonl";
    manifest["output_count"] = records.size();
    out << "wrote " << records.size() << " outputs to " << (root / "outputs.jsonl").string() << "\n";
  } else {
    out << "run stopped early; continue with --resume\n";
  }
  write_text(root / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

namespace {

ordered_json winrate_json(const judge::WinRateReport& r) {
  ordered_json j;
  j["mode"] = r.mode;
  j["estimator"] = judge::to_string(r.estimator);
  j["win_rate"] = r.win_rate;
  j["std_error"] = r.std_error;
  j["wins"] = r.wins;
  j["total"] = r.total;
  j["unresolved"] = r.unresolved;
  ordered_json per = ordered_json::object();
  for (const auto& [author, s] : r.per_author) {
    per[author] = {{"wins", s.wins},         {"total", s.total},       {"unresolved", s.unresolved},
                   {"win_rate", s.win_rate}, {"std_error", s.std_error}, {"flagged", s.flagged}};
  }
  j["per_author"] = per;
  return j;
}

judge::WinRateReport winrate_from(const nlohmann::json& j) {
  judge::WinRateReport r;
  r.mode = j.at("mode").get<std::string>();
  r.estimator = judge::parse_se_estimator(j.at("estimator").get<std::string>());
  r.win_rate = j.at("win_rate").get<double>();
  r.std_error = j.at("std_error").get<double>();
  r.wins = j.at("wins").get<long>();
  r.total = j.at("total").get<long>();
  r.unresolved = j.at("unresolved").get<long>();
  return r;
}

std::vector<std::string> texts_of(const std::filesystem::path& path) {
  std::vector<std::string> texts;
  if (path.extension() == ".jsonl") {
    for (const auto& r : read_outputs(path)) {
      if (r.error.empty() && !r.text.empty()) texts.push_back(r.text);
    }
  } else {
    texts.push_back(read_text(path));
  }
  if (texts.empty()) throw DataError(path.string() + " contains no texts");
  return texts;
}

double mean_fre(const std::vector<std::string>& texts) {
  double sum = 0.0;
  long n = 0;
  for (const auto& t : texts) {
    if (lexstats::readability_counts(t).words == 0) continue;
    sum += lexstats::flesch_reading_ease(t);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

// Each n-gram becomes its own sentence.
double ngram_fre(const std::vector<lexstats::NgramScore>& grams) {
  std::string text;
  for (const auto& g : grams) text += g.ngram + ". ";
  if (text.empty()) return 0.0;
  return lexstats::flesch_reading_ease(text);
}

}  // namespace

void cmd_evaluate(const EvaluateArgs& args, std::ostream& out) {
  Context ctx = open_context(args.common);
  auto& cfg = ctx.config;
  DirLock lock(cfg.output_dir);
  const bool vs_author = args.mode == "vs_author";
  if (!vs_author && args.mode != "vs_candidate") throw ConfigError("unknown mode '" + args.mode + "'");
  if (!vs_author && args.theirs.empty()) throw ConfigError("vs_candidate needs --theirs");

  auto ours_records = read_outputs(args.ours);
  auto ours = group_outputs(ours_records);
  std::map<std::string, judge::TaskOutputs> theirs;
  if (!vs_author) {
    auto recs = read_outputs(args.theirs);
    theirs = group_outputs(recs);
  }

  judge::PlanOptions popts = cfg.judge.plan;
  std::vector<judge::ComparisonPlan> plans;
  std::map<std::string, std::vector<std::string>> exemplars;
  for (const auto& corpus : ctx.corpora) {
    auto it = ours.find(corpus.author_id);
    if (it == ours.end()) continue;
    SplitCorpus sc = split(corpus, cfg.seed, cfg.split);
    for (const auto& s : sc.train) exemplars[corpus.author_id].push_back(s.reference);
    if (vs_author) {
      std::map<std::string, std::string> refs;
      for (const auto& s : corpus.samples) {
        if (it->second.count(s.sample_id)) refs[s.sample_id] = s.reference;
      }
      plans.push_back(judge::plan_vs_author(corpus.author_id, it->second, refs, popts));
    } else {
      auto jt = theirs.find(corpus.author_id);
      if (jt == theirs.end()) throw DataError("no outputs for author '" + corpus.author_id + "' in " + args.theirs.string());
      plans.push_back(judge::plan_vs_candidate(corpus.author_id, it->second, jt->second,
                                               author_seed(corpus.author_id, cfg.seed), popts));
    }
  }
  if (plans.empty()) throw DataError("no authors in " + args.ours.string() + " match the corpus");
  auto plan = judge::merge(plans);

  auto judge_provider = make_provider(cfg, "judge");
  judge::ExecuteOptions exec = cfg.judge.execute;
  exec.templates = &ctx.templates;
  auto verdicts = judge::execute(plan, exemplars, *judge_provider, cfg.seed, exec);
  auto report = judge::aggregate(verdicts, cfg.judge.estimator, args.mode);

  const std::string label = args.label.empty()
                                ? args.ours.stem().string() + "-vs-" + (vs_author ? "author" : args.theirs.stem().string())
                                : args.label;
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "winrate";
  j["label"] = label;
  j["ours"] = args.ours.filename().string();
  j["theirs"] = vs_author ? "author" : args.theirs.filename().string();
  j["seed"] = cfg.seed;
  j["candidate_pairs"] = plan.candidate_pairs;
  j["comparisons"] = plan.pairs.size();
  j["report"] = winrate_json(report);
  ordered_json vs = ordered_json::array();
  for (const auto& v : verdicts) {
    vs.push_back({{"pair", v.pair_index},
                  {"author_id", v.author_id},
                  {"task_id", v.task_id},
                  {"orientation", judge::to_string(v.orientation)},
                  {"winner", v.winner ? (*v.winner == judge::Side::kLeft ? "ours" : "theirs") : "unresolved"},
                  {"parse_attempts", v.parse_attempts}});
  }
  j["verdicts"] = vs;
  write_text(cfg.output_dir / "reports" / ("winrate-" + label + ".json"), j.dump(2) + "\n");
  out << label << " (" << args.mode << "): " << plan.pairs.size() << " comparisons, win rate "
      << judge::format_mean_se(report.win_rate, report.std_error) << "\n";
}

void cmd_benchmark_judge(const BenchmarkArgs& args, std::ostream& out) {
  Context ctx = open_context(args.common);
  auto& cfg = ctx.config;
  DirLock lock(cfg.output_dir);
  auto strategy = args.strategy ? judge::parse_distractor_strategy(*args.strategy) : cfg.judge.distractor;
  auto judge_provider = make_provider(cfg, "judge");
  judge::BenchmarkOptions opts;
  opts.seed = cfg.seed;
  opts.top_k = cfg.judge.top_k;
  opts.split = cfg.split;
  opts.execute = cfg.judge.execute;
  opts.execute.templates = &ctx.templates;
  auto report = judge::benchmark_judge(ctx.corpora, strategy, *judge_provider, opts);

  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "judge_benchmark";
  j["strategy"] = report.strategy;
  j["seed"] = cfg.seed;
  j["top_k"] = report.top_k;
  j["mean_accuracy"] = report.mean_accuracy;
  j["mean_std_error"] = report.mean_std_error;
  j["top_k_accuracy"] = report.top_k_accuracy;
  j["top_k_std_error"] = report.top_k_std_error;
  ordered_json authors = ordered_json::array();
  for (const auto& a : report.authors) {
    authors.push_back({{"author_id", a.author_id},
                       {"correct", a.correct},
                       {"total", a.total},
                       {"accuracy", a.accuracy},
                       {"std_error", a.std_error},
                       {"skipped", a.skipped},
                       {"note", a.note}});
  }
  j["authors"] = authors;
  write_text(cfg.output_dir / "reports" / ("judge-benchmark-" + report.strategy + ".json"), j.dump(2) + "\n");
  out << "judge accuracy (" << report.strategy << "): all "
      << judge::format_mean_se(report.mean_accuracy, report.mean_std_error) << ", top-" << report.top_k.size() << " "
      << judge::format_mean_se(report.top_k_accuracy, report.top_k_std_error) << "\n";
}

void cmd_analyze(const AnalyzeArgs& args, std::ostream& out) {
  Context ctx = open_context(args.common);
  auto& cfg = ctx.config;
  DirLock lock(cfg.output_dir);
  const auto a = texts_of(args.a);
  const auto b = texts_of(args.b);
  auto scores = lexstats::fightin_words(a, b, cfg.analysis);
  auto sig = lexstats::significant(scores, cfg.analysis.p_level);
  std::vector<lexstats::NgramScore> sig_a, sig_b;
  for (const auto& s : sig) (s.z_score > 0 ? sig_a : sig_b).push_back(s);
  std::reverse(sig_b.begin(), sig_b.end());

  auto grams = [](const std::vector<lexstats::NgramScore>& v) {
    ordered_json arr = ordered_json::array();
    for (const auto& s : v) {
      arr.push_back({{"ngram", s.ngram},
                     {"z", s.z_score},
                     {"delta", s.log_odds_delta},
                     {"p", s.p_value},
                     {"count_a", s.count_a},
                     {"count_b", s.count_b}});
    }
    return arr;
  };
  const std::string label =
      args.label.empty() ? args.a.stem().string() + "-vs-" + args.b.stem().string() : args.label;
  ordered_json j;
  j["schema_version"] = kReportSchemaVersion;
  j["kind"] = "lexical";
  j["label"] = label;
  j["a"] = args.a.filename().string();
  j["b"] = args.b.filename().string();
  j["alpha"] = cfg.analysis.alpha;
  j["ngram_range"] = {cfg.analysis.min_n, cfg.analysis.max_n};
  j["p_level"] = cfg.analysis.p_level;
  j["critical_z"] = lexstats::critical_z(cfg.analysis.p_level);
  j["vocabulary"] = scores.size();
  j["fre_a"] = mean_fre(a);
  j["fre_b"] = mean_fre(b);
  j["fre_significant_a"] = ngram_fre(sig_a);
  j["fre_significant_b"] = ngram_fre(sig_b);
  j["significant_a"] = grams(sig_a);
  j["significant_b"] = grams(sig_b);
  write_text(cfg.output_dir / "reports" / ("lexical-" + label + ".json"), j.dump(2) + "\n");
  out << label << ": " << sig_a.size() << " n-grams favour A, " << sig_b.size() << " favour B; FRE "
      << pct(j["fre_a"].get<double>()) << " vs " << pct(j["fre_b"].get<double>()) << "\n";
}

// ---------------------------------------------------------------------------

namespace {

std::string pad(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size());
  for (std::size_t i = 0; i < header.size(); ++i) w[i] = header[i].size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) w[i] = std::max(w[i], r[i].size());
  }
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out += i ? "  " : "";
      out += i + 1 < cells.size() ? pad(cells[i], w[i]) : cells[i];
    }
    out += '\n';
  };
  line(header);
  std::vector<std::string> rule;
  for (auto x : w) rule.push_back(std::string(x, '-'));
  line(rule);
  for (const auto& r : rows) line(r);
  return out;
}

std::string join_grams(const nlohmann::json& arr, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < arr.size() && i < n; ++i) {
    if (i) s += ", ";
    s += arr[i].at("ngram").get<std::string>();
  }
  return s.empty() ? "-" : s;
}

}  // namespace

void cmd_report(const ReportArgs& args, std::ostream& out) {
  if (!std::filesystem::is_directory(args.input)) throw DataError(args.input.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(args.input)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<std::pair<std::string, nlohmann::json>> winrates, benches, lexical, runs;
  for (const auto& f : files) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(f));
    } catch (const nlohmann::json::parse_error&) {
      continue;
    }
    if (!j.is_object() || !j.contains("kind")) continue;
    const auto kind = j["kind"].get<std::string>();
    const auto rel = std::filesystem::relative(f, args.input).generic_string();
    if (kind == "winrate") winrates.emplace_back(rel, j);
    else if (kind == "judge_benchmark") benches.emplace_back(rel, j);
    else if (kind == "lexical") lexical.emplace_back(rel, j);
    else if (kind == "run_manifest") runs.emplace_back(rel, j);
  }
  if (winrates.empty() && benches.empty() && lexical.empty() && runs.empty()) {
    throw DataError("no run manifests or reports found under " + args.input.string());
  }

  std::string text;
  if (!benches.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [rel, j] : benches) {
      rows.push_back({j["strategy"].get<std::string>(),
                      judge::format_mean_se(j["mean_accuracy"].get<double>(), j["mean_std_error"].get<double>()),
                      "top-" + std::to_string(j["top_k"].size()) + " " +
                          judge::format_mean_se(j["top_k_accuracy"].get<double>(), j["top_k_std_error"].get<double>())});
    }
    text += "Judge accuracy against distractors\n" + table({"strategy", "all authors", "top-k authors"}, rows) + "\n";
  }
  if (!runs.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [rel, j] : runs) {
      long steps = 0, ckpts = 0;
      for (const auto& a : j["authors"]) {
        steps += a.value("steps", 0L);
        if (a.contains("checkpoints")) ckpts += static_cast<long>(a["checkpoints"].size());
      }
      rows.push_back({j["label"].get<std::string>(), j["method"].get<std::string>(),
                      std::to_string(j["authors"].size()), std::to_string(steps), std::to_string(ckpts),
                      j["complete"].get<bool>() ? "yes" : "no"});
    }
    text += "Runs\n" + table({"label", "method", "authors", "steps", "checkpoints", "complete"}, rows) + "\n";
  }
  if (!winrates.empty()) {
    for (const std::string mode : {"vs_author", "vs_candidate"}) {
      std::vector<std::pair<std::string, judge::WinRateReport>> reps;
      for (const auto& [rel, j] : winrates) {
        auto r = winrate_from(j["report"]);
        if (r.mode == mode) reps.emplace_back(j["label"].get<std::string>(), r);
      }
      if (reps.empty()) continue;
      auto best = std::max_element(reps.begin(), reps.end(),
                                   [](const auto& x, const auto& y) { return x.second.win_rate < y.second.win_rate; });
      std::vector<std::vector<std::string>> rows;
      for (const auto& [label, r] : reps) {
        char p[32];
        std::snprintf(p, sizeof p, "%.4f", judge::significance(r, best->second));
        rows.push_back({label, judge::format_mean_se(r.win_rate, r.std_error), std::to_string(r.total),
                        std::to_string(r.unresolved), &r == &best->second ? "-" : p});
      }
      text += "Win rates (" + mode + ")\n" +
              table({"comparison", "win rate", "resolved", "unresolved", "p vs best"}, rows) + "\n";
    }
  }
  if (!lexical.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [rel, j] : lexical) {
      rows.push_back({j["label"].get<std::string>(), join_grams(j["significant_a"], 5),
                      join_grams(j["significant_b"], 5), pct(j["fre_a"].get<double>()),
                      pct(j["fre_b"].get<double>())});
    }
    text += "Distinctive n-grams and readability\n" + table({"pair", "A n-grams", "B n-grams", "FRE A", "FRE B"}, rows);
  }
  out << text;
}

}  // namespace ticl::cli
