// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one [PASS]/[FAIL] line per criterion.
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "support/fixtures.hpp"
#include "support/golden.hpp"
#include "support/oracles.hpp"
#include "ticl/cli.hpp"
#include "ticl/engine.hpp"
#include "ticl/errors.hpp"
#include "ticl/judge.hpp"
#include "ticl/lexstats.hpp"
#include "ticl/prompts.hpp"

using namespace ticl;
namespace fs = std::filesystem;
using ticl::testing::slurp;

namespace {

// Collects failed expectations for one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::fabs(got - want) <= tol)) {
      std::ostringstream os;
      os.precision(15);
      os << what << ": got " << got << ", want " << want << " +/- " << tol;
      failures.push_back(os.str());
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

judge::TaskOutputs outputs(const std::string& prefix) {
  judge::TaskOutputs o;
  for (int t = 0; t < 3; ++t) {
    for (int g = 0; g < 5; ++g) o["task" + std::to_string(t)].push_back(prefix + std::to_string(t * 5 + g));
  }
  return o;
}

std::map<std::string, std::string> references() {
  return {{"task0", "ref0"}, {"task1", "ref1"}, {"task2", "ref2"}};
}

void ac1(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  auto cand = judge::plan_vs_candidate("a", outputs("o"), outputs("t"), 1);
  c.expect(cand.candidate_pairs == 75, "candidate pairs " + std::to_string(cand.candidate_pairs) + " != 75");
  c.expect(cand.pairs.size() == 40, "sampled pairs " + std::to_string(cand.pairs.size()) + " != 40");
  auto auth = judge::plan_vs_author("a", outputs("o"), references());
  c.expect(auth.pairs.size() == 30, "vs_author pairs " + std::to_string(auth.pairs.size()) + " != 30");
  std::vector<judge::ComparisonPlan> cs, as;
  for (int a = 0; a < 10; ++a) {
    cs.push_back(judge::plan_vs_candidate("a" + std::to_string(a), outputs("o"), outputs("t"), a));
    as.push_back(judge::plan_vs_author("a" + std::to_string(a), outputs("o"), references()));
  }
  c.expect(judge::merge(cs).pairs.size() == 400, "10-author vs_candidate total != 400");
  c.expect(judge::merge(as).pairs.size() == 300, "10-author vs_author total != 300");
  c.expect(seconds_since(t0) < 1.0, "planning took over 1 s");
}

void ac2(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  auto split = ticl::testing::make_split("a", 7, 2);
  engine::TiclConfig cfg;
  cfg.epochs = 4;
  cfg.rng_seed = 3;
  ScriptedProvider no(ticl::testing::loop_script(ticl::testing::kInconsistent));
  auto art = engine::run(split, cfg, {&no, &no, &no});
  c.expect(no.calls_with_tag("explore") == 28, "explore calls " + std::to_string(no.calls_with_tag("explore")));
  c.expect(no.calls_with_tag("explain") == 28, "explain calls " + std::to_string(no.calls_with_tag("explain")));
  for (const auto& e : art.state.dataset) {
    c.expect(e.attempts.size() == 4, e.sample.sample_id + " has " + std::to_string(e.attempts.size()) + " attempts");
  }
  ScriptedProvider yes(ticl::testing::loop_script(ticl::testing::kConsistent));
  auto fixed = engine::run(split, cfg, {&yes, &yes, &yes});
  c.expect(fixed.state.dataset == engine::init_state(split, cfg).dataset, "consistent run changed the dataset");
  c.expect(fixed.best_dataset == engine::init_state(split, cfg).dataset, "consistent run changed the best dataset");
  c.expect(seconds_since(t0) < 5.0, "loop took over 5 s");
}

fs::path demo_copy(const fs::path& base, const std::string& name) {
  const auto root = base / name;
  fs::copy(TICL_FIXTURES_DIR "/demo", root, fs::copy_options::recursive);
  return root;
}

cli::RunArgs run_args(const fs::path& root, const std::string& preset = "full") {
  cli::RunArgs r;
  r.common.config = root / "config.json";
  r.common.authors = {"ada"};
  r.preset = preset;
  return r;
}

void evaluate(const fs::path& root, const std::string& label) {
  cli::EvaluateArgs e;
  e.common.config = root / "config.json";
  e.common.authors = {"ada"};
  e.ours = root / "out/runs" / label / "outputs.jsonl";
  e.label = label;
  std::ostringstream sink;
  cli::cmd_evaluate(e, sink);
}

void ac3(Check& c) {
  ticl::testing::ScratchDir dir("acc-det");
  std::ostringstream sink;
  std::vector<fs::path> roots;
  for (const char* name : {"a", "b", "c"}) roots.push_back(demo_copy(dir.path(), name));
  cli::cmd_run(run_args(roots[0]), sink);
  cli::cmd_run(run_args(roots[1]), sink);
  auto partial = run_args(roots[2]);
  partial.stop_after_step = 11;
  cli::cmd_run(partial, sink);
  auto resumed = run_args(roots[2]);
  resumed.resume = true;
  cli::cmd_run(resumed, sink);
  for (const auto& r : roots) evaluate(r, "ticl-full");

  const std::vector<std::string> files{"out/runs/ticl-full/authors/ada/state.json",
                                       "out/runs/ticl-full/authors/ada/manifest.json",
                                       "out/runs/ticl-full/manifest.json", "out/runs/ticl-full/outputs.jsonl",
                                       "out/reports/winrate-ticl-full.json"};
  for (const auto& f : files) {
    const auto ref = slurp(roots[0] / f);
    c.expect(!ref.empty(), f + " missing");
    c.expect(ref == slurp(roots[1] / f), f + " differs between seeded runs");
    c.expect(ref == slurp(roots[2] / f), f + " differs after resume");
  }
  for (const auto& e : fs::directory_iterator(roots[0] / "out/runs/ticl-full/authors/ada/checkpoints")) {
    const auto rel = fs::relative(e.path(), roots[0]);
    c.expect(slurp(e.path()) == slurp(roots[2] / rel), rel.string() + " differs after resume");
  }
}

void ac4(Check& c) {
  c.near(lexstats::flesch_reading_ease("Go. Sit. Run."), 121.22, 1e-9, "FRE('Go. Sit. Run.')");
  c.near(lexstats::flesch_reading_ease("The cat sat. The dog ran."), 119.19, 1e-9, "FRE('The cat sat. The dog ran.')");
}

void ac5(Check& c) {
  const std::vector<std::string> a{"a a b"}, b{"a b b"};
  lexstats::FightinConfig cfg;
  cfg.alpha = 0.01;
  auto scores = lexstats::fightin_words(a, b, cfg);
  auto oracle = ticl::testing::monroe_oracle(a, b, cfg.alpha, cfg.min_n, cfg.max_n);
  c.expect(scores.size() == oracle.size(), "vocabulary size differs from the oracle");
  for (const auto& s : scores) {
    if (!oracle.count(s.ngram)) {
      c.expect(false, "unexpected n-gram '" + s.ngram + "'");
      continue;
    }
    c.near(s.log_odds_delta, oracle.at(s.ngram).delta.convert_to<double>(), 1e-9, "delta(" + s.ngram + ")");
    c.near(s.z_score, oracle.at(s.ngram).z.convert_to<double>(), 1e-9, "z(" + s.ngram + ")");
  }
  std::mt19937_64 gen(2024);
  const std::vector<std::string> words{"the", "cat", "sat", "on", "a", "mat", "dog", "ran", "far", "away"};
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1), len(1, 12);
  auto doc = [&] {
    std::string d;
    for (std::size_t i = 0, n = len(gen); i < n; ++i) d += (i ? " " : "") + words[pick(gen)];
    return std::vector<std::string>{d};
  };
  for (int i = 0; i < 100; ++i) {
    const auto x = doc(), y = doc();
    auto xy = lexstats::fightin_words(x, y);
    auto yx = lexstats::fightin_words(y, x);
    std::map<std::string, double> rev;
    for (const auto& s : yx) rev[s.ngram] = s.z_score;
    for (const auto& s : xy) {
      if (!rev.count(s.ngram) || std::fabs(s.z_score + rev[s.ngram]) > 1e-9) {
        c.expect(false, "antisymmetry fails for '" + s.ngram + "' in pair " + std::to_string(i));
        break;
      }
    }
  }
}

void ac6(Check& c) {
  const std::vector<std::string> docs{"a b", "a c", "a b b"};
  const double ia = 1.0, ib = std::log(4.0 / 3.0) + 1.0, ic = std::log(2.0) + 1.0;
  const double n1 = std::hypot(ia, ib), n2 = std::hypot(ia, ic), n3 = std::hypot(ia, 2 * ib);
  const double want[3][3] = {{1.0, ia * ia / (n1 * n2), (ia * ia + 2 * ib * ib) / (n1 * n3)},
                             {ia * ia / (n1 * n2), 1.0, ia * ia / (n2 * n3)},
                             {(ia * ia + 2 * ib * ib) / (n1 * n3), ia * ia / (n2 * n3), 1.0}};
  auto m = lexstats::cosine_matrix(docs);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) c.near(m[i][j], want[i][j], 1e-9, "cos[" + std::to_string(i) + "][" + std::to_string(j) + "]");
  }
  auto target = ticl::testing::make_author("t", 3);
  auto other = ticl::testing::make_author("o", 3);
  other.samples[2].reference = target.samples[1].reference;
  auto third = ticl::testing::make_author("z", 3, "florid");
  auto choice = select_distractor_tfidf("t", {target.samples[1].reference}, {other, third});
  c.expect(choice.sample.sample_id == other.samples[2].sample_id, "distractor is not the verbatim copy");
  c.near(choice.similarity, 1.0, 1e-9, "verbatim distractor similarity");
}

void ac7(Check& c) {
  ScriptedProvider always_a({reply(ScriptMatcher::any(), R"({"answer": "A"})", std::nullopt)});
  auto plan = judge::plan_vs_author("a", outputs("o"), references());
  auto verdicts = judge::execute(plan, {"e1", "e2", "e3", "e4", "e5"}, always_a, 9);
  auto report = judge::aggregate(verdicts, judge::SeEstimator::kBinomial, "vs_author");
  c.expect(report.win_rate == 50.0, "always-A win rate " + std::to_string(report.win_rate) + " != 50");
}

void ac8(Check& c) {
  c.near(judge::binomial_se_percent(53, 100), 4.99, 0.01, "SE(53/100)");
  judge::WinRateReport r;
  r.mode = "vs_author";
  r.wins = 53;
  r.total = 100;
  c.near(judge::significance(r, r), 1.0, 0.0, "significance(a, a)");
  std::mt19937_64 gen(17);
  for (int i = 0; i < 20; ++i) {
    const long na = std::uniform_int_distribution<long>(10, 500)(gen);
    const long nb = std::uniform_int_distribution<long>(10, 500)(gen);
    const long wa = std::uniform_int_distribution<long>(0, na)(gen);
    const long wb = std::uniform_int_distribution<long>(0, nb)(gen);
    c.near(judge::two_proportion_z_test(wa, na, wb, nb).p_value, ticl::testing::chi_square_oracle(wa, na, wb, nb),
           1e-9, "p(" + std::to_string(wa) + "/" + std::to_string(na) + " vs " + std::to_string(wb) + "/" +
                     std::to_string(nb) + ")");
  }
}

void ac9(Check& c) {
  using ticl::testing::golden;
  using ticl::testing::normalize;
  auto in = ticl::testing::load_inputs();
  const std::string task = in.raw["target_task"].get<std::string>();
  prompts::FewShotOptions with_attempts;
  with_attempts.include_attempts = true;
  std::vector<prompts::ScoredInstruction> history;
  for (const auto& h : in.raw["opro_history"]) {
    history.push_back({h["instruction"].get<std::string>(), h["score"].get<double>()});
  }
  const std::vector<std::pair<std::string, std::string>> rendered{
      {"explanation", prompts::render_explanation(in.samples[0].task, in.samples[0].reference,
                                                  in.raw["generated_text"].get<std::string>())},
      {"fewshot", prompts::render_fewshot(task, std::span<const WritingSample>(in.samples))},
      {"ticl", prompts::render_fewshot(task, in.augmented, with_attempts)},
      {"judge", prompts::render_judge(in.raw["judge_examples"].get<std::vector<std::string>>(),
                                      in.raw["option_a"].get<std::string>(), in.raw["option_b"].get<std::string>())},
      {"cot_style_guide", prompts::render_cot_style_guide(task, in.samples)},
      {"cot_writing", prompts::render_cot_writing(task, in.samples, in.raw["style_guide"].get<std::string>())},
      {"opro_meta", prompts::render_opro_meta(history, in.samples)},
      {"opro_writing", prompts::render_opro_writing(task, in.raw["opro_instruction"].get<std::string>())},
  };
  for (const auto& [name, text] : rendered) c.expect(normalize(text) == normalize(golden(name)), name + " differs");
  const auto meta = prompts::render_opro_meta(history, in.samples);
  std::size_t last = 0;
  std::vector<prompts::ScoredInstruction> sorted = history;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  for (const auto& h : sorted) {
    const auto pos = meta.find(h.instruction);
    c.expect(pos != std::string::npos && pos >= last, "OPRO history not ascending at '" + h.instruction + "'");
    last = pos;
  }
}

void ac10(Check& c) {
  const std::vector<std::string> presets{"no-initial-icl", "no-explanations", "no-checkpointing", "few-shot-only"};
  ticl::testing::ScratchDir dir("acc-presets");
  const auto root = demo_copy(dir.path(), "demo");
  std::set<std::string> outputs_seen, hashes;
  for (const auto& p : presets) {
    std::ostringstream sink;
    cli::cmd_run(run_args(root, p), sink);
    const auto run_dir = root / "out/runs" / ("ticl-" + p);
    const auto manifest = nlohmann::json::parse(slurp(run_dir / "manifest.json"));
    c.expect(manifest["label"] == "ticl-" + p, p + ": manifest label");
    c.expect(manifest["preset"] == p, p + ": manifest preset");
    c.expect(manifest["authors"][0]["complete"] == true, p + ": run incomplete");
    outputs_seen.insert(slurp(run_dir / "outputs.jsonl"));
    hashes.insert(manifest["config_hash"].get<std::string>());
  }
  c.expect(outputs_seen.size() == presets.size(), "preset outputs are not distinct");
  c.expect(hashes.size() == presets.size(), "preset config hashes are not distinct");

  auto split = ticl::testing::make_split("a", 5, 2);
  engine::TiclConfig base;
  base.epochs = 2;
  base.rng_seed = 4;
  const auto& templates = prompts::TemplateSet::defaults();

  ScriptedProvider zs(ticl::testing::loop_script());
  engine::run(split, engine::apply_preset(base, "no-initial-icl"), {&zs, &zs, &zs});
  const auto log = zs.log();
  int epoch0 = 0;
  for (const auto& r : log) {
    if (r.tag != "explore" || epoch0 == 5) continue;
    bool is_zero_shot = false;
    for (const auto& s : split.train) is_zero_shot |= r.prompt == prompts::render_zero_shot(s.task, templates);
    c.expect(is_zero_shot, "no-initial-icl: epoch-0 explore prompt is not zero-shot");
    ++epoch0;
  }
  c.expect(epoch0 == 5, "no-initial-icl: expected 5 epoch-0 explore calls");

  ScriptedProvider ne(ticl::testing::loop_script());
  engine::run(split, engine::apply_preset(base, "no-explanations"), {&ne, &ne, &ne});
  bool blocks = false;
  for (const auto& r : ne.log()) {
    if (r.tag != "explore" && r.tag != "validate") continue;
    blocks |= r.prompt.find("## Stylistically Inconsistent Writing") != std::string::npos;
    c.expect(r.prompt.find("Inconsistent stylistic elements") == std::string::npos,
             "no-explanations: explanation header present");
    c.expect(r.prompt.find("Use shorter sentences.") == std::string::npos,
             "no-explanations: explanation text present");
  }
  c.expect(blocks, "no-explanations: attempts missing altogether");
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"AC1 plan arithmetic", ac1},       {"AC2 loop trace", ac2},
      {"AC3 determinism and resume", ac3}, {"AC4 Flesch reading ease", ac4},
      {"AC5 Fightin' Words", ac5},         {"AC6 TF-IDF similarity", ac6},
      {"AC7 judge de-biasing", ac7},       {"AC8 statistics", ac8},
      {"AC9 template fidelity", ac9},      {"AC10 ablation presets", ac10},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    std::cout << (c.failures.empty() ? "[PASS] " : "[FAIL] ") << name << "\n";
    for (const auto& f : c.failures) std::cout << "       " << f << "\n";
    failed += !c.failures.empty();
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
