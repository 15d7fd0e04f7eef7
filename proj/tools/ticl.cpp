// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "ticl/cli.hpp"
#include "ticl/errors.hpp"

namespace {

void add_common(CLI::App* cmd, ticl::cli::CommonArgs& args, std::string& output, std::string& authors,
                std::string& templates, std::uint64_t& seed) {
  cmd->add_option("--config", args.config, "JSON config file")->required();
  cmd->add_option("--output", output, "output directory (overrides output_dir)");
  cmd->add_option("--authors", authors, "comma-separated author ids");
  cmd->add_option("--seed", seed, "global seed (overrides the config)");
  cmd->add_option("--templates", templates, "directory of template overrides");
}

void finish_common(CLI::App* cmd, ticl::cli::CommonArgs& args, const std::string& output, const std::string& authors,
                   const std::string& templates, std::uint64_t seed) {
  if (!output.empty()) args.output = output;
  if (!templates.empty()) args.templates = templates;
  if (cmd->count("--seed")) args.seed = seed;
  std::string item;
  for (char c : authors + ",") {
    if (c == ',') {
      if (!item.empty()) args.authors.push_back(item);
      item.clear();
    } else if (c != ' ') {
      item += c;
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trial-error-explain in-context learning for personalized writing"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  std::string output, authors, templates;
  std::uint64_t seed = 0;

  ticl::cli::CommonArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "validate and index corpora");
  add_common(c_ingest, ingest, output, authors, templates, seed);

  ticl::cli::RunArgs run;
  auto* c_run = app.add_subcommand("run", "run TICL or a baseline for each author");
  add_common(c_run, run.common, output, authors, templates, seed);
  c_run->add_option("--method", run.method, "ticl | zero_shot | few_shot | cot | opro")->capture_default_str();
  run.preset.clear();
  c_run->add_option("--preset", run.preset,
                    "full | no-initial-icl | no-explanations | no-checkpointing | few-shot-only");
  c_run->add_flag("--resume", run.resume, "continue from saved state");
  long stop_after = -1;
  c_run->add_option("--stop-after-step", stop_after, "stop once this many steps are complete")->group("");

  ticl::cli::EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "pairwise judging of output files");
  add_common(c_eval, eval.common, output, authors, templates, seed);
  c_eval->add_option("--mode", eval.mode, "vs_author | vs_candidate")->capture_default_str();
  c_eval->add_option("--ours", eval.ours, "outputs JSON-lines (left side)")->required();
  c_eval->add_option("--theirs", eval.theirs, "outputs JSON-lines (right side, vs_candidate)");
  c_eval->add_option("--label", eval.label, "report label");

  ticl::cli::BenchmarkArgs bench;
  std::string strategy;
  auto* c_bench = app.add_subcommand("benchmark-judge", "judge accuracy against distractor texts");
  add_common(c_bench, bench.common, output, authors, templates, seed);
  c_bench->add_option("--strategy", strategy, "tfidf | same_prompt");

  ticl::cli::AnalyzeArgs analyze;
  auto* c_analyze = app.add_subcommand("analyze", "Fightin' Words and readability over two output sets");
  add_common(c_analyze, analyze.common, output, authors, templates, seed);
  c_analyze->add_option("--a", analyze.a, "first outputs file")->required();
  c_analyze->add_option("--b", analyze.b, "second outputs file")->required();
  c_analyze->add_option("--label", analyze.label, "report label");

  ticl::cli::ReportArgs report;
  auto* c_report = app.add_subcommand("report", "tables from stored artifacts");
  c_report->add_option("--input", report.input, "directory of run artifacts and reports")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  spdlog::set_default_logger(spdlog::default_logger());
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (c_ingest->parsed()) {
      finish_common(c_ingest, ingest, output, authors, templates, seed);
      ticl::cli::cmd_ingest(ingest, std::cout);
    } else if (c_run->parsed()) {
      finish_common(c_run, run.common, output, authors, templates, seed);
      if (stop_after >= 0) run.stop_after_step = stop_after;
      ticl::cli::cmd_run(run, std::cout);
    } else if (c_eval->parsed()) {
      finish_common(c_eval, eval.common, output, authors, templates, seed);
      ticl::cli::cmd_evaluate(eval, std::cout);
    } else if (c_bench->parsed()) {
      finish_common(c_bench, bench.common, output, authors, templates, seed);
      if (!strategy.empty()) bench.strategy = strategy;
      ticl::cli::cmd_benchmark_judge(bench, std::cout);
    } else if (c_analyze->parsed()) {
      finish_common(c_analyze, analyze.common, output, authors, templates, seed);
      ticl::cli::cmd_analyze(analyze, std::cout);
    } else if (c_report->parsed()) {
      ticl::cli::cmd_report(report, std::cout);
    }
  } catch (const ticl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ticl::cli::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
