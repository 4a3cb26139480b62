#include "commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

void analysis_flags(CLI::App* cmd, qtp::cli::AnalyzeOptions& a) {
  cmd->add_option("program", a.program, "Program source")->required()->check(CLI::ExistingFile);
  cmd->add_option("--templates", a.templates, "Template basis (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--method", a.method, "Fixpoint method")->check(CLI::IsMember({"kleene", "policy"}));
  cmd->add_option("--max-iters", a.max_iters, "Iteration limit");
  cmd->add_option("--accel", a.accel, "Kleene acceleration")->check(CLI::IsMember({"on", "off"}));
  cmd->add_option("--accel-start", a.accel_start, "First accelerated iteration (default n+1)");
  cmd->add_option("--accel-length", a.accel_length, "Length of the acceleration window");
  cmd->add_option("--initial-policy", a.initial_policy, "Policy file, 'guards' or 'warmup:K'");
  cmd->add_option("--eps", a.eps, "Margin added in the policy fixpoint LP");
  cmd->add_option("--tol", a.tol, "Absolute and relative comparison tolerance");
  cmd->add_option("--bounds", a.bounds, "Bounds for constant control points (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--threads", a.threads, "Worker threads for the relaxation");
  cmd->add_option("--dump-sdp", a.dump_sdp, "Directory receiving every SDP solved");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadratic template static analyzer"};
  app.require_subcommand(1);

  qtp::cli::AnalyzeOptions an;
  CLI::App* analyze = app.add_subcommand("analyze", "Compute an invariant for a program");
  analysis_flags(analyze, an);
  analyze->add_option("--report", an.report, "Write a JSON report");
  analyze->add_option("--emit-levelsets", an.levelsets, "Write sub-level set samples as CSV");
  analyze->add_option("--levelset-coord", an.levelset_coord, "Control point for --emit-levelsets (1-based)");
  analyze->add_option("--grid", an.grid, "Grid points per axis for --emit-levelsets");
  analyze->add_flag("--quiet", an.quiet, "Suppress the text summary");

  qtp::cli::BenchOptions bo;
  CLI::App* bench = app.add_subcommand("bench", "Run a benchmark suite directory");
  bench->add_option("dir", bo.dir, "Suite directory")->required();
  bench->add_option("--json", bo.json_out, "Write the table as JSON");
  bench->add_option("--only", bo.only, "Restrict to these programs");
  bench->add_option("--threads", bo.threads, "Worker threads for the relaxation");
  bench->add_flag("--skip-slow", bo.skip_slow, "Skip runs marked slow");

  qtp::cli::OracleOptionsCli oo;
  CLI::App* orc = app.add_subcommand("oracle", "Check relaxed bounds against sampled exact ones");
  analysis_flags(orc, oo.analysis);
  orc->add_option("--value", oo.value_report, "Report whose bounds are checked (default: run the analysis)")
      ->check(CLI::ExistingFile);
  orc->add_option("--grid", oo.grid, "Grid points per axis");
  orc->add_option("--rays", oo.rays, "Boundary rays per control point");
  orc->add_option("--max-points", oo.max_points, "Sample budget per control point");
  orc->add_option("--tolerance", oo.tolerance, "Allowed excess of the oracle over the relaxed bound");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*analyze) return qtp::cli::run_analyze(an);
    if (*bench) return qtp::cli::run_bench(bo);
    if (*orc) return qtp::cli::run_oracle(oo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
