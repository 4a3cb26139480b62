#pragma once

#include "qtp/engine.hpp"
#include "qtp/formats.hpp"
#include "qtp/oracle.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace qtp::cli {

using json = nlohmann::ordered_json;

struct AnalyzeOptions {
  std::string program;
  std::string templates;
  std::string method = "policy";
  int max_iters = 50;
  std::string accel = "off";
  int accel_start = -1;
  int accel_length = 11;
  std::string initial_policy = "guards";
  double eps = 1e-9;
  double tol = 1e-6;
  std::string bounds;
  std::string report;
  std::string levelsets;
  int levelset_coord = 0; // 1-based; 0 picks the first loop head
  int grid = 61;
  int threads = 1;
  std::string dump_sdp;
  bool quiet = false;
};

struct Prepared {
  EquationSystem sys;
  double parse_seconds = 0.0;
  double lower_seconds = 0.0;
};

Prepared prepare(const AnalyzeOptions& o);
EngineConfig engine_config(const AnalyzeOptions& o, const EquationSystem& sys);
json make_report(const AnalyzeOptions& o, const Prepared& prep, const IterationTrace& t, double total_seconds);
std::string status_name(RunStatus s);
int exit_code(RunStatus s);

int run_analyze(const AnalyzeOptions& o);

struct BenchOptions {
  std::string dir;
  std::string json_out;
  std::vector<std::string> only;
  int threads = 1;
  bool skip_slow = false;
};

int run_bench(const BenchOptions& o);

struct OracleOptionsCli {
  AnalyzeOptions analysis;
  std::string value_report; // report whose bounds are checked; empty runs the analysis
  int grid = 41;
  int rays = 2000;
  int max_points = 20000;
  double tolerance = 1e-5;
};

int run_oracle(const OracleOptionsCli& o);

} // namespace qtp::cli
