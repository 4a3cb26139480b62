#include "commands.hpp"

#include "qtp/errors.hpp"
#include "qtp/frontend.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace qtp::cli {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

json bound_json(double v) {
  if (v == plus_inf) return "inf";
  if (v == minus_inf) return "-inf";
  return v;
}

double bound_from_json(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return parse_bound_text(v.get<std::string>());
  throw format_error("report: bad bound " + v.dump());
}

int loop_count(const EquationSystem& sys) {
  int loops = 0;
  for (const auto& c : sys.coords) loops += c.kind == CoordKind::join;
  return loops;
}

void print_value(std::ostream& os, const EquationSystem& sys, const AbstractValue& v) {
  for (int i = 0; i < sys.size(); ++i) {
    os << "[" << sys.coords[i].label << "] " << to_string(sys.coords[i].kind);
    if (is_empty(v[i])) {
      os << ": unreachable\n";
      continue;
    }
    os << "\n";
    std::istringstream lines(format_row(v[i], sys.templates));
    for (std::string line; std::getline(lines, line);) os << "  " << line << "\n";
  }
}

std::string fmt(double v, const char* spec = "%.6g") {
  if (v == plus_inf) return "+inf";
  if (v == minus_inf) return "-inf";
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

} // namespace

std::string status_name(RunStatus s) {
  switch (s) {
  case RunStatus::fixpoint: return "Fixpoint";
  case RunStatus::postfixpoint: return "Postfixpoint";
  case RunStatus::slater_stop: return "Postfixpoint (slater-stop)";
  case RunStatus::not_converged: return "NotConverged";
  }
  return "?";
}

int exit_code(RunStatus s) { return s == RunStatus::not_converged ? 2 : 0; }

Prepared prepare(const AnalyzeOptions& o) {
  Prepared p;
  auto t = Clock::now();
  const Program prog = parse(read_file(o.program));
  p.parse_seconds = since(t);
  const TemplateFile tf = load_templates(o.templates);
  t = Clock::now();
  p.sys = lower(prog, tf.basis, tf.vars);
  p.lower_seconds = since(t);
  if (p.sys.size() == 0) throw lowering_error("program has no control points");
  if (!o.bounds.empty()) apply_bounds(p.sys, load_bounds(o.bounds));
  return p;
}

EngineConfig engine_config(const AnalyzeOptions& o, const EquationSystem& sys) {
  EngineConfig cfg;
  if (o.method == "policy") cfg.method = Method::policy;
  else if (o.method == "kleene") cfg.method = Method::kleene;
  else throw error("unknown method '" + o.method + "'");
  if (o.max_iters < 0) throw error("--max-iters must be non-negative");
  cfg.max_iters = o.max_iters;
  if (o.accel != "on" && o.accel != "off") throw error("--accel takes on or off");
  cfg.accel.enabled = o.accel == "on";
  cfg.accel.start = o.accel_start;
  cfg.accel.length = o.accel_length;
  cfg.eps_margin = o.eps;
  cfg.tol = {o.tol, o.tol};
  cfg.relax.threads = o.threads;
  cfg.relax.dump_dir = o.dump_sdp;
  using Kind = InitialPolicyConfig::Kind;
  if (o.initial_policy == "guards") {
    cfg.initial.kind = Kind::from_guards;
  } else if (o.initial_policy.rfind("warmup:", 0) == 0) {
    cfg.initial.kind = Kind::from_kleene_warmup;
    try {
      cfg.initial.warmup = std::stoi(o.initial_policy.substr(7));
    } catch (const std::exception&) {
      throw error("bad warm-up count in '" + o.initial_policy + "'");
    }
  } else {
    cfg.initial.kind = Kind::from_file;
    cfg.initial.policy = load_policy(o.initial_policy, sys);
  }
  return cfg;
}

json make_report(const AnalyzeOptions& o, const Prepared& prep, const IterationTrace& t, double total_seconds) {
  const EquationSystem& sys = prep.sys;
  json r;
  r["format"] = file_format_version;
  r["program"] = fs::path(o.program).stem().string();
  r["source"] = o.program;
  r["method"] = o.method;
  r["templates"] = sys.template_count();
  r["coordinates"] = sys.size();
  r["dim"] = sys.dim;
  r["loops"] = loop_count(sys);
  r["iterations"] = t.iterations;
  r["status"] = status_name(t.status);
  r["vars"] = sys.vars;
  json names = json::array();
  for (const auto& tm : sys.templates) names.push_back(tm.name);
  r["template_names"] = names;
  json bounds = json::array();
  for (int i = 0; i < sys.size(); ++i) {
    json row = json::object();
    for (int p = 0; p < sys.template_count(); ++p) row[sys.templates[p].name] = bound_json(t.result[i][p]);
    bounds.push_back({{"coord", i + 1}, {"label", sys.coords[i].label}, {"kind", to_string(sys.coords[i].kind)},
                      {"values", row}});
  }
  r["bounds"] = bounds;
  json trace = json::array();
  for (size_t k = 0; k < t.steps.size(); ++k)
    trace.push_back({{"step", k}, {"seconds", t.steps[k].seconds}, {"flags", t.steps[k].flags}});
  r["trace"] = trace;
  r["timing"] = {{"parse", prep.parse_seconds},   {"lower", prep.lower_seconds},
                 {"relax", t.phases.relax},       {"lp", t.phases.lp},
                 {"closure", t.phases.closure},   {"slater", t.phases.slater},
                 {"analysis", t.seconds},         {"total", total_seconds}};
  r["config"] = {{"max_iters", o.max_iters},
                 {"accel", o.accel},
                 {"accel_start", o.accel_start},
                 {"accel_length", o.accel_length},
                 {"initial_policy", o.initial_policy},
                 {"eps", o.eps},
                 {"tol", o.tol},
                 {"threads", o.threads},
                 {"templates_file", o.templates},
                 {"bounds_file", o.bounds}};
  r["notes"] = sys.notes;
  r["warnings"] = t.warnings;
  if (t.final_policy) r["final_policy"] = json::parse(policy_to_json(*t.final_policy, sys));
  return r;
}

int run_analyze(const AnalyzeOptions& o) {
  const auto t0 = Clock::now();
  const Prepared prep = prepare(o);
  const EngineConfig cfg = engine_config(o, prep.sys);
  const IterationTrace t = analyze(prep.sys, cfg);
  const double total = since(t0);
  const EquationSystem& sys = prep.sys;

  if (!o.quiet) {
    std::cout << "program  " << o.program << "\n"
              << "method   " << o.method;
    if (cfg.method == Method::policy) std::cout << " (initial policy: " << o.initial_policy << ")";
    if (cfg.method == Method::kleene) std::cout << " (acceleration " << o.accel << ")";
    std::cout << "\n"
              << "size     |P| = " << sys.template_count() << ", n = " << sys.size() << ", d = " << sys.dim << "\n"
              << "status   " << status_name(t.status) << " after " << t.iterations << " iteration"
              << (t.iterations == 1 ? "" : "s") << " (" << fmt(t.seconds, "%.3f") << " s)\n";
    for (const auto& n : sys.notes) std::cout << "note     " << n << "\n";
    for (const auto& w : t.warnings) std::cout << "warning  " << w << "\n";
    std::cout << "\n";
    print_value(std::cout, sys, t.result);
  }
  if (!o.report.empty()) write_file(o.report, make_report(o, prep, t, total).dump(2) + "\n");
  if (!o.levelsets.empty()) {
    int coord = o.levelset_coord - 1;
    if (o.levelset_coord <= 0) {
      coord = sys.size() - 1;
      for (int i = 0; i < sys.size(); ++i)
        if (sys.coords[i].kind == CoordKind::join) {
          coord = i;
          break;
        }
    }
    if (coord < 0 || coord >= sys.size()) throw error("--levelset-coord out of range");
    const Row& row = t.result[coord];
    if (is_empty(row)) throw error("control point " + std::to_string(coord + 1) + " is unreachable");
    Box box = bounding_box(row, sys.templates);
    for (auto& [lo, hi] : box) {
      if (!std::isfinite(lo) || !std::isfinite(hi)) throw error("level-set region is unbounded");
      const double pad = 0.05 * std::max(1e-9, hi - lo);
      lo -= pad;
      hi += pad;
    }
    write_file(o.levelsets, level_sets_csv(row, sys.templates, sys.vars, box, o.grid));
  }
  return exit_code(t.status);
}

// ---------------------------------------------------------------------------

namespace {

struct BenchRun {
  std::string name;
  std::string display;
  AnalyzeOptions opts;
  int expected_iterations = -1;
  std::string expected_status;
  bool slow = false;
};

std::string status_class(const std::string& s) {
  std::string l;
  for (char c : s) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (l.rfind("fixpoint", 0) == 0) return "fixpoint";
  if (l.rfind("postfixpoint", 0) == 0) return "postfixpoint";
  return l;
}

AnalyzeOptions default_run(const fs::path& dir, const std::string& name) {
  AnalyzeOptions a;
  a.program = (dir / (name + ".prog")).string();
  a.templates = (dir / (name + ".templates.json")).string();
  if (fs::exists(dir / (name + ".bounds.json"))) a.bounds = (dir / (name + ".bounds.json")).string();
  if (fs::exists(dir / (name + ".pi0.json"))) a.initial_policy = (dir / (name + ".pi0.json")).string();
  a.quiet = true;
  return a;
}

std::vector<BenchRun> bench_runs(const fs::path& dir) {
  std::vector<BenchRun> runs;
  const fs::path expected = dir / "expected.json";
  if (fs::exists(expected)) {
    json j;
    try {
      j = json::parse(read_file(expected.string()));
    } catch (const json::parse_error& e) {
      throw format_error("expected.json: " + std::string(e.what()));
    }
    if (!j.contains("programs") || !j["programs"].is_array()) throw format_error("expected.json: missing \"programs\"");
    for (const auto& p : j["programs"]) {
      const std::string name = p.at("name").get<std::string>();
      for (const auto& r : p.at("runs")) {
        BenchRun b;
        b.name = name;
        b.display = p.value("display", name);
        b.opts = default_run(dir, name);
        b.opts.method = r.value("method", "policy");
        b.opts.max_iters = r.value("max_iters", 50);
        b.opts.accel = r.value("accel", false) ? "on" : "off";
        if (r.contains("initial_policy")) {
          const std::string ip = r["initial_policy"].get<std::string>();
          b.opts.initial_policy = ip == "pi0" ? (dir / (name + ".pi0.json")).string() : ip;
        }
        b.expected_iterations = r.value("iterations", -1);
        b.expected_status = r.value("status", "");
        b.slow = r.value("slow", false);
        runs.push_back(std::move(b));
      }
    }
    return runs;
  }
  std::vector<std::string> names;
  if (fs::is_directory(dir))
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".prog") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  for (const auto& n : names) {
    BenchRun b;
    b.name = b.display = n;
    b.opts = default_run(dir, n);
    runs.push_back(std::move(b));
  }
  return runs;
}

} // namespace

int run_bench(const BenchOptions& o) {
  if (!fs::is_directory(o.dir)) throw error("not a directory: " + o.dir);
  const std::vector<BenchRun> runs = bench_runs(o.dir);
  json rows = json::array();
  bool failed = false;
  std::printf("%-15s %-7s %3s %3s %3s %5s %6s %6s  %-27s %-13s %9s\n", "Program", "Method", "#P", "n", "d", "loops",
              "#Iter", "expect", "Status", "expected", "Time (s)");
  for (const auto& b : runs) {
    if (!o.only.empty() && std::find(o.only.begin(), o.only.end(), b.name) == o.only.end()) continue;
    if (o.skip_slow && b.slow) continue;
    json row;
    row["program"] = b.display;
    row["method"] = b.opts.method;
    AnalyzeOptions a = b.opts;
    a.threads = o.threads;
    const auto t0 = Clock::now();
    try {
      const Prepared prep = prepare(a);
      const IterationTrace t = analyze(prep.sys, engine_config(a, prep.sys));
      const double secs = since(t0);
      const std::string status = status_name(t.status);
      const bool dev_iter = b.expected_iterations >= 0 && b.expected_iterations != t.iterations;
      const bool dev_status = !b.expected_status.empty() && status_class(b.expected_status) != status_class(status);
      row["templates"] = prep.sys.template_count();
      row["coordinates"] = prep.sys.size();
      row["dim"] = prep.sys.dim;
      row["loops"] = loop_count(prep.sys);
      row["iterations"] = t.iterations;
      row["expected_iterations"] = b.expected_iterations;
      row["status"] = status;
      row["expected_status"] = b.expected_status;
      row["seconds"] = secs;
      row["deviation"] = dev_iter || dev_status;
      std::printf("%-15s %-7s %3d %3d %3d %5d %6d %5s%s  %-27s %-12s%s %9.2f\n", b.display.c_str(),
                  b.opts.method.c_str(), prep.sys.template_count(), prep.sys.size(), prep.sys.dim,
                  loop_count(prep.sys), t.iterations,
                  b.expected_iterations >= 0 ? std::to_string(b.expected_iterations).c_str() : "-",
                  dev_iter ? "*" : " ", status.c_str(), b.expected_status.empty() ? "-" : b.expected_status.c_str(),
                  dev_status ? "*" : " ", secs);
    } catch (const std::exception& e) {
      failed = true;
      row["error"] = e.what();
      std::printf("%-15s %-7s failed: %s\n", b.display.c_str(), b.opts.method.c_str(), e.what());
    }
    std::fflush(stdout);
    rows.push_back(row);
  }
  std::printf("(* marks a deviation from the recorded value)\n");
  if (!o.json_out.empty()) write_file(o.json_out, json{{"format", file_format_version}, {"rows", rows}}.dump(2) + "\n");
  return failed ? 1 : 0;
}

// ---------------------------------------------------------------------------

int run_oracle(const OracleOptionsCli& o) {
  const Prepared prep = prepare(o.analysis);
  const EquationSystem& sys = prep.sys;
  AbstractValue v;
  if (o.value_report.empty()) {
    v = analyze(sys, engine_config(o.analysis, sys)).result;
  } else {
    const json r = json::parse(read_file(o.value_report));
    if (!r.contains("bounds") || static_cast<int>(r["bounds"].size()) != sys.size())
      throw format_error("report does not match the program's control points");
    for (const auto& row : r["bounds"]) {
      Row out(sys.template_count());
      for (int p = 0; p < sys.template_count(); ++p)
        out[p] = bound_from_json(row.at("values").at(sys.templates[p].name));
      v.push_back(out);
    }
  }
  OracleOptions oo;
  oo.grid = o.grid;
  oo.rays = o.rays;
  oo.max_points = o.max_points;
  const OracleResult orc = oracle(sys, v, oo);
  const AbstractValue fr = evaluate_relaxed(sys, v, {}).value;
  for (const auto& w : orc.warnings) std::cerr << "warning: " << w << "\n";
  std::printf("sampling: %s\n", orc.grid.c_str());
  std::printf("%-6s %-12s %14s %14s %12s\n", "coord", "template", "oracle", "relaxed", "margin");
  int violations = 0;
  for (int i = 0; i < sys.size(); ++i)
    for (int p = 0; p < sys.template_count(); ++p) {
      const double a = orc.value[i][p], b = fr[i][p];
      const bool bad = a > b + o.tolerance;
      violations += bad;
      const double margin = (std::isfinite(a) && std::isfinite(b)) ? b - a : plus_inf;
      std::printf("%-6d %-12s %14s %14s %12s%s\n", i + 1, sys.templates[p].name.c_str(), fmt(a).c_str(),
                  fmt(b).c_str(), fmt(margin, "%.3g").c_str(), bad ? "  VIOLATION" : "");
    }
  std::printf("%s: %d violation%s\n", violations ? "unsound" : "sound", violations, violations == 1 ? "" : "s");
  return violations ? 1 : 0;
}

} // namespace qtp::cli
