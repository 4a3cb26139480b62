#pragma once

// Loading the programs shipped in bench/ and building small random systems.

#include "qtp/engine.hpp"
#include "qtp/formats.hpp"
#include "qtp/frontend.hpp"
#include "support.hpp"

#include <filesystem>
#include <string>

#ifndef QTP_BENCH_DIR
#error "QTP_BENCH_DIR must point at the bench directory"
#endif

namespace qtp::testing {

inline std::string bench_path(const std::string& file) { return std::string(QTP_BENCH_DIR) + "/" + file; }

inline EquationSystem load_bench(const std::string& name) {
  const Program prog = parse(read_file(bench_path(name + ".prog")));
  const TemplateFile tf = load_templates(bench_path(name + ".templates.json"));
  EquationSystem sys = lower(prog, tf.basis, tf.vars);
  if (std::filesystem::exists(bench_path(name + ".bounds.json")))
    apply_bounds(sys, load_bounds(bench_path(name + ".bounds.json")));
  return sys;
}

inline EngineConfig bench_config(const EquationSystem& sys, const std::string& name, Method method) {
  EngineConfig cfg;
  cfg.method = method;
  if (std::filesystem::exists(bench_path(name + ".pi0.json"))) {
    cfg.initial.kind = InitialPolicyConfig::Kind::from_file;
    cfg.initial.policy = load_policy(bench_path(name + ".pi0.json"), sys);
  }
  return cfg;
}

inline int template_index(const EquationSystem& sys, const std::string& name) {
  for (int p = 0; p < sys.template_count(); ++p)
    if (sys.templates[p].name == name) return p;
  return -1;
}

inline int first_join(const EquationSystem& sys) {
  for (int i = 0; i < sys.size(); ++i)
    if (sys.coords[i].kind == CoordKind::join) return i;
  return -1;
}

struct RandomSystemShape {
  int max_dim = 3;
  int max_templates = 4;
  bool linear_only = false;
  bool allow_quadratic_maps = true;
  bool allow_guards = true;
  bool allow_loop = true;
};

// const -> (test | assign) ... with an optional loop through a join.
inline EquationSystem random_system(Rng& rng, const RandomSystemShape& shape = {}) {
  EquationSystem sys;
  const int d = rng.integer(1, shape.max_dim);
  sys.dim = d;
  for (int k = 0; k < d; ++k) sys.vars.push_back("x" + std::to_string(k + 1));
  const int m = rng.integer(1, shape.max_templates);
  bool all_linear = true;
  for (int p = 0; p < m; ++p) {
    QuadraticForm f;
    if (shape.linear_only || rng.uniform(0, 1) < 0.5) {
      f = QuadraticForm::linear(rng.vector(d));
    } else {
      const Matrix r = rng.matrix(d, d);
      f = QuadraticForm(r * r.transpose() + 0.1 * Matrix::Identity(d, d), rng.vector(d, -0.3, 0.3));
      all_linear = false;
    }
    sys.templates.push_back({"p" + std::to_string(p + 1), f});
  }
  Box box(d);
  for (auto& [lo, hi] : box) {
    lo = rng.uniform(-1.0, 0.0);
    hi = lo + rng.uniform(0.5, 2.0);
  }
  sys.coords.push_back(Coordinate::constant(init_from_box(box, sys.templates), "1"));

  auto random_map = [&]() -> Transfer {
    if (shape.allow_quadratic_maps && all_linear && rng.uniform(0, 1) < 0.3) {
      std::vector<QuadraticForm> rows;
      for (int k = 0; k < d; ++k) rows.push_back(QuadraticForm(rng.symmetric(d, -0.5, 0.5), rng.vector(d), 0.1));
      return QuadraticMap(rows);
    }
    return AffineMap(rng.matrix(d, d, -0.8, 0.8), rng.vector(d, -0.2, 0.2));
  };
  auto random_guard = [&]() {
    if (!shape.linear_only && rng.uniform(0, 1) < 0.4) {
      Vector c = rng.vector(d, -0.5, 0.5);
      return QuadraticForm(Matrix::Identity(d, d), -2.0 * c, c.squaredNorm() - rng.uniform(0.2, 1.0));
    }
    return QuadraticForm::linear(rng.vector(d), rng.uniform(-0.3, 0.1));
  };

  const bool loop = shape.allow_loop && rng.uniform(0, 1) < 0.5;
  int head = 0;
  if (loop) {
    sys.coords.push_back(Coordinate::join(0, -1, "2"));
    head = 1;
  }
  int cur = head;
  const int body = rng.integer(1, 2);
  for (int s = 0; s < body; ++s) {
    const std::string label = std::to_string(sys.size() + 1);
    if (shape.allow_guards && rng.uniform(0, 1) < 0.4)
      sys.coords.push_back(Coordinate::test(cur, random_guard(), Sense::then_branch, random_map(), label));
    else
      sys.coords.push_back(Coordinate::assign(cur, random_map(), label));
    cur = sys.size() - 1;
  }
  if (loop) sys.coords[head].right = cur;
  return sys;
}

// F^pi(v) entry by entry for assignments and tests; +inf where the entry is
// missing or its policy value is unbounded.
inline AbstractValue policy_image(const EquationSystem& sys, const Policy& pi, const AbstractValue& v) {
  AbstractValue out(sys.size());
  for (int i = 0; i < sys.size(); ++i) {
    const Coordinate& c = sys.coords[i];
    if (c.kind == CoordKind::constant) {
      out[i] = normalize(c.bounds);
      continue;
    }
    if (c.kind == CoordKind::join) {
      out[i] = join(normalize(v[c.left]), normalize(v[c.right]));
      continue;
    }
    out[i].assign(sys.template_count(), inf);
    for (int p = 0; p < sys.template_count(); ++p) {
      const PolicyEntry& e = pi.entries[i][p];
      if (!e.valid) continue;
      const double val = entry_policy_value(sys, i, p, e);
      if (!std::isfinite(val)) continue;
      double total = val;
      for (int q = 0; q < sys.template_count(); ++q) total += scaled_bound(e.lambda[q], v[c.prev][q]);
      out[i][p] = total;
    }
  }
  return out;
}

// A value with finite rows of moderate size on every coordinate.
inline AbstractValue random_value(Rng& rng, const EquationSystem& sys) {
  AbstractValue v;
  const Row base = sys.coords[0].bounds;
  for (int i = 0; i < sys.size(); ++i) {
    Row r = base;
    for (double& b : r) b += rng.uniform(0.0, 1.0);
    v.push_back(r);
  }
  return v;
}

} // namespace qtp::testing
