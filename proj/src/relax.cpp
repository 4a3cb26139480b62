#include "qtp/relax.hpp"

#include "qtp/errors.hpp"
#include "qtp/parallel.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

namespace qtp {

Policy Policy::empty_for(const EquationSystem& sys) {
  Policy p;
  p.entries.resize(sys.size());
  for (int i = 0; i < sys.size(); ++i) {
    const CoordKind k = sys.coords[i].kind;
    if (k == CoordKind::assign || k == CoordKind::test)
      p.entries[i].assign(sys.template_count(), PolicyEntry{Vector::Zero(sys.template_count()), 0.0, false});
  }
  return p;
}

bool operator==(const PolicyEntry& a, const PolicyEntry& b) {
  return a.valid == b.valid && a.mu == b.mu && a.lambda.size() == b.lambda.size() && a.lambda == b.lambda;
}

namespace {

bool has_policy(const Coordinate& c) { return c.kind == CoordKind::assign || c.kind == CoordKind::test; }

void dump_problem(const RelaxOptions& opts, int coord, const std::string& tmpl, const SdpProblem& p) {
  namespace fs = std::filesystem;
  fs::create_directories(opts.dump_dir);
  const fs::path file = fs::path(opts.dump_dir) / ("iter" + std::to_string(opts.dump_iteration) + "_c" +
                                                   std::to_string(coord + 1) + "_" + tmpl + ".sdp");
  std::ofstream os(file);
  if (!os) throw error("cannot write " + file.string());
  dump_sdp(os, p);
}

} // namespace

RelaxResult evaluate_relaxed(const EquationSystem& sys, const AbstractValue& v, const RelaxOptions& opts) {
  const int n = sys.size();
  const int m = sys.template_count();
  if (static_cast<int>(v.size()) != n) throw dimension_error("evaluate_relaxed: value has wrong coordinate count");
  RelaxResult res;
  res.value.assign(n, bottom_row(m));
  res.policy = Policy::empty_for(sys);

  struct Job {
    int coord;
    int tmpl;
  };
  std::vector<Job> jobs;
  std::vector<Row> preds(n);
  for (int i = 0; i < n; ++i) {
    const Coordinate& c = sys.coords[i];
    switch (c.kind) {
    case CoordKind::constant: res.value[i] = normalize(c.bounds); break;
    case CoordKind::join: res.value[i] = join(normalize(v[c.left]), normalize(v[c.right])); break;
    case CoordKind::assign:
    case CoordKind::test:
      preds[i] = normalize(v[c.prev]);
      if (is_empty(preds[i])) break;
      for (int p = 0; p < m; ++p) jobs.push_back({i, p});
      break;
    }
  }

  parallel_for(static_cast<int>(jobs.size()), opts.threads, [&](int j) {
    const auto [i, p] = jobs[j];
    const Coordinate& c = sys.coords[i];
    const Row& pred = preds[i];
    std::vector<ShorConstraint> cons;
    std::vector<int> index;
    for (int q = 0; q < m; ++q)
      if (std::isfinite(pred[q])) {
        cons.push_back({sys.templates[q].form, pred[q]});
        index.push_back(q);
      }
    std::optional<QuadraticForm> guard;
    if (c.kind == CoordKind::test) guard = c.guard;
    const QuadraticForm obj = compose(sys.templates[p].form, c.map);
    if (!opts.dump_dir.empty()) dump_problem(opts, i, sys.templates[p].name, shor_problem(obj, cons, guard));
    const ShorResult r = shor_maximize(obj, cons, guard, opts.sdp);
    res.value[i][p] = r.bound;
    PolicyEntry& e = res.policy.entries[i][p];
    if (r.status != SolveStatus::optimal || !std::isfinite(r.bound)) return;
    for (size_t k = 0; k < index.size(); ++k) e.lambda[index[k]] = r.multipliers[static_cast<int>(k)];
    e.mu = r.mu;
    e.valid = std::isfinite(entry_policy_value(sys, i, p, e));
  });
  return res;
}

double entry_policy_value(const EquationSystem& sys, int coord, int tmpl, const PolicyEntry& e) {
  const Coordinate& c = sys.coords[coord];
  if (!has_policy(c)) throw error("entry_policy_value: coordinate has no policy");
  const QuadraticForm obj = compose(sys.templates[tmpl].form, c.map);
  std::vector<WeightedConstraint> wc;
  for (int q = 0; q < sys.template_count(); ++q) wc.push_back({&sys.templates[q].form, e.lambda[q]});
  if (c.kind == CoordKind::test) wc.push_back({&c.guard, e.mu});
  return policy_value(obj, wc);
}

PolicyValues policy_values(const EquationSystem& sys, const Policy& policy) {
  PolicyValues out(sys.size());
  std::string bad;
  for (int i = 0; i < sys.size(); ++i) {
    if (!has_policy(sys.coords[i])) continue;
    out[i].assign(sys.template_count(), plus_inf);
    for (int p = 0; p < sys.template_count(); ++p) {
      const PolicyEntry& e = policy.entries[i][p];
      if (e.valid && e.lambda.minCoeff() >= 0.0 && e.mu >= 0.0) out[i][p] = entry_policy_value(sys, i, p, e);
      if (!std::isfinite(out[i][p]))
        bad += " (" + std::to_string(i + 1) + ", " + sys.templates[p].name + ")";
    }
  }
  if (!bad.empty()) throw inadmissible_policy_error("policy value is unbounded at" + bad);
  return out;
}

AbstractValue evaluate_policy_affine(const EquationSystem& sys, const Policy& policy, const AbstractValue& v,
                                     const PolicyValues& values) {
  const int n = sys.size();
  const int m = sys.template_count();
  AbstractValue out(n, bottom_row(m));
  for (int i = 0; i < n; ++i) {
    const Coordinate& c = sys.coords[i];
    switch (c.kind) {
    case CoordKind::constant: out[i] = normalize(c.bounds); break;
    case CoordKind::join: out[i] = join(normalize(v[c.left]), normalize(v[c.right])); break;
    case CoordKind::assign:
    case CoordKind::test: {
      const Row pred = normalize(v[c.prev]);
      if (is_empty(pred)) break;
      for (int p = 0; p < m; ++p) {
        const PolicyEntry& e = policy.entries[i][p];
        double s = values[i][p];
        for (int q = 0; q < m; ++q) s += scaled_bound(e.lambda[q], pred[q]);
        out[i][p] = s;
      }
      break;
    }
    }
  }
  return out;
}

AbstractValue evaluate_policy_affine(const EquationSystem& sys, const Policy& policy, const AbstractValue& v) {
  return evaluate_policy_affine(sys, policy, v, policy_values(sys, policy));
}

Policy extract_policy(const EquationSystem& sys, const Policy& fresh, const Policy& previous) {
  Policy out = previous;
  if (out.entries.size() != fresh.entries.size()) out = Policy::empty_for(sys);
  for (int i = 0; i < sys.size(); ++i)
    for (size_t p = 0; p < fresh.entries[i].size(); ++p) {
      const PolicyEntry& e = fresh.entries[i][p];
      if (e.valid && std::isfinite(entry_policy_value(sys, i, static_cast<int>(p), e))) out.entries[i][p] = e;
    }
  return out;
}

PolicyEntry unit_entry(int templates, int tmpl) {
  PolicyEntry e{Vector::Zero(templates), 0.0, true};
  e.lambda[tmpl] = 1.0;
  return e;
}

namespace {

struct Slack {
  std::vector<const QuadraticForm*> forms;
  std::vector<double> bounds;

  // max_k g_k(x) - bound_k, and a subgradient.
  double eval(const Vector& x, Vector* grad = nullptr) const {
    double best = minus_inf;
    int arg = -1;
    for (size_t k = 0; k < forms.size(); ++k) {
      const double s = forms[k]->evaluate(x) - bounds[k];
      if (s > best) {
        best = s;
        arg = static_cast<int>(k);
      }
    }
    if (grad && arg >= 0) *grad = 2.0 * forms[arg]->a() * x + forms[arg]->b();
    return best;
  }
};

// Chebyshev-style centre of the linear constraints, capped at radius 1.
std::optional<Vector> linear_center(const Slack& s, int d) {
  std::vector<int> lin;
  for (size_t k = 0; k < s.forms.size(); ++k)
    if (s.forms[k]->is_linear() && s.forms[k]->b().norm() > 0) lin.push_back(static_cast<int>(k));
  if (lin.empty()) return std::nullopt;
  LpProblem lp;
  const int rows = static_cast<int>(lin.size()) + 1;
  lp.a = Matrix::Zero(rows, d + 1);
  lp.b = Vector::Zero(rows);
  for (int r = 0; r < static_cast<int>(lin.size()); ++r) {
    const QuadraticForm& f = *s.forms[lin[r]];
    lp.a.row(r).head(d) = f.b().transpose();
    lp.a(r, d) = f.b().norm();
    lp.b[r] = s.bounds[lin[r]] - f.c();
  }
  lp.a(rows - 1, d) = 1.0;
  lp.b[rows - 1] = 1.0;
  lp.c = Vector::Zero(d + 1);
  lp.c[d] = -1.0;
  const LpOutcome r = solve_lp(lp);
  if (r.status != SolveStatus::optimal) return std::nullopt;
  return Vector(r.z.head(d));
}

bool strictly_feasible(const Slack& s, int d, const std::vector<Vector>& hints) {
  if (s.forms.empty()) return true;
  std::vector<Vector> cands = {Vector::Zero(d)};
  for (const auto& h : hints)
    if (h.size() == d) cands.push_back(h);
  if (auto c = linear_center(s, d)) cands.push_back(*c);
  Vector best = cands.front();
  double best_val = plus_inf;
  for (const auto& c : cands) {
    const double v = s.eval(c);
    if (v < 0) return true;
    if (v < best_val) {
      best_val = v;
      best = c;
    }
  }
  // Subgradient descent on the maximal violation.
  Vector x = best, g(d);
  for (int it = 1; it <= 400; ++it) {
    const double v = s.eval(x, &g);
    if (v < 0) return true;
    if (g.norm() == 0) break;
    x -= (0.5 / std::sqrt(static_cast<double>(it))) * (1.0 + x.norm()) * g / g.norm();
  }
  // Random search around the best point.
  std::mt19937 gen(12345);
  std::normal_distribution<double> nd;
  const double scale = 1.0 + best.norm();
  for (int it = 0; it < 400; ++it) {
    Vector y = best;
    for (int k = 0; k < d; ++k) y[k] += scale * std::pow(10.0, -(it % 4)) * nd(gen);
    if (s.eval(y) < 0) return true;
  }
  return false;
}

} // namespace

std::vector<bool> slater_check(const EquationSystem& sys, const AbstractValue& v, const std::vector<Vector>& hints) {
  std::vector<bool> out(sys.size(), true);
  for (int i = 0; i < sys.size(); ++i) {
    const Coordinate& c = sys.coords[i];
    if (!has_policy(c)) continue;
    const Row& pred = v[c.prev];
    if (is_empty(pred)) {
      out[i] = false;
      continue;
    }
    Slack s;
    for (int q = 0; q < sys.template_count(); ++q)
      if (std::isfinite(pred[q])) {
        s.forms.push_back(&sys.templates[q].form);
        s.bounds.push_back(pred[q]);
      }
    if (c.kind == CoordKind::test) {
      s.forms.push_back(&c.guard);
      s.bounds.push_back(0.0);
    }
    out[i] = strictly_feasible(s, sys.dim, hints);
  }
  return out;
}

} // namespace qtp
