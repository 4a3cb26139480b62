#include "qtp/engine.hpp"

#include "qtp/errors.hpp"
#include "qtp/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>

namespace qtp {

const char* to_string(Method m) { return m == Method::kleene ? "kleene" : "policy"; }

const char* to_string(RunStatus s) {
  switch (s) {
  case RunStatus::fixpoint: return "fixpoint";
  case RunStatus::postfixpoint: return "postfixpoint";
  case RunStatus::slater_stop: return "postfixpoint (slater-stop)";
  case RunStatus::not_converged: return "not_converged";
  }
  return "?";
}

double round_up_digits(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  const double e = std::floor(std::log10(std::abs(v)));
  const double q = std::pow(10.0, e - digits + 1);
  const double s = v / q;
  const double r = std::round(s);
  // Values already on the grid stay put despite representation noise.
  if (std::abs(s - r) <= 1e-9 * std::abs(s)) return std::max(v, r * q);
  return std::ceil(s) * q;
}

double round_up_125(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  const double a = std::abs(v);
  const double p = std::pow(10.0, std::floor(std::log10(a)));
  static constexpr double steps[] = {1, 2, 5, 10};
  const double slack = 1e-9 * a;
  if (v > 0) {
    for (double s : steps)
      if (s * p >= a - slack) return std::max(v, s * p);
    return 10 * p;
  }
  double best = p;
  for (double s : steps)
    if (s * p <= a + slack) best = s * p;
  return std::max(v, -best);
}

double accelerate(double v, int j, int length) {
  const int third = (length + 2) / 3;
  if (j < third) return round_up_digits(v, 2);
  if (j < 2 * third) return round_up_digits(v, 1);
  return round_up_125(v);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

bool has_policy(const Coordinate& c) { return c.kind == CoordKind::assign || c.kind == CoordKind::test; }

AbstractValue closure_value(const EquationSystem& sys, const AbstractValue& v, const EngineConfig& cfg) {
  AbstractValue out = v;
  ClosureOptions co{cfg.relax.sdp, 1};
  parallel_for(sys.size(), cfg.relax.threads, [&](int i) { out[i] = closure(normalize(v[i]), sys.templates, co); });
  return out;
}

AbstractValue normalize_value(AbstractValue v) {
  for (auto& r : v) r = normalize(std::move(r));
  return v;
}

// Rows that become non-empty when iterating from bottom.
std::vector<bool> live_rows(const EquationSystem& sys) {
  const int n = sys.size();
  std::vector<bool> live(n, false);
  for (bool changed = true; changed;) {
    changed = false;
    for (int i = 0; i < n; ++i) {
      if (live[i]) continue;
      const Coordinate& c = sys.coords[i];
      bool now = false;
      switch (c.kind) {
      case CoordKind::constant: now = !is_empty(c.bounds); break;
      case CoordKind::join: now = live[c.left] || live[c.right]; break;
      default: now = live[c.prev]; break;
      }
      if (now) {
        live[i] = true;
        changed = true;
      }
    }
  }
  return live;
}

struct LowerBound {
  double constant;
  std::vector<std::pair<int, double>> terms; // (node, coefficient > 0)
};

// Tarjan's algorithm; components come out dependencies first.
std::vector<std::vector<int>> components(const std::vector<std::vector<int>>& deps) {
  const int n = static_cast<int>(deps.size());
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<bool> on(n, false);
  std::vector<std::vector<int>> out;
  int counter = 0;
  std::function<void(int)> visit = [&](int v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on[v] = true;
    for (int w : deps[v]) {
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<int> comp;
      int w;
      do {
        w = stack.back();
        stack.pop_back();
        on[w] = false;
        comp.push_back(w);
      } while (w != v);
      std::sort(comp.begin(), comp.end());
      out.push_back(std::move(comp));
    }
  };
  for (int v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);
  return out;
}

double row_value(const LowerBound& lb, const Vector& z, double eps) {
  double v = lb.constant + eps;
  for (auto [src, coef] : lb.terms) v += coef * z[src];
  return v;
}

// Removes the round-off of the simplex tableau: the rows tight at the LP
// optimum are solved as a square system, then every node is raised to its
// largest lower bound until all rows hold.
Vector polish(const std::vector<std::pair<int, LowerBound>>& rows, const Vector& z, double eps) {
  const int k = static_cast<int>(z.size());
  std::vector<int> tight(k, -1);
  std::vector<double> slack(k, std::numeric_limits<double>::infinity());
  for (size_t r = 0; r < rows.size(); ++r) {
    const auto& [node, lb] = rows[r];
    const double s = z[node] - row_value(lb, z, eps);
    if (s < slack[node]) {
      slack[node] = s;
      tight[node] = static_cast<int>(r);
    }
  }
  Vector out = z;
  if (std::find(tight.begin(), tight.end(), -1) == tight.end()) {
    Matrix a = Matrix::Identity(k, k);
    Vector b(k);
    for (int node = 0; node < k; ++node) {
      const LowerBound& lb = rows[tight[node]].second;
      b[node] = lb.constant + eps;
      for (auto [src, coef] : lb.terms) a(node, src) -= coef;
    }
    Eigen::FullPivLU<Matrix> lu(a);
    if (lu.isInvertible()) {
      const Vector exact = lu.solve(b);
      if (exact.allFinite() && (exact - z).cwiseAbs().maxCoeff() <= 1e-5 * (1.0 + z.cwiseAbs().maxCoeff()))
        out = exact;
    }
  }
  for (int pass = 0; pass < 100; ++pass) {
    bool raised = false;
    for (const auto& [node, lb] : rows) {
      const double v = row_value(lb, out, eps);
      if (v > out[node]) {
        out[node] = v;
        raised = true;
      }
    }
    if (!raised) break;
  }
  return out;
}

} // namespace

AbstractValue policy_least_fixpoint(const EquationSystem& sys, const Policy& policy, const PolicyValues& values,
                                    double eps_margin) {
  const int n = sys.size();
  const int m = sys.template_count();
  const std::vector<bool> live = live_rows(sys);
  const int nodes = n * m;
  std::vector<std::vector<LowerBound>> lower(nodes);
  std::vector<bool> fixed(nodes, false);
  std::vector<double> value(nodes, minus_inf);

  for (int i = 0; i < n; ++i) {
    if (!live[i]) continue;
    const Coordinate& c = sys.coords[i];
    for (int p = 0; p < m; ++p) {
      const int node = i * m + p;
      switch (c.kind) {
      case CoordKind::constant:
        fixed[node] = true;
        value[node] = c.bounds[p];
        break;
      case CoordKind::join:
        for (int side : {c.left, c.right})
          if (live[side]) lower[node].push_back({0.0, {{side * m + p, 1.0}}});
        break;
      default: {
        const PolicyEntry& e = policy.entries[i][p];
        LowerBound lb{values[i][p], {}};
        for (int q = 0; q < m; ++q)
          if (e.lambda[q] > 0.0) lb.terms.push_back({c.prev * m + q, e.lambda[q]});
        lower[node].push_back(std::move(lb));
        break;
      }
      }
    }
  }

  std::vector<std::vector<int>> deps(nodes);
  for (int v = 0; v < nodes; ++v)
    for (const auto& lb : lower[v])
      for (auto [src, coef] : lb.terms) deps[v].push_back(src);

  std::vector<int> comp_of(nodes, -1);
  for (const auto& comp : components(deps)) {
    const int live_count = static_cast<int>(std::count_if(comp.begin(), comp.end(), [&](int v) {
      return live[v / m];
    }));
    if (live_count == 0) continue;
    if (comp.size() == 1 && fixed[comp[0]]) continue;
    for (size_t k = 0; k < comp.size(); ++k) comp_of[comp[k]] = static_cast<int>(k);

    // Constant part of every lower bound, with inputs outside the component substituted.
    bool infinite = false;
    bool self_loop = false;
    std::vector<std::pair<int, LowerBound>> rows; // (local node, bound with local terms)
    for (int v : comp) {
      for (const auto& lb : lower[v]) {
        LowerBound local{lb.constant, {}};
        for (auto [src, coef] : lb.terms) {
          bool inside = std::binary_search(comp.begin(), comp.end(), src);
          if (inside) {
            local.terms.push_back({comp_of[src], coef});
            self_loop = true;
          } else {
            if (value[src] == plus_inf) infinite = true;
            local.constant += coef * value[src];
          }
        }
        rows.push_back({comp_of[v], std::move(local)});
      }
    }

    if (infinite) {
      for (int v : comp) value[v] = plus_inf;
    } else if (!self_loop) {
      const int v = comp[0];
      double best = minus_inf;
      for (const auto& [node, lb] : rows) best = std::max(best, lb.constant + eps_margin);
      value[v] = best;
    } else {
      const int k = static_cast<int>(comp.size());
      auto solve = [&](double eps) {
        LpProblem lp;
        lp.a = Matrix::Zero(static_cast<int>(rows.size()), k);
        lp.b = Vector::Zero(static_cast<int>(rows.size()));
        for (size_t r = 0; r < rows.size(); ++r) {
          const auto& [node, lb] = rows[r];
          lp.a(r, node) -= 1.0;
          for (auto [src, coef] : lb.terms) lp.a(r, src) += coef;
          lp.b[r] = -(lb.constant + eps);
        }
        lp.c = Vector::Ones(k);
        return solve_lp(lp);
      };
      double eps = eps_margin;
      LpOutcome out = solve(eps);
      if (out.status == SolveStatus::infeasible && eps_margin > 0.0) out = solve(eps = 0.0);
      if (out.status == SolveStatus::optimal) out.z = polish(rows, out.z, eps);
      for (int j = 0; j < k; ++j) value[comp[j]] = out.status == SolveStatus::optimal ? out.z[j] : plus_inf;
    }
    for (int v : comp) comp_of[v] = -1;
  }

  AbstractValue out(n, bottom_row(m));
  for (int i = 0; i < n; ++i)
    if (live[i])
      for (int p = 0; p < m; ++p) out[i][p] = value[i * m + p];
  return normalize_value(out);
}

namespace {

std::string entry_name(const EquationSystem& sys, int i, int p) {
  return "(" + std::to_string(i + 1) + ", " + sys.templates[p].name + ")";
}

Row entry_row(const EquationSystem& sys) {
  for (const auto& c : sys.coords)
    if (c.kind == CoordKind::constant && !is_empty(c.bounds)) return c.bounds;
  return top_row(sys.template_count());
}

std::optional<PolicyEntry> sdp_entry(const EquationSystem& sys, int i, int p, const Row& bounds, bool use_guard,
                                     const SdpOptions& opts) {
  const Coordinate& c = sys.coords[i];
  const int m = sys.template_count();
  std::vector<ShorConstraint> cons;
  std::vector<int> index;
  for (int q = 0; q < m; ++q)
    if (std::isfinite(bounds[q])) {
      cons.push_back({sys.templates[q].form, bounds[q]});
      index.push_back(q);
    }
  std::optional<QuadraticForm> guard;
  if (use_guard && c.kind == CoordKind::test) guard = c.guard;
  if (cons.empty() && !guard) return std::nullopt;
  const ShorResult r = shor_maximize(compose(sys.templates[p].form, c.map), cons, guard, opts);
  if (r.status != SolveStatus::optimal) return std::nullopt;
  PolicyEntry e{Vector::Zero(m), r.mu, true};
  for (size_t k = 0; k < index.size(); ++k) e.lambda[index[k]] = r.multipliers[static_cast<int>(k)];
  if (!std::isfinite(entry_policy_value(sys, i, p, e))) return std::nullopt;
  return e;
}

Policy guard_policy(const EquationSystem& sys, const EngineConfig& cfg, std::string* missing) {
  const int m = sys.template_count();
  Policy pi = Policy::empty_for(sys);
  const Row start = entry_row(sys);
  for (int i = 0; i < sys.size(); ++i) {
    const Coordinate& c = sys.coords[i];
    if (!has_policy(c)) continue;
    for (int p = 0; p < m; ++p) {
      std::optional<PolicyEntry> e;
      if (c.kind == CoordKind::test) e = sdp_entry(sys, i, p, top_row(m), true, cfg.relax.sdp);
      if (!e) {
        PolicyEntry u = unit_entry(m, p);
        if (std::isfinite(entry_policy_value(sys, i, p, u))) e = u;
      }
      if (!e) e = sdp_entry(sys, i, p, start, true, cfg.relax.sdp);
      if (!e) e = sdp_entry(sys, i, p, Row(m, 1.0), true, cfg.relax.sdp);
      if (e) pi.entries[i][p] = *e;
      else if (missing) *missing += " " + entry_name(sys, i, p);
    }
  }
  return pi;
}

} // namespace

Policy choose_initial_policy(const EquationSystem& sys, const EngineConfig& cfg) {
  using Kind = InitialPolicyConfig::Kind;
  Policy pi;
  std::string missing;
  switch (cfg.initial.kind) {
  case Kind::from_file:
    pi = cfg.initial.policy;
    if (pi.entries.size() != static_cast<size_t>(sys.size()))
      throw initial_policy_error("initial policy has " + std::to_string(pi.entries.size()) + " coordinates, system has " +
                                 std::to_string(sys.size()));
    for (int i = 0; i < sys.size(); ++i) {
      const size_t want = has_policy(sys.coords[i]) ? sys.template_count() : 0;
      if (pi.entries[i].size() != want)
        throw initial_policy_error("initial policy: coordinate " + std::to_string(i + 1) + " has " +
                                   std::to_string(pi.entries[i].size()) + " entries, expected " +
                                   std::to_string(want));
    }
    break;
  case Kind::from_guards: pi = guard_policy(sys, cfg, &missing); break;
  case Kind::from_kleene_warmup: {
    EngineConfig warm = cfg;
    warm.method = Method::kleene;
    warm.max_iters = std::max(1, cfg.initial.warmup);
    warm.accel.enabled = true;
    const IterationTrace t = kleene(sys, warm);
    const RelaxResult r = evaluate_relaxed(sys, t.result, cfg.relax);
    pi = extract_policy(sys, r.policy, guard_policy(sys, cfg, nullptr));
    break;
  }
  }
  try {
    (void)policy_values(sys, pi);
  } catch (const inadmissible_policy_error& e) {
    throw initial_policy_error(std::string("no admissible initial policy: ") + e.what());
  }
  return pi;
}

IterationTrace kleene(const EquationSystem& sys, const EngineConfig& cfg) {
  require_valid(sys);
  const auto t0 = Clock::now();
  const int n = sys.size();
  const int m = sys.template_count();
  const int start = cfg.accel.start < 0 ? n + 1 : cfg.accel.start;
  IterationTrace trace;
  AbstractValue v = bottom(n, m);
  bool converged = false;
  for (int k = 1; k <= cfg.max_iters; ++k) {
    const auto ts = Clock::now();
    auto tp = Clock::now();
    AbstractValue f = evaluate_relaxed(sys, v, cfg.relax).value;
    trace.phases.relax += seconds_since(tp);
    tp = Clock::now();
    if (cfg.closure_each_step) f = closure_value(sys, f, cfg);
    trace.phases.closure += seconds_since(tp);
    if (approx_leq(f, v, cfg.tol)) {
      trace.status = approx_equal(f, v, cfg.tol) ? RunStatus::fixpoint : RunStatus::postfixpoint;
      trace.iterations = k - 1;
      converged = true;
      break;
    }
    AbstractValue next = join(v, f);
    IterationStep step;
    step.method = Method::kleene;
    const bool in_window = cfg.accel.enabled && k >= start && k < start + cfg.accel.length;
    const bool widen = cfg.accel.enabled && cfg.accel.widen_to_top_after && k >= start + cfg.accel.length;
    if (in_window) step.flags.push_back("accelerated");
    if (widen) step.flags.push_back("widened");
    for (int i = 0; i < n; ++i) {
      if (is_empty(next[i])) continue;
      for (int p = 0; p < m; ++p) {
        if (approx_leq(f[i][p], v[i][p], cfg.tol)) continue;
        if (in_window) next[i][p] = accelerate(next[i][p], k - start, cfg.accel.length);
        else if (widen) next[i][p] = plus_inf;
      }
    }
    if (!leq(v, next)) trace.warnings.push_back("kleene iterate " + std::to_string(k) + " decreased");
    v = normalize_value(next);
    step.value = v;
    step.seconds = seconds_since(ts);
    trace.steps.push_back(std::move(step));
  }
  if (!converged) {
    trace.iterations = cfg.max_iters;
    AbstractValue f = evaluate_relaxed(sys, v, cfg.relax).value;
    if (cfg.closure_each_step) f = closure_value(sys, f, cfg);
    trace.status = approx_leq(f, v, cfg.tol) ? (approx_equal(f, v, cfg.tol) ? RunStatus::fixpoint
                                                                                : RunStatus::postfixpoint)
                                             : RunStatus::not_converged;
  }
  trace.result = v;
  trace.seconds = seconds_since(t0);
  return trace;
}

namespace {

// Some entry of `a` lies below `b` by more than the tolerance.
bool decreases_somewhere(const AbstractValue& a, const AbstractValue& b, const Tolerance& tol) {
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t p = 0; p < a[i].size(); ++p)
      if (a[i][p] < b[i][p] && !approx_equal(a[i][p], b[i][p], tol)) return true;
  return false;
}

// Entries switch only where the fresh multipliers strictly lower F(w).
Policy improve(const EquationSystem& sys, const Policy& pi, const PolicyValues& values, const RelaxResult& r,
               const AbstractValue& w, const Tolerance& tol) {
  const AbstractValue current = evaluate_policy_affine(sys, pi, w, values);
  const Policy fresh = extract_policy(sys, r.policy, pi);
  Policy next = pi;
  for (int i = 0; i < sys.size(); ++i) {
    const Coordinate& c = sys.coords[i];
    if (c.kind != CoordKind::assign && c.kind != CoordKind::test) continue;
    const Row pred = normalize(w[c.prev]);
    for (size_t p = 0; p < next.entries[i].size(); ++p) {
      const PolicyEntry& e = fresh.entries[i][p];
      if (!e.valid || !(r.value[i][p] < current[i][p]) || approx_equal(r.value[i][p], current[i][p], tol)) continue;
      // The entry is re-evaluated on its own, as the least fixpoint will see it.
      double attained = entry_policy_value(sys, i, static_cast<int>(p), e);
      for (size_t q = 0; q < pred.size(); ++q) attained += scaled_bound(e.lambda[q], pred[q]);
      if (attained < current[i][p] && !approx_equal(attained, current[i][p], tol)) next.entries[i][p] = e;
    }
  }
  return next;
}

} // namespace

IterationTrace policy_iterate(const EquationSystem& sys, const EngineConfig& cfg) {
  require_valid(sys);
  const auto t0 = Clock::now();
  IterationTrace trace;
  Policy pi = choose_initial_policy(sys, cfg);
  std::optional<AbstractValue> safe;
  std::optional<AbstractValue> prev;
  RelaxOptions ro = cfg.relax;

  for (int k = 0;; ++k) {
    const auto ts = Clock::now();
    const PolicyValues values = policy_values(sys, pi);
    auto tp = Clock::now();
    const AbstractValue u = policy_least_fixpoint(sys, pi, values, cfg.eps_margin);
    trace.phases.lp += seconds_since(tp);
    if (k == 0)
      for (int i = 0; i < sys.size(); ++i)
        for (int p = 0; p < sys.template_count(); ++p)
          if (u[i][p] == plus_inf)
            throw initial_policy_error("least fixpoint of the initial policy is unbounded at " +
                                       entry_name(sys, i, p));
    if (!approx_leq(evaluate_policy_affine(sys, pi, u, values), u, cfg.tol))
      trace.warnings.push_back("iteration " + std::to_string(k) + ": least fixpoint fails its own recheck");
    tp = Clock::now();
    const AbstractValue w = cfg.closure_each_step ? closure_value(sys, u, cfg) : u;
    trace.phases.closure += seconds_since(tp);

    IterationStep step;
    step.method = Method::policy;
    step.value = w;
    step.lp_value = u;
    step.policy = pi;

    if (prev) {
      if (!approx_leq(w, *prev, cfg.tol))
        trace.warnings.push_back("iteration " + std::to_string(k) + ": policy iterate increased");
      if (!decreases_somewhere(w, *prev, cfg.tol)) {
        step.flags.push_back("no-improvement");
        step.seconds = seconds_since(ts);
        trace.steps.push_back(std::move(step));
        trace.status = safe ? RunStatus::postfixpoint : RunStatus::not_converged;
        trace.result = safe ? *safe : w;
        break;
      }
    }

    ro.dump_iteration = k;
    tp = Clock::now();
    const RelaxResult r = evaluate_relaxed(sys, w, ro);
    trace.phases.relax += seconds_since(tp);
    if (approx_equal(r.value, w, cfg.tol)) {
      step.flags.push_back("fixpoint");
      step.seconds = seconds_since(ts);
      trace.steps.push_back(std::move(step));
      trace.status = RunStatus::fixpoint;
      trace.result = w;
      break;
    }
    if (approx_leq(r.value, w, cfg.tol)) {
      safe = w;
    } else {
      trace.warnings.push_back("iteration " + std::to_string(k) + ": relaxed image of the closed iterate exceeds it");
      if (approx_leq(evaluate_relaxed(sys, u, ro).value, u, cfg.tol)) safe = u;
    }

    tp = Clock::now();
    const std::vector<bool> slater = slater_check(sys, w, cfg.slater_hints);
    trace.phases.slater += seconds_since(tp);
    if (std::find(slater.begin(), slater.end(), false) != slater.end()) {
      step.flags.push_back("slater-stop");
      step.seconds = seconds_since(ts);
      trace.steps.push_back(std::move(step));
      trace.status = safe ? RunStatus::slater_stop : RunStatus::not_converged;
      trace.result = safe ? *safe : w;
      break;
    }

    Policy next = improve(sys, pi, values, r, w, cfg.tol);
    step.seconds = seconds_since(ts);
    trace.steps.push_back(std::move(step));
    if (next.entries == pi.entries || trace.iterations >= cfg.max_iters) {
      trace.status = safe ? RunStatus::postfixpoint : RunStatus::not_converged;
      trace.result = safe ? *safe : w;
      break;
    }
    pi = std::move(next);
    prev = w;
    ++trace.iterations;
  }
  trace.final_policy = pi;
  trace.seconds = seconds_since(t0);
  return trace;
}

IterationTrace analyze(const EquationSystem& sys, const EngineConfig& cfg) {
  return cfg.method == Method::kleene ? kleene(sys, cfg) : policy_iterate(sys, cfg);
}

} // namespace qtp
