#pragma once

// Fixpoint solvers for the relaxed semantics: Kleene iteration with outward
// rounding, and policy iteration with a linear-programming inner step.

#include "qtp/relax.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qtp {

enum class Method { kleene, policy };

enum class RunStatus { fixpoint, postfixpoint, slater_stop, not_converged };

const char* to_string(Method m);
const char* to_string(RunStatus s);

struct AccelConfig {
  bool enabled = false;
  /// First accelerated iteration; -1 means n + 1.
  int start = -1;
  int length = 11;
  bool widen_to_top_after = true;
};

struct InitialPolicyConfig {
  enum class Kind { from_file, from_guards, from_kleene_warmup };
  Kind kind = Kind::from_guards;
  Policy policy; // from_file
  int warmup = 15;
};

struct EngineConfig {
  Method method = Method::policy;
  int max_iters = 50;
  AccelConfig accel;
  InitialPolicyConfig initial;
  Tolerance tol;
  RelaxOptions relax;
  bool closure_each_step = true;
  double eps_margin = 1e-9;
  /// Extra candidate points for the strict-feasibility check.
  std::vector<Vector> slater_hints;
};

struct IterationStep {
  Method method = Method::policy;
  AbstractValue value;
  /// Policy iteration: the least fixpoint before closure.
  AbstractValue lp_value;
  std::optional<Policy> policy;
  double seconds = 0.0;
  std::vector<std::string> flags;
};

/// Wall-clock seconds per phase.
struct PhaseTimes {
  double relax = 0.0;
  double lp = 0.0;
  double closure = 0.0;
  double slater = 0.0;
};

struct IterationTrace {
  std::vector<IterationStep> steps;
  AbstractValue result;
  RunStatus status = RunStatus::not_converged;
  /// Kleene: index of the returned iterate. Policy: number of improvements.
  int iterations = 0;
  std::optional<Policy> final_policy;
  double seconds = 0.0;
  PhaseTimes phases;
  /// Property violations observed during the run (should stay empty).
  std::vector<std::string> warnings;
};

IterationTrace kleene(const EquationSystem& sys, const EngineConfig& cfg);
IterationTrace policy_iterate(const EquationSystem& sys, const EngineConfig& cfg);
IterationTrace analyze(const EquationSystem& sys, const EngineConfig& cfg);

/// Throws initial_policy_error with per-entry diagnostics.
Policy choose_initial_policy(const EquationSystem& sys, const EngineConfig& cfg);

/// Least v with F^pi(v) + eps <= v (eps dropped on strongly connected parts
/// where it makes the program infeasible); +inf where no finite one exists.
AbstractValue policy_least_fixpoint(const EquationSystem& sys, const Policy& policy, const PolicyValues& values,
                                    double eps_margin = 1e-9);

/// Smallest number >= v with `digits` significant decimal digits.
double round_up_digits(double v, int digits);
/// Smallest number >= v of the form {1,2,5} * 10^k (or its negation).
double round_up_125(double v);
/// Outward rounding applied at step `j` of an acceleration window of `length`.
double accelerate(double v, int j, int length);

} // namespace qtp
