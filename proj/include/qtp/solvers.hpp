#pragma once

// Dense convex solvers: a primal-dual interior point method for the small
// "min eta s.t. LMI <= 0" problems produced by Shor's relaxation, and a
// two-phase Bland-rule simplex for the per-policy least-fixpoint programs.

#include "qtp/quadforms.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace qtp {

enum class SolveStatus { optimal, infeasible, unbounded, numerical_failure };

const char* to_string(SolveStatus s);

/// minimize eta s.t. f0 + eta*g_eta + sum_k lambda_k*g[k] <= 0, lambda >= 0.
struct SdpProblem {
  Matrix f0;
  Matrix g_eta;
  std::vector<Matrix> g;

  int size() const { return static_cast<int>(f0.rows()); }
  int multipliers() const { return static_cast<int>(g.size()); }
  /// f0 + eta*g_eta + sum lambda_k g_k.
  Matrix lmi(double eta, const Vector& lambda) const;
};

struct SdpOptions {
  double feas_tol = 1e-8;
  double gap_tol = 1e-7;
  int max_newton_iters = 80;
  int max_block_size = 64;
};

struct SolveOutcome {
  SolveStatus status = SolveStatus::numerical_failure;
  double eta = 0.0;
  Vector lambda;
  double gap = 0.0;
  int iterations = 0;
};

SolveOutcome solve_sdp(const SdpProblem& p, const SdpOptions& opts = {});

/// minimize c'z s.t. A z <= b, z free.
struct LpProblem {
  Matrix a;
  Vector b;
  Vector c;
};

struct LpOptions {
  double feas_tol = 1e-8;
  double pivot_tol = 1e-11;
  int max_pivots = 100000;
};

struct LpOutcome {
  SolveStatus status = SolveStatus::numerical_failure;
  double value = 0.0;
  Vector z;
  /// Nonnegative row multipliers y with A'y = -c at optimality.
  Vector dual;
};

LpOutcome solve_lp(const LpProblem& p, const LpOptions& opts = {});

// ---------------------------------------------------------------------------
// Shor relaxation of  sup { objective(x) | g_k(x) <= bound_k, guard(x) <= 0 }.

struct ShorConstraint {
  QuadraticForm form;
  double bound; // finite
};

struct ShorResult {
  SolveStatus status = SolveStatus::numerical_failure;
  /// Relaxed upper bound; +inf when the solve did not certify a finite value.
  double bound = 0.0;
  /// One multiplier per constraint (clamped to >= 0); guard multiplier last.
  Vector multipliers;
  double mu = 0.0;
};

ShorResult shor_maximize(const QuadraticForm& objective,
                         const std::vector<ShorConstraint>& constraints,
                         const std::optional<QuadraticForm>& guard,
                         const SdpOptions& opts = {});

/// The SDP built by shor_maximize (before any internal reduction).
SdpProblem shor_problem(const QuadraticForm& objective,
                        const std::vector<ShorConstraint>& constraints,
                        const std::optional<QuadraticForm>& guard);

// ---------------------------------------------------------------------------
// Plain-text problem dump: `# name` header, `rows cols` line, row-major values.

void dump_sdp(std::ostream& os, const SdpProblem& p);
SdpProblem load_sdp(std::istream& is);

} // namespace qtp
