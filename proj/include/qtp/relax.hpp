#pragma once

// Relaxed abstract semantics: every (coordinate, template) bound of an
// assignment or test is the value of a Shor SDP, and every fixed choice of
// Lagrange multipliers (a policy) makes the semantics affine.

#include "qtp/ir.hpp"

#include <string>
#include <vector>

namespace qtp {

struct PolicyEntry {
  /// One multiplier per template of the basis.
  Vector lambda;
  /// Guard multiplier (tests only).
  double mu = 0.0;
  /// False when no multiplier has been selected for this template.
  bool valid = false;
};

/// entries[coord][template]; empty rows for const and join coordinates.
struct Policy {
  std::vector<std::vector<PolicyEntry>> entries;

  static Policy empty_for(const EquationSystem& sys);
};

bool operator==(const PolicyEntry& a, const PolicyEntry& b);

struct RelaxOptions {
  SdpOptions sdp;
  int threads = 1;
  /// When non-empty, every assembled SDP is written below this directory.
  std::string dump_dir;
  int dump_iteration = 0;
};

struct RelaxResult {
  AbstractValue value;
  /// Dual multipliers of every finite solve.
  Policy policy;
};

/// One application of the relaxed semantics.
RelaxResult evaluate_relaxed(const EquationSystem& sys, const AbstractValue& v, const RelaxOptions& opts = {});

/// sup_x p(T x) - sum lambda_q q(x) - mu r(x) for one entry (+inf if unbounded).
double entry_policy_value(const EquationSystem& sys, int coord, int tmpl, const PolicyEntry& e);

/// values[coord][template]; empty rows for const and join coordinates.
using PolicyValues = std::vector<std::vector<double>>;

/// Throws inadmissible_policy_error naming every entry that is missing or unbounded.
PolicyValues policy_values(const EquationSystem& sys, const Policy& policy);

/// F^pi(v): sum_q lambda_q v_prev(q) + V(p) for assignments and tests.
AbstractValue evaluate_policy_affine(const EquationSystem& sys, const Policy& policy, const AbstractValue& v,
                                     const PolicyValues& values);
AbstractValue evaluate_policy_affine(const EquationSystem& sys, const Policy& policy, const AbstractValue& v);

/// Merges dual multipliers into a policy: entries of `fresh` with a finite
/// value win, the rest keep the entry from `previous`.
Policy extract_policy(const EquationSystem& sys, const Policy& fresh, const Policy& previous);

/// The unit multiplier on the template itself, with identity maps only.
PolicyEntry unit_entry(int templates, int tmpl);

/// Per coordinate: true when a strictly feasible point of the predecessor's
/// sub-level set (and guard) was found. Const and join coordinates report true.
std::vector<bool> slater_check(const EquationSystem& sys, const AbstractValue& v,
                               const std::vector<Vector>& hints = {});

} // namespace qtp
