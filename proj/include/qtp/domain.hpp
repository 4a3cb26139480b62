#pragma once

// The template abstract domain: a row holds one extended-real upper bound per
// template, and an abstract value holds one row per control point.

#include "qtp/quadforms.hpp"
#include "qtp/solvers.hpp"

#include <limits>
#include <string>
#include <vector>

namespace qtp {

inline constexpr double plus_inf = std::numeric_limits<double>::infinity();
inline constexpr double minus_inf = -std::numeric_limits<double>::infinity();

struct Template {
  std::string name;
  QuadraticForm form;
};

using TemplateBasis = std::vector<Template>;

/// Bounds indexed like the template basis; +-inf are IEEE infinities.
using Row = std::vector<double>;
/// One row per control point.
using AbstractValue = std::vector<Row>;

struct Tolerance {
  double atol = 1e-6;
  double rtol = 1e-6;
};

/// a == b up to atol + rtol*max(|a|,|b|); infinities compare exactly.
bool approx_equal(double a, double b, const Tolerance& tol = {});
/// a <= b up to the same slack.
bool approx_leq(double a, double b, const Tolerance& tol = {});
bool approx_equal(const Row& a, const Row& b, const Tolerance& tol = {});
bool approx_leq(const Row& a, const Row& b, const Tolerance& tol = {});
bool approx_equal(const AbstractValue& a, const AbstractValue& b, const Tolerance& tol = {});
bool approx_leq(const AbstractValue& a, const AbstractValue& b, const Tolerance& tol = {});

/// lambda * bound with 0 * inf = 0.
double scaled_bound(double lambda, double bound);

Row bottom_row(int templates);
Row top_row(int templates);
AbstractValue bottom(int coords, int templates);

/// True when some entry is -inf: the sub-level set is empty.
bool is_empty(const Row& row);
/// Rows with any -inf entry become all -inf.
Row normalize(Row row);

bool leq(const Row& a, const Row& b);
bool leq(const AbstractValue& a, const AbstractValue& b);

Row join(const Row& a, const Row& b);
AbstractValue join(const AbstractValue& a, const AbstractValue& b);

bool concretize_membership(const Row& row, const TemplateBasis& basis, const Vector& x);

/// Per-template maximum over the points; all -inf for an empty set.
Row support_of_sample(const std::vector<Vector>& points, const TemplateBasis& basis);

struct ClosureOptions {
  SdpOptions sdp;
  int threads = 1;
};

/// Relaxed hull of the sub-level set of `row`: each bound is replaced by the
/// Shor bound of its template over the others, never increasing it.
Row closure(const Row& row, const TemplateBasis& basis, const ClosureOptions& opts = {});

/// Pointwise minimum followed by closure.
Row meet(const Row& a, const Row& b, const TemplateBasis& basis, const ClosureOptions& opts = {});

/// Linear templates x_i and -x_i.
TemplateBasis interval_basis(int dim, const std::vector<std::string>& vars = {});
/// Intervals plus x_i - x_j for i != j.
TemplateBasis zone_basis(int dim, const std::vector<std::string>& vars = {});
/// Intervals plus +-x_i +- x_j for i < j.
TemplateBasis octagon_basis(int dim, const std::vector<std::string>& vars = {});

std::string format_bound(double v);
/// `name(x) <= bound` lines, one per template.
std::string format_row(const Row& row, const TemplateBasis& basis);

} // namespace qtp
