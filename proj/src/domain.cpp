#include "qtp/domain.hpp"

#include "qtp/errors.hpp"
#include "qtp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace qtp {

bool approx_equal(double a, double b, const Tolerance& tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol.atol + tol.rtol * std::max(std::abs(a), std::abs(b));
}

bool approx_leq(double a, double b, const Tolerance& tol) {
  if (a <= b) return true;
  if (std::isinf(a) || std::isinf(b)) return false;
  return a - b <= tol.atol + tol.rtol * std::max(std::abs(a), std::abs(b));
}

bool approx_equal(const Row& a, const Row& b, const Tolerance& tol) {
  if (a.size() != b.size()) return false;
  for (size_t k = 0; k < a.size(); ++k)
    if (!approx_equal(a[k], b[k], tol)) return false;
  return true;
}

bool approx_leq(const Row& a, const Row& b, const Tolerance& tol) {
  if (a.size() != b.size()) return false;
  for (size_t k = 0; k < a.size(); ++k)
    if (!approx_leq(a[k], b[k], tol)) return false;
  return true;
}

bool approx_equal(const AbstractValue& a, const AbstractValue& b, const Tolerance& tol) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!approx_equal(a[i], b[i], tol)) return false;
  return true;
}

bool approx_leq(const AbstractValue& a, const AbstractValue& b, const Tolerance& tol) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!approx_leq(a[i], b[i], tol)) return false;
  return true;
}

double scaled_bound(double lambda, double bound) { return lambda == 0.0 ? 0.0 : lambda * bound; }

Row bottom_row(int templates) { return Row(templates, minus_inf); }

Row top_row(int templates) { return Row(templates, plus_inf); }

AbstractValue bottom(int coords, int templates) { return AbstractValue(coords, bottom_row(templates)); }

bool is_empty(const Row& row) {
  return std::any_of(row.begin(), row.end(), [](double v) { return v == minus_inf; });
}

Row normalize(Row row) {
  if (is_empty(row)) std::fill(row.begin(), row.end(), minus_inf);
  return row;
}

bool leq(const Row& a, const Row& b) {
  if (a.size() != b.size()) throw dimension_error("comparing rows of different lengths");
  for (size_t k = 0; k < a.size(); ++k)
    if (!(a[k] <= b[k])) return false;
  return true;
}

bool leq(const AbstractValue& a, const AbstractValue& b) {
  if (a.size() != b.size()) throw dimension_error("comparing values with different coordinate counts");
  for (size_t i = 0; i < a.size(); ++i)
    if (!leq(a[i], b[i])) return false;
  return true;
}

Row join(const Row& a, const Row& b) {
  if (a.size() != b.size()) throw dimension_error("joining rows of different lengths");
  Row out(a.size());
  for (size_t k = 0; k < a.size(); ++k) out[k] = std::max(a[k], b[k]);
  return out;
}

AbstractValue join(const AbstractValue& a, const AbstractValue& b) {
  if (a.size() != b.size()) throw dimension_error("joining values with different coordinate counts");
  AbstractValue out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = join(a[i], b[i]);
  return out;
}

bool concretize_membership(const Row& row, const TemplateBasis& basis, const Vector& x) {
  for (size_t k = 0; k < basis.size(); ++k)
    if (!(basis[k].form.evaluate(x) <= row[k])) return false;
  return true;
}

Row support_of_sample(const std::vector<Vector>& points, const TemplateBasis& basis) {
  Row out = bottom_row(static_cast<int>(basis.size()));
  for (const auto& x : points)
    for (size_t k = 0; k < basis.size(); ++k) out[k] = std::max(out[k], basis[k].form.evaluate(x));
  return out;
}

Row closure(const Row& row, const TemplateBasis& basis, const ClosureOptions& opts) {
  if (row.size() != basis.size()) throw dimension_error("closure: row and basis sizes differ");
  if (is_empty(row)) return row;
  std::vector<ShorConstraint> cons;
  for (size_t k = 0; k < basis.size(); ++k)
    if (std::isfinite(row[k])) cons.push_back({basis[k].form, row[k]});
  Row out = row;
  parallel_for(static_cast<int>(basis.size()), opts.threads, [&](int k) {
    const ShorResult r = shor_maximize(basis[k].form, cons, std::nullopt, opts.sdp);
    if (r.bound < out[k]) out[k] = r.bound;
  });
  return out;
}

Row meet(const Row& a, const Row& b, const TemplateBasis& basis, const ClosureOptions& opts) {
  if (a.size() != b.size()) throw dimension_error("meeting rows of different lengths");
  Row m(a.size());
  for (size_t k = 0; k < a.size(); ++k) m[k] = std::min(a[k], b[k]);
  return closure(normalize(m), basis, opts);
}

namespace {

std::string var_name(const std::vector<std::string>& vars, int i) {
  return i < static_cast<int>(vars.size()) ? vars[i] : "x" + std::to_string(i + 1);
}

Template linear_template(int dim, std::vector<std::pair<int, double>> coeffs, std::string name) {
  Vector b = Vector::Zero(dim);
  for (auto [i, c] : coeffs) b[i] = c;
  return {std::move(name), QuadraticForm::linear(std::move(b))};
}

void add_intervals(TemplateBasis& out, int dim, const std::vector<std::string>& vars) {
  for (int i = 0; i < dim; ++i) {
    out.push_back(linear_template(dim, {{i, 1.0}}, var_name(vars, i)));
    out.push_back(linear_template(dim, {{i, -1.0}}, "-" + var_name(vars, i)));
  }
}

} // namespace

TemplateBasis interval_basis(int dim, const std::vector<std::string>& vars) {
  TemplateBasis out;
  add_intervals(out, dim, vars);
  return out;
}

TemplateBasis zone_basis(int dim, const std::vector<std::string>& vars) {
  TemplateBasis out = interval_basis(dim, vars);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (i != j)
        out.push_back(linear_template(dim, {{i, 1.0}, {j, -1.0}}, var_name(vars, i) + "-" + var_name(vars, j)));
  return out;
}

TemplateBasis octagon_basis(int dim, const std::vector<std::string>& vars) {
  TemplateBasis out = interval_basis(dim, vars);
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) {
      const std::string a = var_name(vars, i), b = var_name(vars, j);
      out.push_back(linear_template(dim, {{i, 1.0}, {j, 1.0}}, a + "+" + b));
      out.push_back(linear_template(dim, {{i, 1.0}, {j, -1.0}}, a + "-" + b));
      out.push_back(linear_template(dim, {{i, -1.0}, {j, 1.0}}, "-" + a + "+" + b));
      out.push_back(linear_template(dim, {{i, -1.0}, {j, -1.0}}, "-" + a + "-" + b));
    }
  return out;
}

std::string format_bound(double v) {
  if (v == plus_inf) return "+inf";
  if (v == minus_inf) return "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_row(const Row& row, const TemplateBasis& basis) {
  std::ostringstream os;
  for (size_t k = 0; k < basis.size(); ++k)
    os << basis[k].name << "(x) <= " << format_bound(row[k]) << "\n";
  return os.str();
}

} // namespace qtp
