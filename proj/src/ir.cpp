#include "qtp/ir.hpp"

#include "qtp/errors.hpp"

#include <algorithm>
#include <cmath>

namespace qtp {

QuadraticForm compose(const QuadraticForm& p, const Transfer& t) {
  if (const auto* a = std::get_if<AffineMap>(&t)) return compose_affine(p, *a);
  return compose_quadratic(p, std::get<QuadraticMap>(t));
}

int transfer_in_dim(const Transfer& t) {
  return std::visit([](const auto& m) { return m.in_dim(); }, t);
}

int transfer_out_dim(const Transfer& t) {
  return std::visit([](const auto& m) { return m.out_dim(); }, t);
}

bool is_affine(const Transfer& t) { return std::holds_alternative<AffineMap>(t); }

const char* to_string(CoordKind k) {
  switch (k) {
  case CoordKind::constant: return "const";
  case CoordKind::assign: return "assign";
  case CoordKind::test: return "test";
  case CoordKind::join: return "join";
  }
  return "?";
}

Coordinate Coordinate::constant(Row bounds, std::string label) {
  Coordinate c;
  c.kind = CoordKind::constant;
  c.bounds = std::move(bounds);
  c.label = std::move(label);
  return c;
}

Coordinate Coordinate::assign(int prev, Transfer map, std::string label) {
  Coordinate c;
  c.kind = CoordKind::assign;
  c.prev = prev;
  c.map = std::move(map);
  c.label = std::move(label);
  return c;
}

Coordinate Coordinate::test(int prev, QuadraticForm guard, Sense sense, Transfer map, std::string label) {
  Coordinate c;
  c.kind = CoordKind::test;
  c.prev = prev;
  c.guard = std::move(guard);
  c.sense = sense;
  c.map = std::move(map);
  c.label = std::move(label);
  return c;
}

Coordinate Coordinate::join(int left, int right, std::string label) {
  Coordinate c;
  c.kind = CoordKind::join;
  c.left = left;
  c.right = right;
  c.label = std::move(label);
  return c;
}

std::vector<Diagnostic> validate(const EquationSystem& sys) {
  std::vector<Diagnostic> out;
  const int n = sys.size();
  const int m = sys.template_count();
  if (sys.dim <= 0) out.push_back({-1, "dimension", "system dimension must be positive"});
  if (m == 0) out.push_back({-1, "basis", "template basis is empty"});
  for (int k = 0; k < m; ++k)
    if (sys.templates[k].form.dim() != sys.dim)
      out.push_back({-1, "basis", "template '" + sys.templates[k].name + "' has dimension " +
                                      std::to_string(sys.templates[k].form.dim())});
  const bool all_linear = std::all_of(sys.templates.begin(), sys.templates.end(),
                                      [](const Template& t) { return t.form.is_linear(); });

  auto check_index = [&](int i, int idx, const char* what) {
    if (idx < 0 || idx >= n)
      out.push_back({i, "index", std::string(what) + " index " + std::to_string(idx) + " out of range [0, " +
                                     std::to_string(n) + ")"});
  };

  for (int i = 0; i < n; ++i) {
    const Coordinate& c = sys.coords[i];
    switch (c.kind) {
    case CoordKind::constant:
      if (static_cast<int>(c.bounds.size()) != m)
        out.push_back({i, "bounds", "constant row has " + std::to_string(c.bounds.size()) + " entries, expected " +
                                        std::to_string(m)});
      break;
    case CoordKind::join:
      check_index(i, c.left, "left");
      check_index(i, c.right, "right");
      break;
    case CoordKind::test:
      if (c.guard.dim() != sys.dim)
        out.push_back({i, "guard", "guard has dimension " + std::to_string(c.guard.dim())});
      [[fallthrough]];
    case CoordKind::assign:
      check_index(i, c.prev, "prev");
      if (transfer_in_dim(c.map) != sys.dim || transfer_out_dim(c.map) != sys.dim)
        out.push_back({i, "map", "map is " + std::to_string(transfer_in_dim(c.map)) + " -> " +
                                     std::to_string(transfer_out_dim(c.map)) + ", expected " +
                                     std::to_string(sys.dim) + " -> " + std::to_string(sys.dim)});
      if (!is_affine(c.map) && !all_linear)
        for (const auto& t : sys.templates)
          if (!t.form.is_linear())
            out.push_back({i, "nonlinear-template",
                           "quadratic map used with nonlinear template '" + t.name + "'"});
      break;
    }
  }

  // Every cycle must pass through a join.
  std::vector<int> state(n, 0);
  std::vector<int> cyclic;
  auto edges = [&](int i) {
    std::vector<int> e;
    const Coordinate& c = sys.coords[i];
    if ((c.kind == CoordKind::assign || c.kind == CoordKind::test) && c.prev >= 0 && c.prev < n) e.push_back(c.prev);
    return e;
  };
  for (int s = 0; s < n; ++s) {
    // Non-join coordinates have at most one predecessor: follow the chain.
    std::vector<int> path;
    int i = s;
    while (i >= 0 && state[i] == 0) {
      state[i] = 1;
      path.push_back(i);
      auto e = edges(i);
      i = e.empty() ? -1 : e.front();
    }
    if (i >= 0 && state[i] == 1) cyclic.push_back(i);
    for (int p : path) state[p] = 2;
  }
  for (int i : cyclic) out.push_back({i, "cycle", "dependency cycle without a join coordinate"});
  return out;
}

void require_valid(const EquationSystem& sys) {
  const auto diags = validate(sys);
  if (diags.empty()) return;
  std::string msg = "invalid equation system:";
  for (const auto& d : diags)
    msg += "\n  " + (d.coord >= 0 ? "coord " + std::to_string(d.coord + 1) + ": " : std::string()) + d.rule + ": " +
           d.message;
  throw lowering_error(msg);
}

namespace {

struct Interval {
  double lo, hi;
};

Interval mul(Interval a, Interval b) {
  auto prod = [](double x, double y) { return (x == 0.0 || y == 0.0) ? 0.0 : x * y; };
  const double c[4] = {prod(a.lo, b.lo), prod(a.lo, b.hi), prod(a.hi, b.lo), prod(a.hi, b.hi)};
  return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
}

Interval square(Interval a) {
  if (a.lo >= 0) return {a.lo * a.lo, a.hi * a.hi};
  if (a.hi <= 0) return {a.hi * a.hi, a.lo * a.lo};
  return {0.0, std::max(a.lo * a.lo, a.hi * a.hi)};
}

double interval_upper(const QuadraticForm& q, const Box& box) {
  const int d = q.dim();
  double up = q.c();
  for (int i = 0; i < d; ++i) {
    const Interval xi{box[i].first, box[i].second};
    up += mul({q.b()[i], q.b()[i]}, xi).hi;
    up += mul({q.a()(i, i), q.a()(i, i)}, square(xi)).hi;
    for (int j = i + 1; j < d; ++j) {
      const double a = 2.0 * q.a()(i, j);
      if (a != 0.0) up += mul({a, a}, mul(xi, {box[j].first, box[j].second})).hi;
    }
  }
  return up;
}

} // namespace

Row init_from_box(const Box& box, const TemplateBasis& basis, const SdpOptions& opts) {
  const int d = static_cast<int>(box.size());
  for (const auto& [lo, hi] : box)
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi) throw dimension_error("init_from_box: invalid interval");
  std::vector<ShorConstraint> cons;
  for (int i = 0; i < d; ++i) {
    const auto [lo, hi] = box[i];
    Matrix a = Matrix::Zero(d, d);
    a(i, i) = 1.0;
    Vector b = Vector::Zero(d);
    b[i] = -(lo + hi);
    cons.push_back({QuadraticForm(a, b, lo * hi), 0.0});
    Vector e = Vector::Zero(d);
    e[i] = 1.0;
    cons.push_back({QuadraticForm::linear(e), hi});
    cons.push_back({QuadraticForm::linear(-e), -lo});
  }
  Row out(basis.size());
  for (size_t k = 0; k < basis.size(); ++k) {
    const QuadraticForm& q = basis[k].form;
    if (q.dim() != d) throw dimension_error("init_from_box: template '" + basis[k].name + "' dimension");
    const double ia = interval_upper(q, box);
    if (q.is_linear()) {
      out[k] = ia;
      continue;
    }
    const ShorResult r = shor_maximize(q, cons, std::nullopt, opts);
    out[k] = std::min(ia, r.bound);
  }
  return out;
}

} // namespace qtp
