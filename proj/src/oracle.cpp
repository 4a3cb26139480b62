#include "qtp/oracle.hpp"

#include "qtp/errors.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace qtp {

Vector apply_transfer(const Transfer& t, const Vector& x) {
  return std::visit([&](const auto& m) { return Vector(m.apply(x)); }, t);
}

Box bounding_box(const Row& row, const TemplateBasis& basis, const SdpOptions& opts) {
  const int d = basis.empty() ? 0 : basis.front().form.dim();
  std::vector<ShorConstraint> cons;
  for (size_t q = 0; q < basis.size(); ++q)
    if (std::isfinite(row[q])) cons.push_back({basis[q].form, row[q]});
  Box box(d, {minus_inf, plus_inf});
  if (cons.empty()) return box;
  for (int k = 0; k < d; ++k) {
    Vector e = Vector::Zero(d);
    e[k] = 1.0;
    const ShorResult hi = shor_maximize(QuadraticForm::linear(e), cons, std::nullopt, opts);
    const ShorResult lo = shor_maximize(QuadraticForm::linear(-e), cons, std::nullopt, opts);
    if (hi.status == SolveStatus::optimal) box[k].second = hi.bound;
    if (lo.status == SolveStatus::optimal) box[k].first = -lo.bound;
  }
  return box;
}

namespace {

// per_axis^d, saturating once above 1e8.
long grid_size(int per_axis, int d) {
  long total = 1;
  for (int k = 0; k < d; ++k) {
    total *= per_axis;
    if (total > 100000000) return total;
  }
  return total;
}

} // namespace

OracleResult oracle(const EquationSystem& sys, const AbstractValue& v, const OracleOptions& opts) {
  const int n = sys.size();
  const int m = sys.template_count();
  const int d = sys.dim;
  OracleResult res;
  res.value.assign(n, bottom_row(m));
  res.boxes.assign(n, {});
  res.feasible_points.assign(n, 0);
  {
    std::ostringstream g;
    g << opts.grid << " per axis, at most " << opts.max_points << " points, " << opts.rays << " rays";
    res.grid = g.str();
  }
  std::mt19937_64 gen(opts.seed);

  for (int i = 0; i < n; ++i) {
    const Coordinate& c = sys.coords[i];
    if (c.kind == CoordKind::constant) {
      res.value[i] = normalize(c.bounds);
      continue;
    }
    if (c.kind == CoordKind::join) {
      res.value[i] = join(normalize(v[c.left]), normalize(v[c.right]));
      continue;
    }
    const Row pred = normalize(v[c.prev]);
    if (is_empty(pred)) continue;

    Box box = opts.box ? *opts.box : bounding_box(pred, sys.templates, opts.sdp);
    if (static_cast<int>(box.size()) != d) throw dimension_error("oracle: sampling box has the wrong dimension");
    for (auto& [lo, hi] : box) {
      if (!std::isfinite(lo) || !std::isfinite(hi)) {
        res.warnings.push_back("coordinate " + std::to_string(i + 1) + ": unbounded sampling box, using radius " +
                               std::to_string(opts.fallback_radius));
        if (!std::isfinite(lo)) lo = -opts.fallback_radius;
        if (!std::isfinite(hi)) hi = opts.fallback_radius;
      }
    }
    res.boxes[i] = box;

    auto feasible = [&](const Vector& x) {
      if (!concretize_membership(pred, sys.templates, x)) return false;
      return c.kind != CoordKind::test || c.guard.evaluate(x) <= 0.0;
    };
    Row& out = res.value[i];
    long count = 0;
    Vector anchor;
    auto visit = [&](const Vector& x) {
      if (!feasible(x)) return;
      ++count;
      if (anchor.size() == 0) anchor = x;
      const Vector y = apply_transfer(c.map, x);
      for (int p = 0; p < m; ++p) out[p] = std::max(out[p], sys.templates[p].form.evaluate(y));
    };

    Vector centre(d);
    for (int k = 0; k < d; ++k) centre[k] = 0.5 * (box[k].first + box[k].second);
    visit(centre);
    bool origin_inside = true;
    for (const auto& [lo, hi] : box) origin_inside = origin_inside && lo <= 0.0 && 0.0 <= hi;
    if (origin_inside) visit(Vector::Zero(d));

    const long full = grid_size(opts.grid, d);
    if (full <= opts.max_points) {
      std::vector<int> idx(d, 0);
      Vector x(d);
      for (long g = 0; g < full; ++g) {
        for (int k = 0; k < d; ++k) {
          const double t = opts.grid > 1 ? static_cast<double>(idx[k]) / (opts.grid - 1) : 0.5;
          x[k] = box[k].first + t * (box[k].second - box[k].first);
        }
        visit(x);
        for (int k = 0; k < d && ++idx[k] == opts.grid; ++k) idx[k] = 0;
      }
    } else {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Vector x(d);
      for (int s = 0; s < opts.max_points; ++s) {
        for (int k = 0; k < d; ++k) x[k] = box[k].first + u(gen) * (box[k].second - box[k].first);
        visit(x);
      }
    }

    // Rays from a feasible point to the boundary of the feasible set.
    if (anchor.size() == d && opts.rays > 0) {
      std::normal_distribution<double> nd;
      double diam = 0.0;
      for (const auto& [lo, hi] : box) diam += (hi - lo) * (hi - lo);
      diam = std::sqrt(diam);
      const Vector a = anchor;
      for (int r = 0; r < opts.rays; ++r) {
        Vector dir(d);
        for (int k = 0; k < d; ++k) dir[k] = nd(gen);
        if (dir.norm() == 0.0) continue;
        dir /= dir.norm();
        double lo = 0.0, hi = diam;
        for (int it = 0; it < 40; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (feasible(a + mid * dir)) lo = mid;
          else hi = mid;
        }
        visit(a + lo * dir);
      }
    }
    res.feasible_points[i] = count;
    if (count == 0)
      res.warnings.push_back("coordinate " + std::to_string(i + 1) + ": no feasible sample point");
  }
  return res;
}

std::string level_sets_csv(const Row& row, const TemplateBasis& basis, const std::vector<std::string>& vars,
                           const Box& box, int grid) {
  const int d = static_cast<int>(box.size());
  for (const auto& [lo, hi] : box)
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw error("level sets need a bounded box");
  const long total = grid_size(grid, d);
  if (total > 5000000) throw error("level-set grid too large: " + std::to_string(total) + " points");
  std::ostringstream os;
  os << "template";
  for (int k = 0; k < d; ++k) os << "," << (k < static_cast<int>(vars.size()) ? vars[k] : "x" + std::to_string(k + 1));
  os << ",value\n";
  char buf[64];
  std::vector<int> idx(d, 0);
  Vector x(d);
  for (long g = 0; g < total; ++g) {
    for (int k = 0; k < d; ++k) {
      const double t = grid > 1 ? static_cast<double>(idx[k]) / (grid - 1) : 0.5;
      x[k] = box[k].first + t * (box[k].second - box[k].first);
    }
    for (size_t p = 0; p < basis.size(); ++p) {
      if (!std::isfinite(row[p])) continue;
      os << basis[p].name;
      for (int k = 0; k < d; ++k) {
        std::snprintf(buf, sizeof buf, ",%.9g", x[k]);
        os << buf;
      }
      std::snprintf(buf, sizeof buf, ",%.9g\n", basis[p].form.evaluate(x) - row[p]);
      os << buf;
    }
    for (int k = 0; k < d && ++idx[k] == grid; ++k) idx[k] = 0;
  }
  return os.str();
}

} // namespace qtp
