#include "qtp/solvers.hpp"

#include "qtp/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace qtp {

Matrix SdpProblem::lmi(double eta, const Vector& lambda) const {
  Matrix m = f0 + eta * g_eta;
  for (int k = 0; k < multipliers(); ++k) m += lambda[k] * g[k];
  return m;
}

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

// Largest step alpha with x + alpha*dx PSD (inf when unconstrained).
double max_step(const Matrix& x, const Matrix& dx) {
  if (x.rows() == 0) return inf;
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix l_inv_dx = llt.matrixL().solve(dx);
  Matrix s = llt.matrixL().solve(l_inv_dx.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(s), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  return lmin >= 0.0 ? inf : -1.0 / lmin;
}

double max_step(const Vector& x, const Vector& dx) {
  double a = inf;
  for (Eigen::Index k = 0; k < x.size(); ++k)
    if (dx[k] < 0.0) a = std::min(a, -x[k] / dx[k]);
  return a;
}

// Conic problem in dual standard form:
//   max b'y  s.t.  C_s - sum y_i A_i = Z_s >= 0 (PSD),  c_l - A_l y = z_l >= 0.
struct Conic {
  Matrix c_s;
  std::vector<Matrix> a_s;
  Vector c_l;
  Matrix a_l; // rows: LP cone entries, cols: variables
  Vector b;
};

struct ConicResult {
  SolveStatus status = SolveStatus::numerical_failure;
  Vector y;
  double gap = 0.0;
  int iterations = 0;
};

ConicResult solve_conic_scaled(const Conic& p, const SdpOptions& opts);

// Variables and the constant term are normalized before solving.
ConicResult solve_conic(const Conic& p, const SdpOptions& opts) {
  const int m = static_cast<int>(p.b.size());
  const int nl = static_cast<int>(p.c_l.size());
  Conic q = p;
  Vector s = Vector::Ones(m);
  for (int i = 0; i < m; ++i) {
    const double an = std::sqrt(p.a_s[i].squaredNorm() + (nl ? p.a_l.col(i).squaredNorm() : 0.0));
    if (an > 0.0) s[i] = an;
    q.a_s[i] /= s[i];
    if (nl) q.a_l.col(i) /= s[i];
    q.b[i] /= s[i];
  }
  const double gamma = std::max(1.0, std::sqrt(p.c_s.squaredNorm() + p.c_l.squaredNorm()));
  q.c_s /= gamma;
  q.c_l /= gamma;
  ConicResult r = solve_conic_scaled(q, opts);
  r.y = (gamma * r.y).cwiseQuotient(s);
  return r;
}

// Infeasible-start primal-dual path following (HKM direction, Mehrotra
// predictor-corrector).
ConicResult solve_conic_scaled(const Conic& p, const SdpOptions& opts) {
  const int m = static_cast<int>(p.b.size());
  const int ns = static_cast<int>(p.c_s.rows());
  const int nl = static_cast<int>(p.c_l.size());
  const int ncone = ns + nl;
  ConicResult res;
  res.y = Vector::Zero(m);
  if (ncone == 0) {
    res.status = p.b.isZero() ? SolveStatus::optimal : SolveStatus::unbounded;
    return res;
  }

  double a_max = 0.0;
  for (int i = 0; i < m; ++i) {
    double an = p.a_s[i].norm() + (nl ? p.a_l.col(i).norm() : 0.0);
    a_max = std::max(a_max, an);
  }
  double xi = std::max(10.0, std::sqrt(static_cast<double>(ncone)));
  for (int i = 0; i < m; ++i) {
    double an = p.a_s[i].norm() + (nl ? p.a_l.col(i).norm() : 0.0);
    xi = std::max(xi, ncone * (1.0 + std::abs(p.b[i])) / (1.0 + an));
  }
  const double c_norm = std::sqrt(p.c_s.squaredNorm() + p.c_l.squaredNorm());
  const double zeta = std::max({10.0, std::sqrt(static_cast<double>(ncone)), a_max, c_norm});

  Matrix xs = xi * Matrix::Identity(ns, ns);
  Matrix zs = zeta * Matrix::Identity(ns, ns);
  Vector xl = Vector::Constant(nl, xi);
  Vector zl = Vector::Constant(nl, zeta);
  Vector y = Vector::Zero(m);

  const double b_norm = p.b.norm();
  double best_score = inf;
  Vector best_y = y;
  double best_gap = inf;
  bool best_ok = false;

  for (int it = 0; it < opts.max_newton_iters; ++it) {
    res.iterations = it + 1;
    // Residuals.
    Vector rp(m);
    for (int i = 0; i < m; ++i)
      rp[i] = p.b[i] - inner(p.a_s[i], xs) - (nl ? p.a_l.col(i).dot(xl) : 0.0);
    Matrix rd_s = p.c_s - zs;
    for (int i = 0; i < m; ++i) rd_s -= y[i] * p.a_s[i];
    Vector rd_l = p.c_l - zl - (nl ? Vector(p.a_l * y) : Vector::Zero(0));

    const double pobj = inner(p.c_s, xs) + p.c_l.dot(xl);
    const double dobj = p.b.dot(y);
    const double gap = inner(xs, zs) + xl.dot(zl);
    const double mu = gap / ncone;
    const double pinf = rp.norm() / (1.0 + b_norm);
    const double dinf = std::sqrt(rd_s.squaredNorm() + rd_l.squaredNorm()) / (1.0 + c_norm);
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    const double score = std::max({pinf, dinf, relgap});
    if (score < best_score) {
      best_score = score;
      best_y = y;
      best_gap = relgap;
      best_ok = dinf <= 1e-6 && relgap <= 1e-5 && pinf <= 1e-5;
    }
    if (pinf <= opts.feas_tol && dinf <= opts.feas_tol && relgap <= opts.gap_tol) {
      res.status = SolveStatus::optimal;
      res.y = y;
      res.gap = relgap;
      return res;
    }
    // Divergence: an exploding primal means no dual-feasible point (the LMI
    // has no solution); an exploding dual objective means eta -> -inf.
    const double xnorm = std::sqrt(xs.squaredNorm() + xl.squaredNorm());
    if (xnorm > 1e12 * (1.0 + c_norm) && dinf > 1e-6) {
      res.status = SolveStatus::infeasible;
      return res;
    }
    if (dobj > 1e12 * (1.0 + std::abs(pobj)) && dinf <= 1e-6 && y.norm() > 1e10) {
      res.status = SolveStatus::unbounded;
      return res;
    }

    // Schur complement.
    Eigen::LLT<Matrix> zllt(zs);
    if (ns > 0 && zllt.info() != Eigen::Success) break;
    Matrix zinv = ns ? Matrix(zllt.solve(Matrix::Identity(ns, ns))) : Matrix(0, 0);
    zinv = sym(zinv);
    std::vector<Matrix> xaz(m);
    for (int j = 0; j < m; ++j) xaz[j] = xs * p.a_s[j] * zinv;
    Matrix schur(m, m);
    const Vector ratio = nl ? Vector(xl.cwiseQuotient(zl)) : Vector::Zero(0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double v = ns ? inner(p.a_s[i], xaz[j].transpose()) : 0.0;
        if (nl) v += (p.a_l.col(i).array() * ratio.array() * p.a_l.col(j).array()).sum();
        schur(i, j) = v;
      }
    schur = sym(schur);
    const double reg = 1e-14 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
    schur.diagonal().array() += reg;
    Eigen::LDLT<Matrix> schur_ldlt(schur);
    if (schur_ldlt.info() != Eigen::Success) break;

    struct Direction {
      Matrix dxs, dzs;
      Vector dxl, dzl, dy;
    };
    auto direction = [&](const Matrix& rc_s, const Vector& rc_l) {
      Direction d;
      Matrix t = (rc_s - xs * rd_s) * zinv;
      Vector rhs(m);
      for (int i = 0; i < m; ++i) {
        double v = rp[i] - (ns ? inner(p.a_s[i], t.transpose()) : 0.0);
        if (nl)
          v -= (p.a_l.col(i).array() * (rc_l - xl.cwiseProduct(rd_l)).array() / zl.array()).sum();
        rhs[i] = v;
      }
      d.dy = schur_ldlt.solve(rhs);
      d.dzs = rd_s;
      for (int i = 0; i < m; ++i) d.dzs -= d.dy[i] * p.a_s[i];
      d.dxs = sym((rc_s - xs * d.dzs) * zinv);
      if (nl) {
        d.dzl = rd_l - p.a_l * d.dy;
        d.dxl = (rc_l - xl.cwiseProduct(d.dzl)).cwiseQuotient(zl);
      } else {
        d.dzl = d.dxl = Vector::Zero(0);
      }
      return d;
    };

    // Predictor.
    Matrix rc_s = -xs * zs;
    Vector rc_l = -xl.cwiseProduct(zl);
    Direction aff = direction(rc_s, rc_l);
    double ap = std::min({1.0, max_step(xs, aff.dxs), max_step(xl, aff.dxl)});
    double ad = std::min({1.0, max_step(zs, aff.dzs), max_step(zl, aff.dzl)});
    const double gap_aff = inner(xs + ap * aff.dxs, zs + ad * aff.dzs) +
                           (xl + ap * aff.dxl).dot(zl + ad * aff.dzl);
    double sigma = std::pow(std::max(0.0, gap_aff) / std::max(gap, 1e-300), 3.0);
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Corrector.
    rc_s = sigma * mu * Matrix::Identity(ns, ns) - xs * zs - aff.dxs * aff.dzs;
    rc_l = Vector::Constant(nl, sigma * mu) - xl.cwiseProduct(zl) - aff.dxl.cwiseProduct(aff.dzl);
    Direction d = direction(rc_s, rc_l);
    const double tau = 0.95;
    ap = std::min({1.0, tau * max_step(xs, d.dxs), tau * max_step(xl, d.dxl)});
    ad = std::min({1.0, tau * max_step(zs, d.dzs), tau * max_step(zl, d.dzl)});
    if (ap < 1e-14 && ad < 1e-14) break;

    xs = sym(xs + ap * d.dxs);
    xl += ap * d.dxl;
    zs = sym(zs + ad * d.dzs);
    zl += ad * d.dzl;
    y += ad * d.dy;
  }
  res.y = best_y;
  res.gap = best_gap;
  res.status = best_ok ? SolveStatus::optimal : SolveStatus::numerical_failure;
  return res;
}

// Orthonormal basis of the null space of `m` (columns).
Matrix null_space(const Matrix& m, double tol) {
  const int n = static_cast<int>(m.cols());
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  const double smax = s.size() ? s.maxCoeff() : 0.0;
  int rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s[k] > tol * std::max(1.0, smax)) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

bool is_shor_eta_block(const Matrix& g_eta) {
  Matrix expected = n_matrix(-1.0, static_cast<int>(g_eta.rows()));
  return (g_eta - expected).cwiseAbs().maxCoeff() == 0.0;
}

} // namespace

SolveOutcome solve_sdp(const SdpProblem& p, const SdpOptions& opts) {
  const int size = p.size();
  const int k = p.multipliers();
  if (size > opts.max_block_size)
    throw solver_error("LMI block of size " + std::to_string(size) + " exceeds the configured maximum",
                       -1, -1);
  auto check = [&](const Matrix& m) {
    if (m.rows() != size || m.cols() != size) throw dimension_error("solve_sdp: block size mismatch");
  };
  check(p.g_eta);
  for (const auto& g : p.g) check(g);

  SolveOutcome out;
  out.lambda = Vector::Zero(k);
  const int nvar = k + 1; // y = (eta, lambda)
  auto block = [&](int v) -> const Matrix& { return v == 0 ? p.g_eta : p.g[v - 1]; };

  // Directions x (with x_0 = 0) on which every lower-right block vanishes: the
  // LMI restricted there is linear, so it forces equalities and drops out.
  const int d = size - 1;
  Matrix w(d, 0);
  if (d > 0) {
    Matrix stacked((nvar + 1) * d, d);
    stacked.topRows(d) = p.f0.bottomRightCorner(d, d);
    for (int v = 0; v < nvar; ++v) stacked.block((v + 1) * d, 0, d, d) = block(v).bottomRightCorner(d, d);
    w = null_space(stacked, 1e-12);
  }
  Matrix basis; // columns span the reduced LMI space
  Matrix eq_a(w.cols(), nvar);
  Vector eq_b(w.cols());
  {
    const int kept = d - static_cast<int>(w.cols());
    basis = Matrix::Zero(size, 1 + kept);
    basis(0, 0) = 1.0;
    if (kept > 0) {
      Matrix u = null_space(w.transpose(), 1e-12);
      basis.bottomRightCorner(d, kept) = u;
    }
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (int v = 0; v < nvar; ++v) eq_a(j, v) = (block(v).block(0, 1, 1, d) * w.col(j))(0, 0);
      eq_b[j] = -(p.f0.block(0, 1, 1, d) * w.col(j))(0, 0);
    }
  }

  // y = y0 + N z.
  Vector y0 = Vector::Zero(nvar);
  Matrix nspace = Matrix::Identity(nvar, nvar);
  if (eq_a.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(eq_a);
    y0 = cod.solve(eq_b);
    if ((eq_a * y0 - eq_b).norm() > 1e-9 * (1.0 + eq_b.norm())) {
      out.status = SolveStatus::infeasible;
      return out;
    }
    nspace = null_space(eq_a, 1e-12);
  }
  const int m = static_cast<int>(nspace.cols());

  auto lin = [&](const Vector& coeff) {
    Matrix acc = Matrix::Zero(size, size);
    for (int v = 0; v < nvar; ++v)
      if (coeff[v] != 0.0) acc += coeff[v] * block(v);
    return acc;
  };

  Conic c;
  c.c_s = -basis.transpose() * (p.f0 + lin(y0)) * basis;
  c.a_s.resize(m);
  for (int i = 0; i < m; ++i) c.a_s[i] = basis.transpose() * lin(nspace.col(i)) * basis;
  c.b = -nspace.row(0).transpose(); // maximize -eta

  std::vector<int> lp_rows;
  for (int v = 1; v < nvar; ++v) {
    if (nspace.row(v).cwiseAbs().maxCoeff() > 1e-12) {
      lp_rows.push_back(v);
    } else if (y0[v] < -1e-9) {
      out.status = SolveStatus::infeasible;
      return out;
    }
  }
  c.c_l.resize(lp_rows.size());
  c.a_l.resize(lp_rows.size(), m);
  for (size_t r = 0; r < lp_rows.size(); ++r) {
    c.c_l[r] = y0[lp_rows[r]];
    c.a_l.row(r) = -nspace.row(lp_rows[r]);
  }

  ConicResult cr = solve_conic(c, opts);
  out.status = cr.status;
  out.iterations = cr.iterations;
  out.gap = cr.gap;
  if (cr.status != SolveStatus::optimal) return out;

  Vector y = y0 + nspace * cr.y;
  out.eta = y[0];
  out.lambda = y.tail(k).cwiseMax(0.0);

  // Shift eta so the assembled LMI is certified at the returned point.
  if (is_shor_eta_block(p.g_eta)) {
    Matrix f = p.lmi(0.0, out.lambda);
    if (d > 0) {
      double eta_min = maximize_quadratic(f.bottomRightCorner(d, d), 2.0 * f.block(1, 0, d, 1), f(0, 0));
      if (std::isfinite(eta_min)) out.eta = std::max(out.eta, eta_min);
    } else {
      out.eta = std::max(out.eta, f(0, 0));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

SdpProblem shor_problem(const QuadraticForm& objective,
                        const std::vector<ShorConstraint>& constraints,
                        const std::optional<QuadraticForm>& guard) {
  const int size = objective.dim() + 1;
  SdpProblem p;
  p.f0 = shor_matrix(objective);
  p.g_eta = n_matrix(-1.0, size);
  for (const auto& con : constraints) {
    if (con.form.dim() != objective.dim()) throw dimension_error("shor_problem: constraint dimension");
    p.g.push_back(n_matrix(con.bound, size) - shor_matrix(con.form));
  }
  if (guard) {
    if (guard->dim() != objective.dim()) throw dimension_error("shor_problem: guard dimension");
    p.g.push_back(-shor_matrix(*guard));
  }
  return p;
}

ShorResult shor_maximize(const QuadraticForm& objective,
                         const std::vector<ShorConstraint>& constraints,
                         const std::optional<QuadraticForm>& guard,
                         const SdpOptions& opts) {
  ShorResult r;
  const int k = static_cast<int>(constraints.size());
  r.multipliers = Vector::Zero(k);

  auto sound_value = [&](const Vector& lambda, double mu) {
    std::vector<WeightedConstraint> wc;
    double shift = 0.0;
    for (int q = 0; q < k; ++q) {
      wc.push_back({&constraints[q].form, lambda[q]});
      if (lambda[q] != 0.0) shift += lambda[q] * constraints[q].bound;
    }
    if (guard) wc.push_back({&*guard, mu});
    return shift + policy_value(objective, wc);
  };

  if (k == 0 && !guard) {
    r.bound = sound_value(r.multipliers, 0.0);
    r.status = std::isfinite(r.bound) ? SolveStatus::optimal : SolveStatus::infeasible;
    return r;
  }

  SolveOutcome so = solve_sdp(shor_problem(objective, constraints, guard), opts);
  r.status = so.status;
  if (so.status != SolveStatus::optimal) {
    r.bound = inf;
    return r;
  }
  for (int q = 0; q < k; ++q) r.multipliers[q] = so.lambda[q] < 1e-9 ? 0.0 : so.lambda[q];
  r.mu = guard ? (so.lambda[k] < 1e-9 ? 0.0 : so.lambda[k]) : 0.0;
  double v = sound_value(r.multipliers, r.mu);
  if (!std::isfinite(v)) {
    // Multipliers on the boundary of the dual cone: retry without clamping,
    // then push the weights of convex quadratic constraints slightly inward.
    Vector raw = so.lambda.head(k).cwiseMax(0.0);
    double raw_mu = guard ? std::max(0.0, so.lambda[k]) : 0.0;
    auto convex = [](const QuadraticForm& f) {
      return !f.is_linear() && Eigen::SelfAdjointEigenSolver<Matrix>(f.a(), Eigen::EigenvaluesOnly).eigenvalues().minCoeff() >= 0.0;
    };
    std::vector<bool> push(k);
    for (int q = 0; q < k; ++q) push[q] = convex(constraints[q].form);
    const bool push_mu = guard && convex(*guard);
    for (double delta : {0.0, 1e-9, 1e-7, 1e-5}) {
      Vector l = raw;
      double m = raw_mu;
      for (int q = 0; q < k; ++q)
        if (push[q]) l[q] += delta * (1.0 + l[q]);
      if (push_mu) m += delta * (1.0 + m);
      const double t = sound_value(l, m);
      if (std::isfinite(t)) {
        r.multipliers = l;
        r.mu = m;
        v = t;
        break;
      }
    }
  }
  r.bound = std::isfinite(v) ? v : so.eta;
  return r;
}

} // namespace qtp
