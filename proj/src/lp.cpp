#include "qtp/solvers.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace qtp {

const char* to_string(SolveStatus s) {
  switch (s) {
  case SolveStatus::optimal: return "optimal";
  case SolveStatus::infeasible: return "infeasible";
  case SolveStatus::unbounded: return "unbounded";
  case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "?";
}

namespace {

// Dense tableau over  A_std u = b_std, u >= 0, with rows kept at b_std >= 0.
// Column layout: [z+ (n) | z- (n) | slack (m) | artificial (m)].
class Tableau {
public:
  Tableau(const LpProblem& p, const LpOptions& opts)
      : m_(static_cast<int>(p.a.rows())), n_(static_cast<int>(p.a.cols())), opts_(opts) {
    cols_ = 2 * n_ + 2 * m_;
    t_ = Matrix::Zero(m_, cols_ + 1);
    std_ = Matrix::Zero(m_, 2 * n_ + m_);
    basis_.assign(m_, -1);
    for (int i = 0; i < m_; ++i) {
      const double sign = p.b[i] < 0 ? -1.0 : 1.0;
      for (int j = 0; j < n_; ++j) {
        std_(i, j) = p.a(i, j);
        std_(i, n_ + j) = -p.a(i, j);
      }
      std_(i, 2 * n_ + i) = 1.0;
      t_.block(i, 0, 1, 2 * n_ + m_) = sign * std_.row(i);
      t_(i, cols_) = sign * p.b[i];
      if (sign > 0) {
        basis_[i] = 2 * n_ + i;
      } else {
        t_(i, 2 * n_ + m_ + i) = 1.0;
        basis_[i] = 2 * n_ + m_ + i;
      }
    }
    orig_ = t_;
  }

  int artificial_begin() const { return 2 * n_ + m_; }

  // Minimizes cost'u over the current basis. Columns >= `limit` never enter.
  // Optimality is only accepted on a tableau rebuilt from the original data.
  SolveStatus run(const Vector& cost, int limit) {
    bool fresh = false;
    for (int pivots = 0; pivots < opts_.max_pivots; ++pivots) {
      if (pivots > 0 && pivots % 50 == 0) fresh = refactor();
      Vector reduced = reduced_costs(cost);
      int enter = -1;
      std::vector<bool> basic(cols_, false);
      for (int b : basis_) basic[b] = true;
      for (int j = 0; j < limit; ++j)
        if (reduced[j] < -opts_.pivot_tol * (1.0 + std::abs(cost[j])) && !twin_basic(j, basic)) {
          enter = j;
          break;
        }
      if (enter < 0) {
        if (fresh) return SolveStatus::optimal;
        fresh = refactor();
        if (!fresh) return SolveStatus::numerical_failure;
        --pivots;
        continue;
      }
      fresh = false;
      // Two passes: the step allowed with a small feasibility slack, then the
      // largest pivot element among the rows blocking within that step.
      double bound = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a > opts_.pivot_tol) bound = std::min(bound, (std::max(t_(i, cols_), 0.0) + opts_.feas_tol) / a);
      }
      if (!std::isfinite(bound)) return SolveStatus::unbounded;
      int leave = -1;
      for (int i = 0; i < m_; ++i) {
        const double a = t_(i, enter);
        if (a <= opts_.pivot_tol || std::max(t_(i, cols_), 0.0) / a > bound) continue;
        if (leave < 0 || a > t_(leave, enter) * (1.0 + 1e-12) ||
            (a >= t_(leave, enter) * (1.0 - 1e-12) && basis_[i] < basis_[leave]))
          leave = i;
      }
      pivot(leave, enter);
    }
    return SolveStatus::numerical_failure;
  }

  // Pivots zero-level artificials out of the basis; redundant rows are zeroed.
  void drive_out_artificials() {
    for (int i = 0; i < m_; ++i) {
      if (basis_[i] < artificial_begin()) continue;
      int col = -1;
      for (int j = 0; j < artificial_begin(); ++j)
        if (std::abs(t_(i, j)) > 1e-9) {
          col = j;
          break;
        }
      if (col >= 0) pivot(i, col);
      else redundant_.push_back(i);
    }
  }

  Vector solution() const {
    Vector u = Vector::Zero(cols_);
    for (int i = 0; i < m_; ++i) u[basis_[i]] = t_(i, cols_);
    return u;
  }

  // Duals y >= 0 of the original rows, from B' y_std = c_B.
  Vector duals(const Vector& cost) const {
    std::vector<int> rows;
    for (int i = 0; i < m_; ++i)
      if (std::find(redundant_.begin(), redundant_.end(), i) == redundant_.end()) rows.push_back(i);
    Vector y = Vector::Zero(m_);
    if (rows.empty()) return y;
    const int k = static_cast<int>(rows.size());
    Matrix b(k, k);
    Vector cb(k);
    for (int r = 0; r < k; ++r) {
      const int col = basis_[rows[r]];
      cb[r] = cost[col];
      for (int s = 0; s < k; ++s) b(s, r) = col < std_.cols() ? std_(rows[s], col) : 0.0;
    }
    Vector ystd = b.transpose().fullPivLu().solve(cb);
    for (int s = 0; s < k; ++s) y[rows[s]] = std::max(0.0, -ystd[s]);
    return y;
  }

private:
  // z+ and z- of one variable are never basic together.
  bool twin_basic(int j, const std::vector<bool>& basic) const {
    if (j < n_) return basic[j + n_];
    if (j < 2 * n_) return basic[j - n_];
    return false;
  }

  // t = B^-1 [A | b] for the current basis; tiny negative right-hand sides are
  // round-off and are cleared.
  bool refactor() {
    Matrix b(m_, m_);
    for (int i = 0; i < m_; ++i) b.col(i) = orig_.col(basis_[i]);
    Eigen::PartialPivLU<Matrix> lu(b);
    Matrix t = lu.solve(orig_);
    if (!t.allFinite()) return false;
    const double scale = 1.0 + orig_.col(cols_).cwiseAbs().maxCoeff();
    for (int i = 0; i < m_; ++i)
      if (t(i, cols_) < 0.0 && t(i, cols_) > -opts_.feas_tol * scale) t(i, cols_) = 0.0;
    t_ = std::move(t);
    return true;
  }

  Vector reduced_costs(const Vector& cost) const {
    Vector r = cost.head(cols_);
    for (int i = 0; i < m_; ++i) {
      const double cb = cost[basis_[i]];
      if (cb != 0.0) r -= cb * t_.row(i).head(cols_).transpose();
    }
    return r;
  }

  void pivot(int row, int col) {
    t_.row(row) /= t_(row, col);
    for (int i = 0; i < m_; ++i) {
      if (i == row) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row);
    }
    basis_[row] = col;
  }

  int m_;
  int n_;
  int cols_;
  LpOptions opts_;
  Matrix t_;
  Matrix orig_;
  Matrix std_;
  std::vector<int> basis_;
  std::vector<int> redundant_;
};

} // namespace

LpOutcome solve_lp(const LpProblem& p, const LpOptions& opts) {
  const int m = static_cast<int>(p.a.rows());
  const int n = static_cast<int>(p.a.cols());
  LpOutcome out;
  out.z = Vector::Zero(n);
  out.dual = Vector::Zero(m);
  if (m == 0) {
    out.status = p.c.isZero() ? SolveStatus::optimal : SolveStatus::unbounded;
    return out;
  }

  Tableau tab(p, opts);
  const int total = 2 * n + 2 * m;
  Vector phase1 = Vector::Zero(total);
  phase1.tail(m).setOnes();
  if (tab.run(phase1, total) != SolveStatus::optimal) return out;
  const Vector u1 = tab.solution();
  if (u1.tail(m).sum() > opts.feas_tol * (1.0 + p.b.cwiseAbs().maxCoeff())) {
    out.status = SolveStatus::infeasible;
    return out;
  }
  tab.drive_out_artificials();

  Vector cost = Vector::Zero(total);
  cost.head(n) = p.c;
  cost.segment(n, n) = -p.c;
  const SolveStatus st = tab.run(cost, tab.artificial_begin());
  if (st != SolveStatus::optimal) {
    out.status = st;
    return out;
  }
  const Vector u = tab.solution();
  out.z = u.head(n) - u.segment(n, n);
  out.value = p.c.dot(out.z);
  out.dual = tab.duals(cost);
  out.status = SolveStatus::optimal;
  return out;
}

} // namespace qtp
