#pragma once

// Shared helpers for the test binaries: seeded random data and brute-force
// reference computations that do not go through the library's solvers.

#include "qtp/quadforms.hpp"
#include "qtp/solvers.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace qtp::testing {

inline constexpr double inf = std::numeric_limits<double>::infinity();

class Rng {
public:
  explicit Rng(unsigned seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
  Vector vector(int n, double lo = -1.0, double hi = 1.0) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }
  Matrix matrix(int r, int c, double lo = -1.0, double hi = 1.0) {
    Matrix m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
    return m;
  }
  Matrix symmetric(int n, double lo = -1.0, double hi = 1.0) {
    Matrix m = matrix(n, n, lo, hi);
    return 0.5 * (m + m.transpose());
  }
  QuadraticForm form(int n, double scale = 1.0) {
    return QuadraticForm(symmetric(n) * scale, vector(n) * scale, uniform(-1, 1) * scale);
  }
  std::mt19937& engine() { return gen_; }

private:
  std::mt19937 gen_;
};

inline double rel_diff(double a, double b) { return std::abs(a - b) / (1.0 + std::max(std::abs(a), std::abs(b))); }

// Minimizes a convex function on [lo, hi] by golden-section search.
inline double golden_min(const std::function<double(double)>& f, double lo, double hi, int iters = 120) {
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return std::min({f(a), f(b), f1, f2});
}

// Smallest eta with F + eta*G_eta <= 0 for fixed multipliers, by bisection on
// the largest eigenvalue. +inf when no eta in range works.
inline double eta_for(const SdpProblem& p, const Vector& lambda, double range = 1e4) {
  Matrix base = p.f0;
  for (int k = 0; k < p.multipliers(); ++k) base += lambda[k] * p.g[k];
  auto feasible = [&](double eta) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(base + eta * p.g_eta, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff() <= 0.0;
  };
  if (!feasible(range)) return inf;
  double lo = -range, hi = range;
  if (feasible(lo)) return lo;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

// Nested golden-section reference for SDPs with at most two multipliers,
// searching each multiplier over [0, lambda_max].
inline double reference_sdp(const SdpProblem& p, double lambda_max = 20.0) {
  const int k = p.multipliers();
  if (k == 0) return eta_for(p, Vector());
  auto clip = [](double v) { return std::min(v, 1e6); };
  if (k == 1)
    return golden_min([&](double l) { return clip(eta_for(p, Vector::Constant(1, l))); }, 0.0, lambda_max);
  return golden_min(
      [&](double l0) {
        return golden_min(
            [&](double l1) {
              Vector l(2);
              l << l0, l1;
              return clip(eta_for(p, l));
            },
            0.0, lambda_max, 60);
      },
      0.0, lambda_max, 60);
}

// Maximum of f over a uniform grid on the box [lo, hi]^d with `n` points per axis.
inline double grid_max(const std::function<double(const Vector&)>& f,
                       const std::function<bool(const Vector&)>& feasible, const Vector& lo,
                       const Vector& hi, int n) {
  const int d = static_cast<int>(lo.size());
  std::vector<int> idx(d, 0);
  double best = -inf;
  Vector x(d);
  while (true) {
    for (int i = 0; i < d; ++i) x[i] = n == 1 ? lo[i] : lo[i] + (hi[i] - lo[i]) * idx[i] / (n - 1);
    if (feasible(x)) best = std::max(best, f(x));
    int i = 0;
    while (i < d && ++idx[i] == n) idx[i++] = 0;
    if (i == d) break;
  }
  return best;
}

} // namespace qtp::testing
