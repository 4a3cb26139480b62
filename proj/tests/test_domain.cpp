#include "doctest.h"

#include "qtp/domain.hpp"
#include "qtp/errors.hpp"
#include "support.hpp"

#include <cmath>

using namespace qtp;
using qtp::testing::Rng;

namespace {

TemplateBasis oscillator_basis() {
  Matrix x2 = Matrix::Zero(2, 2), v2 = Matrix::Zero(2, 2), l(2, 2);
  x2(0, 0) = 1;
  v2(1, 1) = 1;
  l << 2, 1, 1, 3;
  return {{"x2", QuadraticForm(x2, Vector::Zero(2))},
          {"v2", QuadraticForm(v2, Vector::Zero(2))},
          {"L", QuadraticForm(l, Vector::Zero(2))}};
}

TemplateBasis random_basis(Rng& rng, int d, int m) {
  TemplateBasis basis;
  for (int p = 0; p < m; ++p) {
    if (p % 2 == 0) {
      basis.push_back({"l" + std::to_string(p), QuadraticForm::linear(rng.vector(d))});
    } else {
      const Matrix r = rng.matrix(d, d);
      basis.push_back({"q" + std::to_string(p), QuadraticForm(r * r.transpose(), rng.vector(d, -0.3, 0.3))});
    }
  }
  return basis;
}

std::vector<Vector> random_points(Rng& rng, int d, int n) {
  std::vector<Vector> pts;
  for (int i = 0; i < n; ++i) pts.push_back(rng.vector(d, -2, 2));
  return pts;
}

} // namespace

TEST_CASE("approximate comparisons") {
  CHECK(approx_equal(1.0, 1.0 + 1e-8));
  CHECK_FALSE(approx_equal(1.0, 1.01));
  CHECK(approx_equal(plus_inf, plus_inf));
  CHECK_FALSE(approx_equal(plus_inf, 1e300));
  CHECK(approx_leq(1.0 + 1e-8, 1.0));
  CHECK(approx_leq(minus_inf, 0.0));
  CHECK(approx_leq(5.0, plus_inf));
  CHECK_FALSE(approx_leq(plus_inf, 5.0));
  CHECK(scaled_bound(0.0, plus_inf) == 0.0);
  CHECK(scaled_bound(2.0, plus_inf) == plus_inf);
  CHECK(scaled_bound(2.0, 3.0) == 6.0);
}

TEST_CASE("normalize, join and the order") {
  CHECK(normalize({1.0, minus_inf, 2.0}) == Row{minus_inf, minus_inf, minus_inf});
  CHECK(normalize({1.0, plus_inf}) == Row{1.0, plus_inf});
  CHECK(is_empty(bottom_row(3)));
  CHECK_FALSE(is_empty(top_row(3)));
  CHECK(bottom(2, 3).size() == 2);

  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    Row a(4), b(4);
    for (int k = 0; k < 4; ++k) {
      a[k] = rng.uniform(-3, 3);
      b[k] = rng.uniform(-3, 3);
    }
    const Row j = join(a, b);
    CHECK(leq(a, j));
    CHECK(leq(b, j));
    CHECK(join(a, b) == join(b, a));
    CHECK(join(a, a) == a);
    CHECK(leq(bottom_row(4), a));
    CHECK(leq(a, top_row(4)));
    CHECK(join(bottom_row(4), a) == a);
  }
}

TEST_CASE("Galois connection between point sets and rows") {
  Rng rng(17);
  for (int trial = 0; trial < 300; ++trial) {
    const int d = rng.integer(1, 3), m = rng.integer(1, 4);
    const TemplateBasis basis = random_basis(rng, d, m);
    const std::vector<Vector> pts = random_points(rng, d, rng.integer(1, 6));
    Row v(m);
    for (double& b : v) b = rng.uniform(-1, 3);
    // X^dagger <= v  iff  X is inside v*
    bool inside = true;
    for (const Vector& x : pts) inside = inside && concretize_membership(v, basis, x);
    CHECK(leq(support_of_sample(pts, basis), v) == inside);
    // X is inside (X^dagger)*
    const Row s = support_of_sample(pts, basis);
    for (const Vector& x : pts) CHECK(concretize_membership(s, basis, x));
  }
  CHECK(support_of_sample({}, oscillator_basis()) == bottom_row(3));
  CHECK_FALSE(concretize_membership(bottom_row(3), oscillator_basis(), Vector::Zero(2)));
}

TEST_CASE("closure of the oscillator box") {
  // max x^2 over x'Lx <= 7 is 7 (L^-1)_00 with L^-1 = [[3,-1],[-1,2]]/5.
  const Row c = closure({7, 7, 7}, oscillator_basis());
  CHECK(c[0] == doctest::Approx(4.2).epsilon(1e-6));
  CHECK(c[1] == doctest::Approx(2.8).epsilon(1e-6));
  CHECK(c[2] == doctest::Approx(7.0).epsilon(1e-6));
  CHECK(approx_equal(closure(c, oscillator_basis()), c, {1e-6, 1e-6}));
  CHECK(closure(bottom_row(3), oscillator_basis()) == bottom_row(3));
}

TEST_CASE("closure is contracting, idempotent and keeps every point") {
  Rng rng(29);
  for (int trial = 0; trial < 60; ++trial) {
    const int d = rng.integer(1, 3), m = rng.integer(2, 4);
    const TemplateBasis basis = random_basis(rng, d, m);
    const std::vector<Vector> pts = random_points(rng, d, 5);
    Row v = support_of_sample(pts, basis);
    for (double& b : v) b += rng.uniform(0, 1);
    const Row c = closure(v, basis);
    CHECK(approx_leq(c, v));
    CHECK(approx_equal(closure(c, basis), c, {1e-5, 1e-5}));
    for (const Vector& x : pts)
      for (int p = 0; p < m; ++p) CHECK(basis[p].form.evaluate(x) <= c[p] + 1e-6);
  }
}

TEST_CASE("meet") {
  const Row m = meet({7, 7, 7}, {10, 10, 7}, oscillator_basis());
  CHECK(m[0] == doctest::Approx(4.2).epsilon(1e-6));
  CHECK(m[2] == doctest::Approx(7.0).epsilon(1e-6));
}

TEST_CASE("standard bases") {
  for (int d = 1; d <= 4; ++d) {
    CHECK(interval_basis(d).size() == size_t(2 * d));
    CHECK(zone_basis(d).size() == size_t(2 * d + d * (d - 1)));
    CHECK(octagon_basis(d).size() == size_t(2 * d + 2 * d * (d - 1)));
  }
  const TemplateBasis b = interval_basis(2, {"x", "y"});
  Vector p(2);
  p << 3, -4;
  Row vals;
  for (const auto& t : b) vals.push_back(t.form.evaluate(p));
  std::sort(vals.begin(), vals.end());
  CHECK(vals == Row{-4, -3, 3, 4});
  for (const auto& t : octagon_basis(3)) CHECK(t.form.is_linear());
}

TEST_CASE("formatting") {
  CHECK(format_bound(plus_inf) == "+inf");
  CHECK(format_bound(minus_inf) == "-inf");
  CHECK(format_row({1.5, plus_inf, 2}, oscillator_basis()).find("L") != std::string::npos);
}
