#include "doctest.h"

#include "qtp/errors.hpp"
#include "qtp/relax.hpp"
#include "bench_support.hpp"

using namespace qtp;
using qtp::testing::Rng;

namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

TemplateBasis interval_xy() {
  return {{"x", QuadraticForm::linear(v2(1, 0))},
          {"-x", QuadraticForm::linear(v2(-1, 0))},
          {"y", QuadraticForm::linear(v2(0, 1))},
          {"-y", QuadraticForm::linear(v2(0, -1))}};
}

QuadraticForm diag2(double a, double b, Vector lin = Vector::Zero(2), double c = 0) {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return QuadraticForm(m, lin, c);
}

Policy random_policy(Rng& rng, const EquationSystem& sys) {
  Policy pi = Policy::empty_for(sys);
  for (int i = 0; i < sys.size(); ++i)
    for (auto& e : pi.entries[i]) {
      e.lambda = rng.vector(sys.template_count(), 0.0, 2.0);
      e.mu = sys.coords[i].kind == CoordKind::test ? rng.uniform(0.0, 2.0) : 0.0;
      e.valid = true;
    }
  return pi;
}

} // namespace

TEST_CASE("quadratic assignment under linear templates") {
  // (x, y) <- (-3x^2 - y^2, -y^2 + x^2) from {x + y <= 11, x - y <= 9}
  EquationSystem sys;
  sys.dim = 2;
  sys.templates = {{"p1", QuadraticForm::linear(v2(1, 1))}, {"p2", QuadraticForm::linear(v2(1, -1))}};
  sys.coords.push_back(Coordinate::constant({11, 9}));
  sys.coords.push_back(Coordinate::assign(0, QuadraticMap({diag2(-3, -1), diag2(1, -1)})));
  const RelaxResult r = evaluate_relaxed(sys, {{11, 9}, {0, 0}});
  // p1 o T = -2(x^2 + y^2) and p2 o T = -4x^2 both peak at the origin.
  CHECK(std::abs(r.value[1][0]) < 1e-6);
  CHECK(std::abs(r.value[1][1]) < 1e-6);
}

TEST_CASE("quadratic test under interval templates") {
  // x in [0,10], y = 1, guard x^2 + y^2 <= 2, then (x, y) <- (3 - y^2, x - 1)
  EquationSystem sys;
  sys.dim = 2;
  sys.templates = interval_xy();
  const Row init = {10, 0, 1, -1};
  sys.coords.push_back(Coordinate::constant(init));
  sys.coords.push_back(Coordinate::test(0, diag2(1, 1, Vector::Zero(2), -2), Sense::then_branch,
                                        QuadraticMap({diag2(0, -1, Vector::Zero(2), 3),
                                                      QuadraticForm::linear(v2(1, 0), -1)})));
  const RelaxResult r = evaluate_relaxed(sys, {init, bottom_row(4)});
  CHECK(r.value[1][0] == doctest::Approx(2.0).epsilon(1e-5));
  // The relaxation only knows 1 <= y^2 <= 2 here, so 3 - y^2 >= 1.
  CHECK(r.value[1][1] == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(std::abs(r.value[1][2]) < 1e-5);
  CHECK(r.value[1][3] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(r.policy.entries[1][0].valid);
}

TEST_CASE("rotation keeps the unit circle") {
  const EquationSystem sys = qtp::testing::load_bench("rotation2");
  AbstractValue v = {sys.coords[0].bounds, bottom_row(2)};
  const RelaxResult r = evaluate_relaxed(sys, v);
  CHECK(r.value[1][0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.value[1][1] == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("empty predecessors and joins") {
  const EquationSystem sys = qtp::testing::load_bench("oscillator");
  const AbstractValue bot = bottom(sys.size(), 3);
  const RelaxResult r = evaluate_relaxed(sys, bot);
  CHECK(r.value[0] == sys.coords[0].bounds);
  CHECK(is_empty(r.value[2]));
  CHECK(is_empty(r.value[1]));
}

TEST_CASE("relaxed values are below every policy and attained by the extracted one") {
  Rng rng(41);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const EquationSystem sys = qtp::testing::random_system(rng);
    const AbstractValue v = qtp::testing::random_value(rng, sys);
    const RelaxResult r = evaluate_relaxed(sys, v);
    for (int k = 0; k < 5; ++k) {
      const Policy pi = random_policy(rng, sys);
      const AbstractValue fp = qtp::testing::policy_image(sys, pi, v);
      CHECK(approx_leq(r.value, fp, {1e-5, 1e-5}));
    }
    const std::vector<bool> slater = slater_check(sys, v);
    const AbstractValue attained = qtp::testing::policy_image(sys, r.policy, v);
    for (int i = 0; i < sys.size(); ++i) {
      if (!slater[i] || sys.coords[i].kind == CoordKind::join || sys.coords[i].kind == CoordKind::constant) continue;
      for (int p = 0; p < sys.template_count(); ++p) {
        if (!std::isfinite(r.value[i][p])) continue;
        CHECK(approx_equal(attained[i][p], r.value[i][p], {1e-5, 1e-5}));
        ++checked;
      }
    }
  }
  CHECK(checked > 50);
}

TEST_CASE("policy values") {
  const EquationSystem sys = qtp::testing::load_bench("oscillator");
  CHECK_THROWS_AS(policy_values(sys, Policy::empty_for(sys)), inadmissible_policy_error);
  Policy pi = Policy::empty_for(sys);
  for (int p = 0; p < 3; ++p) pi.entries[2][p] = unit_entry(3, p);
  // Without a damping term x^2 o T - x^2 is unbounded.
  CHECK_THROWS_AS(policy_values(sys, pi), inadmissible_policy_error);
  for (int p = 0; p < 3; ++p) {
    pi.entries[2][p].lambda = Vector::Zero(3);
    pi.entries[2][p].lambda[2] = 1.0;
  }
  const PolicyValues vals = policy_values(sys, pi);
  CHECK(vals[2][2] <= 1e-9);
  CHECK(vals[0].empty());
}

TEST_CASE("extract_policy keeps previous entries where the fresh one is missing") {
  const EquationSystem sys = qtp::testing::load_bench("oscillator");
  Policy prev = Policy::empty_for(sys), fresh = Policy::empty_for(sys);
  for (int p = 0; p < 3; ++p) prev.entries[2][p] = unit_entry(3, p);
  fresh.entries[2][1] = unit_entry(3, 2);
  const Policy out = extract_policy(sys, fresh, prev);
  CHECK(out.entries[2][0] == prev.entries[2][0]);
  CHECK(out.entries[2][1] == fresh.entries[2][1]);
}

TEST_CASE("strict feasibility") {
  EquationSystem sys;
  sys.dim = 2;
  sys.templates = interval_xy();
  sys.coords.push_back(Coordinate::constant({1, 1, 1, 1}));
  sys.coords.push_back(Coordinate::assign(0, AffineMap::identity(2)));
  CHECK(slater_check(sys, {{1, 1, 1, 1}, {1, 1, 1, 1}}) == std::vector<bool>{true, true});
  // A segment has no interior.
  CHECK(slater_check(sys, {{1, 1, 0, 0}, {1, 1, 1, 1}})[1] == false);
}
