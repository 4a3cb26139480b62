#include "doctest.h"

#include "qtp/oracle.hpp"
#include "bench_support.hpp"

#include <sstream>

using namespace qtp;

TEST_CASE("rotation of an annulus") {
  // 0.8 <= x1^2 + x2^2 <= 1 is mapped onto itself.
  const EquationSystem sys = qtp::testing::load_bench("rotation2");
  const AbstractValue v = {{1.0, -0.8}, bottom_row(2)};
  const OracleResult o = oracle(sys, v);
  CHECK(o.value[1][0] <= 1.0 + 1e-9);
  CHECK(o.value[1][0] >= 1.0 - 1e-3);
  CHECK(o.value[1][1] <= -0.8 + 1e-9);
  CHECK(o.value[1][1] >= -0.8 - 1e-3);
  CHECK(o.feasible_points[1] > 0);
}

TEST_CASE("empty predecessors give empty rows") {
  const EquationSystem sys = qtp::testing::load_bench("oscillator");
  const OracleResult o = oracle(sys, bottom(sys.size(), 3));
  CHECK(is_empty(o.value[2]));
  CHECK(o.value[0] == sys.coords[0].bounds);
}

TEST_CASE("bounding boxes") {
  const EquationSystem sys = qtp::testing::load_bench("oscillator");
  const Box b = bounding_box({7, 7, 7}, sys.templates);
  REQUIRE(b.size() == 2);
  CHECK(b[0].second == doctest::Approx(std::sqrt(4.2)).epsilon(1e-5));
  CHECK(b[1].first == doctest::Approx(-std::sqrt(2.8)).epsilon(1e-5));
  const Box open = bounding_box(top_row(3), sys.templates);
  CHECK(open[0].second == plus_inf);
}

TEST_CASE("level-set samples") {
  const EquationSystem sys = qtp::testing::load_bench("oscillator");
  const std::string csv = level_sets_csv({1, 1, 7}, sys.templates, sys.vars, {{-1, 1}, {-1, 1}}, 3);
  std::istringstream is(csv);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == 1 + 9 * 3);
  CHECK(csv.rfind("template,x,v,value", 0) == 0);
}
