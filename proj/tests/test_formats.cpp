#include "doctest.h"

#include "qtp/errors.hpp"
#include "qtp/formats.hpp"
#include "bench_support.hpp"

using namespace qtp;
using qtp::testing::Rng;

TEST_CASE("template files round trip") {
  Rng rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    TemplateFile t;
    t.dim = rng.integer(1, 4);
    for (int k = 0; k < t.dim; ++k) t.vars.push_back("v" + std::to_string(k));
    const int m = rng.integer(1, 5);
    for (int p = 0; p < m; ++p) t.basis.push_back({"t" + std::to_string(p), rng.form(t.dim, 3.0)});
    const TemplateFile back = parse_templates(templates_to_json(t));
    CHECK(back.dim == t.dim);
    CHECK(back.vars == t.vars);
    REQUIRE(back.basis.size() == t.basis.size());
    for (int p = 0; p < m; ++p) {
      CHECK(back.basis[p].name == t.basis[p].name);
      CHECK(back.basis[p].form == t.basis[p].form);
    }
  }
}

TEST_CASE("template file errors") {
  CHECK_THROWS_AS(parse_templates(R"({"format": 1, "dim": 2, "templates": []})"), format_error);
  CHECK_THROWS_AS(parse_templates(R"({"format": 2, "dim": 1, "templates": [{"name": "x", "b": [1]}]})"),
                  format_error);
  CHECK_THROWS_AS(parse_templates(R"({"format": 1, "dim": 2, "templates": [{"name": "x", "b": [1]}]})"),
                  format_error);
  CHECK_THROWS_AS(parse_templates("not json"), format_error);
  const TemplateFile ok = parse_templates(R"({"format": 1, "dim": 1, "templates": [{"name": "x", "b": [1], "c": 2}]})");
  CHECK(ok.basis[0].form.c() == 2.0);
}

TEST_CASE("policies") {
  const EquationSystem sys = qtp::testing::load_bench("oscillator");
  const Policy pi = load_policy(qtp::testing::bench_path("oscillator.pi0.json"), sys);
  for (int p = 0; p < 3; ++p) {
    REQUIRE(pi.entries[2][p].valid);
    CHECK(pi.entries[2][p].lambda[2] == 1.0);
  }
  const Policy back = parse_policy(policy_to_json(pi, sys), sys);
  CHECK(back.entries == pi.entries);
  CHECK_THROWS_AS(parse_policy(R"({"format": 1, "coords": {"1": {"L": [0, 0, 1]}}})", sys), format_error);
  CHECK_THROWS_AS(parse_policy(R"({"format": 1, "coords": {"3": {"nope": [0, 0, 1]}}})", sys), format_error);
  CHECK_THROWS_AS(parse_policy(R"({"format": 1, "coords": {"3": {"L": [0, 1]}}})", sys), format_error);
  CHECK_THROWS_AS(parse_policy(R"({"format": 1, "coords": {"3": {"L": [0, -1, 1]}}})", sys), format_error);
}

TEST_CASE("bounds") {
  EquationSystem sys = qtp::testing::load_bench("oscillator");
  const BoundsOverride b = parse_bounds(R"({"format": 1, "coords": {"1": {"x2": 2, "v2": "inf"}}})");
  CHECK(parse_bounds(bounds_to_json(b)) == b);
  apply_bounds(sys, b);
  CHECK(sys.coords[0].bounds[0] == 2.0);
  CHECK(sys.coords[0].bounds[1] == plus_inf);
  CHECK_THROWS_AS(apply_bounds(sys, parse_bounds(R"({"format": 1, "coords": {"2": {"x2": 1}}})")), format_error);
  CHECK_THROWS_AS(apply_bounds(sys, parse_bounds(R"({"format": 1, "coords": {"1": {"q": 1}}})")), format_error);
  CHECK(parse_bound_text("-inf") == minus_inf);
  CHECK(parse_bound_text("2.5") == 2.5);
}
