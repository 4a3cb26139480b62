#include "doctest.h"

#include "qtp/engine.hpp"
#include "qtp/errors.hpp"
#include "bench_support.hpp"

using namespace qtp;
using qtp::testing::load_bench;

TEST_CASE("rounding helpers") {
  CHECK(round_up_digits(3.14159, 2) == doctest::Approx(3.2));
  CHECK(round_up_digits(-3.14159, 2) == doctest::Approx(-3.1));
  CHECK(round_up_digits(3.2, 2) == doctest::Approx(3.2));
  CHECK(round_up_digits(0.0123, 1) == doctest::Approx(0.02));
  CHECK(round_up_125(3.2) == doctest::Approx(5.0));
  CHECK(round_up_125(0.07) == doctest::Approx(0.1));
  CHECK(round_up_125(5.0) == doctest::Approx(5.0));
  CHECK(round_up_125(-3.2) == doctest::Approx(-2.0));
  CHECK(round_up_125(plus_inf) == plus_inf);
  CHECK(accelerate(3.14159, 0, 11) == doctest::Approx(3.2));
  CHECK(accelerate(3.14159, 5, 11) == doctest::Approx(4.0));
  CHECK(accelerate(3.14159, 10, 11) == doctest::Approx(5.0));
  qtp::testing::Rng rng(2);
  for (int k = 0; k < 500; ++k) {
    const double v = rng.uniform(-100, 100);
    const int j = rng.integer(0, 10);
    CHECK(accelerate(v, j, 11) >= v);
  }
}

TEST_CASE("least fixpoint of a fixed policy") {
  const EquationSystem sys = load_bench("oscillator");
  Policy pi = Policy::empty_for(sys);
  for (int p = 0; p < 3; ++p) {
    pi.entries[2][p].lambda = Vector::Zero(3);
    pi.entries[2][p].lambda[2] = 1.0;
    pi.entries[2][p].valid = true;
  }
  const PolicyValues vals = policy_values(sys, pi);
  const AbstractValue u = policy_least_fixpoint(sys, pi, vals, 0.0);
  // Everything is bounded by L at the loop head, which receives L <= 7.
  CHECK(u[1][2] == doctest::Approx(7.0).epsilon(1e-6));
  CHECK(u[1][0] == doctest::Approx(7.0).epsilon(1e-6));
  const AbstractValue f = evaluate_policy_affine(sys, pi, u, vals);
  CHECK(approx_leq(f, u));
}

TEST_CASE("oscillator by policy iteration") {
  const EquationSystem sys = load_bench("oscillator");
  const EngineConfig cfg = qtp::testing::bench_config(sys, "oscillator", Method::policy);
  const IterationTrace t = analyze(sys, cfg);
  CHECK(t.status == RunStatus::fixpoint);
  CHECK(t.iterations <= 6);
  CHECK(t.warnings.empty());
  CHECK(t.result[1][0] == doctest::Approx(3.5).epsilon(1e-3));
  CHECK(t.result[1][1] == doctest::Approx(7.0 / 3).epsilon(1e-3));
  CHECK(t.result[1][2] == doctest::Approx(7.0).epsilon(1e-3));
  for (size_t s = 1; s < t.steps.size(); ++s) CHECK(approx_leq(t.steps[s].value, t.steps[s - 1].value));
  const RelaxResult r = evaluate_relaxed(sys, t.result);
  CHECK(approx_leq(r.value, t.result, {1e-5, 1e-5}));
}

TEST_CASE("oscillator by accelerated Kleene iteration") {
  const EquationSystem sys = load_bench("oscillator");
  EngineConfig cfg;
  cfg.method = Method::kleene;
  cfg.accel.enabled = true;
  const IterationTrace t = analyze(sys, cfg);
  CHECK(t.status != RunStatus::not_converged);
  CHECK(t.iterations <= 20);
  CHECK(approx_leq(t.result[1], Row{6, 4, 10}));
  const RelaxResult r = evaluate_relaxed(sys, t.result);
  CHECK(approx_leq(r.value, t.result, {1e-5, 1e-5}));
}

TEST_CASE("Kleene iterates increase and stop at the limit") {
  const EquationSystem sys = load_bench("oscillator");
  EngineConfig cfg;
  cfg.method = Method::kleene;
  cfg.max_iters = 30;
  const IterationTrace t = analyze(sys, cfg);
  CHECK(t.status == RunStatus::not_converged);
  for (size_t s = 1; s < t.steps.size(); ++s) CHECK(approx_leq(t.steps[s - 1].value, t.steps[s].value));
}

TEST_CASE("initial policies") {
  SUBCASE("guards on the filter") {
    const EquationSystem sys = load_bench("filter");
    EngineConfig cfg;
    const Policy pi = choose_initial_policy(sys, cfg);
    CHECK_NOTHROW(policy_values(sys, pi));
  }
  SUBCASE("a file policy missing entries") {
    const EquationSystem sys = load_bench("oscillator");
    EngineConfig cfg;
    cfg.initial.kind = InitialPolicyConfig::Kind::from_file;
    cfg.initial.policy = Policy::empty_for(sys);
    CHECK_THROWS_AS(choose_initial_policy(sys, cfg), initial_policy_error);
  }
  SUBCASE("a Kleene warm-up") {
    const EquationSystem sys = load_bench("filter");
    EngineConfig cfg;
    cfg.initial.kind = InitialPolicyConfig::Kind::from_kleene_warmup;
    cfg.initial.warmup = 5;
    const IterationTrace t = analyze(sys, cfg);
    CHECK(t.status == RunStatus::fixpoint);
  }
}

TEST_CASE("rotation is already a fixpoint") {
  for (const char* name : {"rotation2", "rotation10"}) {
    const EquationSystem sys = load_bench(name);
    const IterationTrace t = analyze(sys, EngineConfig{});
    CHECK(t.status == RunStatus::fixpoint);
    CHECK(t.iterations == 0);
    CHECK(t.result.back()[0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(t.result.back()[1] == doctest::Approx(-1.0).epsilon(1e-6));
  }
}

TEST_CASE("method names") {
  CHECK(std::string(to_string(Method::kleene)) == "kleene");
  CHECK(std::string(to_string(RunStatus::fixpoint)).size() > 0);
}
