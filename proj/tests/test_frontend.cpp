#include "doctest.h"

#include "qtp/errors.hpp"
#include "qtp/frontend.hpp"
#include "bench_support.hpp"

#include <algorithm>

using namespace qtp;
using qtp::testing::Rng;

namespace {

const char* oscillator_source = R"(
x = [0,1];
v = [0,1]; [1]
h = 0.01;
while (true) { [2]
  u = v;
  v = v*(1-h)-h*x;
  x = x+h*u; [3] }
)";

TemplateBasis xv_basis() {
  Matrix x2 = Matrix::Zero(2, 2), v2 = Matrix::Zero(2, 2), l(2, 2);
  x2(0, 0) = 1;
  v2(1, 1) = 1;
  l << 2, 1, 1, 3;
  return {{"x2", QuadraticForm(x2, Vector::Zero(2))},
          {"v2", QuadraticForm(v2, Vector::Zero(2))},
          {"L", QuadraticForm(l, Vector::Zero(2))}};
}

TemplateBasis linear_basis(int d) {
  TemplateBasis b;
  for (int k = 0; k < d; ++k) {
    Vector e = Vector::Zero(d);
    e[k] = 1;
    b.push_back({"x" + std::to_string(k), QuadraticForm::linear(e)});
    b.push_back({"-x" + std::to_string(k), QuadraticForm::linear(-e)});
  }
  return b;
}

int count_kind(const Block& b, Stmt::Kind k) {
  int n = 0;
  for (const auto& s : b) {
    n += s->kind == k;
    n += count_kind(s->then_block, k) + count_kind(s->else_block, k);
  }
  return n;
}

// Random ASTs of degree at most two over x, y and the constant c.
class AstGen {
public:
  explicit AstGen(Rng& rng) : rng_(rng) {}

  ExprPtr linear(int depth) {
    const int pick = depth <= 0 ? rng_.integer(0, 1) : rng_.integer(0, 6);
    auto e = std::make_shared<Expr>();
    switch (pick) {
    case 0:
      e->kind = Expr::Kind::number;
      e->value = rng_.integer(0, 1) ? rng_.integer(0, 9) : rng_.uniform(0, 5);
      break;
    case 1:
      e->kind = Expr::Kind::variable;
      e->name = rng_.integer(0, 2) == 0 ? "c" : rng_.integer(0, 1) ? "x" : "y";
      break;
    case 2:
      e->kind = Expr::Kind::negate;
      e->lhs = linear(depth - 1);
      break;
    case 3:
    case 4:
      e->kind = pick == 3 ? Expr::Kind::add : Expr::Kind::sub;
      e->lhs = linear(depth - 1);
      e->rhs = linear(depth - 1);
      break;
    case 5:
      e->kind = Expr::Kind::mul;
      e->lhs = constant();
      e->rhs = linear(depth - 1);
      break;
    default:
      e->kind = Expr::Kind::div;
      e->lhs = linear(depth - 1);
      e->rhs = constant();
      break;
    }
    return e;
  }

  ExprPtr quadratic() {
    auto e = std::make_shared<Expr>();
    switch (rng_.integer(0, 2)) {
    case 0:
      return linear(3);
    case 1:
      e->kind = Expr::Kind::mul;
      e->lhs = linear(2);
      e->rhs = linear(2);
      return e;
    default:
      e->kind = Expr::Kind::power;
      e->lhs = linear(2);
      e->exponent = 2;
      return e;
    }
  }

  Guard guard() {
    Guard g;
    if (rng_.integer(0, 4) == 0) {
      g.always = true;
      return g;
    }
    g.lhs = quadratic();
    g.rhs = linear(1);
    g.op = static_cast<RelOp>(rng_.integer(0, 3));
    return g;
  }

  Block block(int depth) {
    Block b;
    const int n = rng_.integer(1, 3);
    for (int k = 0; k < n; ++k) b.push_back(stmt(depth));
    return b;
  }

  StmtPtr stmt(int depth) {
    auto s = std::make_shared<Stmt>();
    const int pick = depth <= 0 ? rng_.integer(0, 2) : rng_.integer(0, 4);
    switch (pick) {
    case 0:
      s->kind = Stmt::Kind::assign;
      s->targets = {rng_.integer(0, 1) ? "x" : "y"};
      s->values = {quadratic()};
      break;
    case 1:
      s->kind = Stmt::Kind::assign;
      s->parallel = true;
      s->targets = {"x", "y"};
      s->values = {quadratic(), quadratic()};
      break;
    case 2:
      s->kind = Stmt::Kind::label;
      s->label = rng_.integer(1, 40);
      break;
    case 3:
      s->kind = Stmt::Kind::if_else;
      s->guard = guard();
      s->then_block = block(depth - 1);
      s->has_else = rng_.integer(0, 1);
      if (s->has_else) s->else_block = block(depth - 1);
      break;
    default:
      s->kind = Stmt::Kind::while_loop;
      s->guard = guard();
      if (rng_.integer(0, 1)) s->loop_label = rng_.integer(1, 40);
      s->then_block = block(depth - 1);
      break;
    }
    return s;
  }

  ExprPtr constant() {
    auto e = std::make_shared<Expr>();
    if (rng_.integer(0, 1)) {
      e->kind = Expr::Kind::number;
      e->value = rng_.uniform(0.1, 3);
    } else {
      e->kind = Expr::Kind::variable;
      e->name = "c";
    }
    return e;
  }

  Program program() {
    Program p;
    auto num = [](double v) {
      auto e = std::make_shared<Expr>();
      e->value = v;
      return e;
    };
    Decl x{"x", true, num(0), num(rng_.uniform(0.5, 2)), nullptr, {}};
    Decl y{"y", true, num(0), num(1), nullptr, {}};
    Decl c{"c", false, nullptr, nullptr, num(rng_.uniform(0.1, 1)), {}};
    p.decls = {c, x, y};
    if (rng_.integer(0, 1)) p.entry_label = 1;
    p.body = block(2);
    // Keeps the body apart from the declaration prefix, which would otherwise
    // absorb a leading label or constant assignment.
    auto first = std::make_shared<Stmt>();
    first->targets = {"x"};
    auto x_ref = std::make_shared<Expr>();
    x_ref->kind = Expr::Kind::variable;
    x_ref->name = "x";
    first->values = {x_ref};
    p.body.insert(p.body.begin(), first);
    return p;
  }

private:
  Rng& rng_;
};

} // namespace

TEST_CASE("the oscillator listing") {
  const Program p = parse(oscillator_source);
  REQUIRE(p.decls.size() == 3);
  CHECK(p.decls[0].interval);
  CHECK(p.decls[1].interval);
  CHECK_FALSE(p.decls[2].interval);
  CHECK(p.decls[2].value->value == 0.01);
  CHECK(p.entry_label == 1);
  REQUIRE(p.body.size() == 1);
  CHECK(p.body[0]->kind == Stmt::Kind::while_loop);
  CHECK(p.body[0]->guard.always);
  CHECK(count_kind(p.body, Stmt::Kind::assign) == 3);
  CHECK(count_kind(p.body, Stmt::Kind::label) == 2);
  CHECK(state_variables(p) == std::vector<std::string>{"x", "v"});
}

TEST_CASE("lowering the oscillator") {
  const EquationSystem sys = lower(parse(oscillator_source), xv_basis());
  REQUIRE(sys.size() == 3);
  CHECK(sys.coords[0].kind == CoordKind::constant);
  CHECK(sys.coords[1].kind == CoordKind::join);
  CHECK(sys.coords[1].left == 0);
  CHECK(sys.coords[1].right == 2);
  CHECK(sys.coords[2].kind == CoordKind::assign);
  CHECK(sys.coords[2].prev == 1);
  CHECK(sys.coords[0].bounds[2] == doctest::Approx(7.0).epsilon(1e-6));
  const auto& t = std::get<AffineMap>(sys.coords[2].map);
  Matrix expect(2, 2);
  expect << 1, 0.01, -0.01, 0.99;
  CHECK((t.matrix() - expect).norm() < 1e-15);
  CHECK(sys.coords[2].label == "3");
  CHECK(validate(sys).empty());
}

TEST_CASE("lowering a guarded loop") {
  const EquationSystem sys = qtp::testing::load_bench("symplecticseu");
  REQUIRE(sys.size() == 3);
  CHECK(sys.coords[2].kind == CoordKind::test);
  Vector z = Vector::Zero(2);
  CHECK(sys.coords[2].guard.evaluate(z) == doctest::Approx(0.5));
  z[1] = 1;
  CHECK(sys.coords[2].guard.evaluate(z) == doctest::Approx(-0.5));
}

TEST_CASE("if/else lowering and exit guards") {
  const char* src = R"(
x = [0,1];
[1]
while (x <= 5) {
  if (x >= 2) { x = x + 1; } else { x = x + 2; }
}
x = x;
)";
  const EquationSystem sys = lower(parse(src), linear_basis(1));
  CHECK(validate(sys).empty());
  int tests = 0, joins = 0;
  for (const auto& c : sys.coords) {
    tests += c.kind == CoordKind::test;
    joins += c.kind == CoordKind::join;
  }
  CHECK(tests >= 3);
  CHECK(joins == 2);
  const IterationTrace t = analyze(sys, EngineConfig{});
  CHECK(t.status == RunStatus::fixpoint);
  // On exit 5 < x <= 6.
  CHECK(t.result.back()[0] == doctest::Approx(6.0).epsilon(1e-5));
  CHECK(t.result.back()[1] == doctest::Approx(-5.0).epsilon(1e-5));
}

TEST_CASE("syntax variants") {
  CHECK(parse("x := [0,1]; x := x + 1;") == parse("x = [0,1]; x = x + 1;"));
  CHECK(parse("x : = [0,1]; x : = x + 1;") == parse("x = [0,1]; x = x + 1;"));
  CHECK(parse("x = [0,1]; // comment\n# another\n/* block */ x = x + 1") == parse("x = [0,1]; x = x + 1;"));
  CHECK(parse("").body.empty());
}

TEST_CASE("errors") {
  CHECK_THROWS_AS(parse("x = [0,1]; x = x*x*x;"), parse_error);
  CHECK_THROWS_AS(parse("x = [0,1]; x = (x + 1"), parse_error);
  CHECK_THROWS_AS(parse("x = [0,1]; (x, x) = (1, 2);"), parse_error);
  try {
    parse("x = [0,1];\nx = x $ 1;");
    FAIL("expected a parse error");
  } catch (const parse_error& e) {
    CHECK(e.line() == 2);
  }
  // Quadratic assignments cannot be composed with quadratic templates.
  CHECK_THROWS_AS(lower(parse("x = [0,1]; v = [0,1]; x = x*v;"), xv_basis()), error);
}

TEST_CASE("empty programs lower to empty systems") {
  CHECK(lower(parse(""), linear_basis(1)).size() == 0);
}

TEST_CASE("strict guards are weakened with a note") {
  const EquationSystem sys = lower(parse("x = [0,1]; while (x < 3) { x = x + 1; }"), linear_basis(1));
  CHECK_FALSE(sys.notes.empty());
}

TEST_CASE("templates are permuted by variable name") {
  const EquationSystem a = lower(parse(oscillator_source), xv_basis(), {"x", "v"});
  TemplateBasis swapped = xv_basis();
  for (auto& t : swapped) {
    Matrix p(2, 2);
    p << 0, 1, 1, 0;
    t.form = QuadraticForm(p * t.form.a() * p, Vector::Zero(2));
  }
  const EquationSystem b = lower(parse(oscillator_source), swapped, {"v", "x"});
  for (int k = 0; k < 3; ++k) CHECK(a.templates[k].form == b.templates[k].form);
}

TEST_CASE("print and parse are inverse on random programs") {
  Rng rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    AstGen gen(rng);
    const Program p = gen.program();
    const std::string text = print(p);
    Program q;
    REQUIRE_NOTHROW(q = parse(text));
    CHECK(q == p);
    CHECK(print(q) == text);
  }
}
