#pragma once

// Toy imperative language: parsing, printing and lowering to an equation system.
//
//   program  := item*
//   item     := label | assign | passign | if | while | ';'
//   label    := '[' INT ']'
//   assign   := IDENT ('=' | ':=') (interval | expr) ';'
//   passign  := '(' IDENT (',' IDENT)* ')' '=' '(' expr (',' expr)* ')' ';'
//   interval := '[' expr ',' expr ']'              (leading declarations only)
//   if       := 'if' '(' guard ')' block ('else' block)?
//   while    := 'while' label? '(' guard ')' block ';'?
//   block    := '{' item* '}'
//   guard    := 'true' | '(' guard ')' | expr ('<=' | '>=' | '<' | '>') expr
//   expr     := term (('+' | '-') term)*
//   term     := unary (('*' | '/') unary)*
//   unary    := '-' unary | power
//   power    := primary ('^' INT)?
//   primary  := NUMBER | IDENT | '(' expr ')'
//
// Comments: `//`, `#` to end of line, and `/* ... */`.

#include "qtp/ir.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace qtp {

struct SourceLoc {
  int line = 1;
  int column = 1;
};

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { number, variable, negate, add, sub, mul, div, power };
  Kind kind = Kind::number;
  double value = 0.0;  // number
  std::string name;    // variable
  int exponent = 0;    // power
  ExprPtr lhs, rhs;    // rhs unused for negate / power
  SourceLoc loc;
};

bool operator==(const Expr& a, const Expr& b);

enum class RelOp { le, ge, lt, gt };

struct Guard {
  bool always = false; // `true`
  ExprPtr lhs, rhs;
  RelOp op = RelOp::le;
};

bool operator==(const Guard& a, const Guard& b);

struct Decl {
  std::string name;
  bool interval = false;
  ExprPtr lo, hi; // interval bounds
  ExprPtr value;  // numeric initializer
  SourceLoc loc;
};

bool operator==(const Decl& a, const Decl& b);

struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;
using Block = std::vector<StmtPtr>;

struct Stmt {
  enum class Kind { assign, label, if_else, while_loop };
  Kind kind = Kind::assign;
  std::vector<std::string> targets; // several for a parallel assignment
  std::vector<ExprPtr> values;
  bool parallel = false;
  int label = 0;
  Guard guard;
  std::optional<int> loop_label;
  Block then_block, else_block; // while body in then_block
  bool has_else = false;
  SourceLoc loc;
};

bool operator==(const Stmt& a, const Stmt& b);

struct Program {
  std::vector<Decl> decls;
  /// Label written among the declarations, naming the entry point.
  std::optional<int> entry_label;
  Block body;
};

bool operator==(const Program& a, const Program& b);

/// Throws parse_error with line/column.
Program parse(const std::string& source);

std::string print(const Program& p);
std::string print(const Expr& e);

struct LowerOptions {
  SdpOptions sdp;
};

/// State variables in declaration order: those read before being written
/// within some straight-line segment or in a guard, minus constants.
std::vector<std::string> state_variables(const Program& p);

/// Builds the equation system. Templates must be over the state variables
/// (reordered by name when `template_vars` is given).
EquationSystem lower(const Program& p, const TemplateBasis& templates,
                     const std::vector<std::string>& template_vars = {}, const LowerOptions& opts = {});

} // namespace qtp
