#include "qtp/errors.hpp"
#include "qtp/frontend.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

namespace qtp {

namespace {

enum class Tok {
  end, number, ident, kw_if, kw_else, kw_while, kw_true,
  lparen, rparen, lbrace, rbrace, lbracket, rbracket,
  comma, semi, assign, plus, minus, star, slash, caret, le, ge, lt, gt
};

struct Token {
  Tok kind = Tok::end;
  std::string text;
  double number = 0.0;
  SourceLoc loc;
};

const char* describe(Tok t) {
  switch (t) {
  case Tok::end: return "end of input";
  case Tok::number: return "number";
  case Tok::ident: return "identifier";
  case Tok::kw_if: return "'if'";
  case Tok::kw_else: return "'else'";
  case Tok::kw_while: return "'while'";
  case Tok::kw_true: return "'true'";
  case Tok::lparen: return "'('";
  case Tok::rparen: return "')'";
  case Tok::lbrace: return "'{'";
  case Tok::rbrace: return "'}'";
  case Tok::lbracket: return "'['";
  case Tok::rbracket: return "']'";
  case Tok::comma: return "','";
  case Tok::semi: return "';'";
  case Tok::assign: return "'='";
  case Tok::plus: return "'+'";
  case Tok::minus: return "'-'";
  case Tok::star: return "'*'";
  case Tok::slash: return "'/'";
  case Tok::caret: return "'^'";
  case Tok::le: return "'<='";
  case Tok::ge: return "'>='";
  case Tok::lt: return "'<'";
  case Tok::gt: return "'>'";
  }
  return "?";
}

std::vector<Token> lex(const std::string& src) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1, col = 1;
  auto advance = [&](size_t n = 1) {
    for (size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (true) {
    while (i < src.size()) {
      const char c = src[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
        while (i < src.size() && src[i] != '\n') advance();
      } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
        const SourceLoc start{line, col};
        advance(2);
        while (i < src.size() && !(src[i] == '*' && i + 1 < src.size() && src[i + 1] == '/')) advance();
        if (i >= src.size()) throw parse_error("unterminated comment", start.line, start.column);
        advance(2);
      } else {
        break;
      }
    }
    Token t;
    t.loc = {line, col};
    if (i >= src.size()) {
      out.push_back(t);
      return out;
    }
    const char c = src[i];
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      const char* begin = src.c_str() + i;
      char* stop = nullptr;
      t.number = std::strtod(begin, &stop);
      t.kind = Tok::number;
      t.text.assign(begin, static_cast<size_t>(stop - begin));
      advance(static_cast<size_t>(stop - begin));
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.text = src.substr(i, j - i);
      if (t.text == "if") t.kind = Tok::kw_if;
      else if (t.text == "else") t.kind = Tok::kw_else;
      else if (t.text == "while") t.kind = Tok::kw_while;
      else if (t.text == "true") t.kind = Tok::kw_true;
      else t.kind = Tok::ident;
      advance(j - i);
    } else {
      auto two = [&](char a, char b) { return c == a && i + 1 < src.size() && src[i + 1] == b; };
      size_t len = 1;
      if (two('<', '=')) t.kind = Tok::le, len = 2;
      else if (two('>', '=')) t.kind = Tok::ge, len = 2;
      else if (c == ':') {
        // Also accepts ": =".
        size_t j = i + 1;
        while (j < src.size() && (src[j] == ' ' || src[j] == '\t')) ++j;
        if (j >= src.size() || src[j] != '=') throw parse_error("expected '=' after ':'", line, col);
        t.kind = Tok::assign;
        len = j - i + 1;
      }
      else {
        switch (c) {
        case '(': t.kind = Tok::lparen; break;
        case ')': t.kind = Tok::rparen; break;
        case '{': t.kind = Tok::lbrace; break;
        case '}': t.kind = Tok::rbrace; break;
        case '[': t.kind = Tok::lbracket; break;
        case ']': t.kind = Tok::rbracket; break;
        case ',': t.kind = Tok::comma; break;
        case ';': t.kind = Tok::semi; break;
        case '=': t.kind = Tok::assign; break;
        case '+': t.kind = Tok::plus; break;
        case '-': t.kind = Tok::minus; break;
        case '*': t.kind = Tok::star; break;
        case '/': t.kind = Tok::slash; break;
        case '^': t.kind = Tok::caret; break;
        case '<': t.kind = Tok::lt; break;
        case '>': t.kind = Tok::gt; break;
        default: throw parse_error(std::string("unexpected character '") + c + "'", line, col);
        }
      }
      t.text = src.substr(i, len);
      advance(len);
    }
    out.push_back(std::move(t));
  }
}

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

ExprPtr binary(Expr::Kind k, ExprPtr a, ExprPtr b, SourceLoc loc) {
  Expr e;
  e.kind = k;
  e.lhs = std::move(a);
  e.rhs = std::move(b);
  e.loc = loc;
  return make(std::move(e));
}

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program() {
    Program p;
    bool prefix = true;
    while (peek().kind != Tok::end) {
      if (prefix && peek().kind == Tok::lbracket) {
        p.entry_label = label_number();
        continue;
      }
      if (prefix && peek().kind == Tok::semi) {
        next();
        continue;
      }
      if (prefix && peek().kind == Tok::ident && peek(1).kind == Tok::assign) {
        if (auto d = declaration()) {
          p.decls.push_back(std::move(*d));
          continue;
        }
      }
      prefix = false;
      if (auto s = statement()) p.body.push_back(std::move(s));
    }
    return p;
  }

private:
  const Token& peek(size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  [[noreturn]] void fail(const std::string& msg, const Token& at) const {
    throw parse_error(msg, at.loc.line, at.loc.column);
  }

  const Token& expect(Tok k, const char* context) {
    if (peek().kind != k)
      fail(std::string("expected ") + describe(k) + " " + context + ", found " + describe(peek().kind), peek());
    return next();
  }

  int label_number() {
    expect(Tok::lbracket, "to open a label");
    const Token& t = expect(Tok::number, "as label");
    if (t.number != static_cast<int>(t.number) || t.number < 0) fail("label must be a non-negative integer", t);
    expect(Tok::rbracket, "to close a label");
    return static_cast<int>(t.number);
  }

  // Declarations have an interval or a closed numeric right-hand side.
  std::optional<Decl> declaration() {
    const size_t save = pos_;
    Decl d;
    d.loc = peek().loc;
    d.name = next().text;
    next(); // '='
    if (peek().kind == Tok::lbracket) {
      next();
      d.interval = true;
      d.lo = expr();
      expect(Tok::comma, "between interval bounds");
      d.hi = expr();
      expect(Tok::rbracket, "to close the interval");
    } else {
      d.value = expr();
      if (!closed(*d.value)) {
        pos_ = save;
        return std::nullopt;
      }
    }
    if (!d.interval) numeric_.insert(d.name);
    end_of_statement();
    return d;
  }

  // True when every variable is an earlier numeric declaration.
  bool closed(const Expr& e) const {
    if (e.kind == Expr::Kind::variable) return numeric_.count(e.name) > 0;
    if (e.lhs && !closed(*e.lhs)) return false;
    if (e.rhs && !closed(*e.rhs)) return false;
    return true;
  }

  void end_of_statement() {
    // A trailing ';' may be omitted before a label or a closing brace.
    if (peek().kind == Tok::semi) {
      next();
      return;
    }
    if (peek().kind == Tok::lbracket || peek().kind == Tok::rbrace || peek().kind == Tok::end) return;
    expect(Tok::semi, "after statement");
  }

  StmtPtr statement() {
    const Token& t = peek();
    switch (t.kind) {
    case Tok::semi: next(); return nullptr;
    case Tok::lbracket: {
      Stmt s;
      s.kind = Stmt::Kind::label;
      s.loc = t.loc;
      s.label = label_number();
      return std::make_shared<const Stmt>(std::move(s));
    }
    case Tok::kw_if: return if_statement();
    case Tok::kw_while: return while_statement();
    case Tok::lparen: return parallel_assignment();
    case Tok::ident: return assignment();
    default: fail(std::string("unexpected ") + describe(t.kind) + " at start of statement", t);
    }
  }

  StmtPtr assignment() {
    Stmt s;
    s.kind = Stmt::Kind::assign;
    s.loc = peek().loc;
    s.targets.push_back(next().text);
    expect(Tok::assign, "in assignment");
    if (peek().kind == Tok::lbracket) fail("interval initializers are only allowed in leading declarations", peek());
    s.values.push_back(expr());
    end_of_statement();
    return std::make_shared<const Stmt>(std::move(s));
  }

  StmtPtr parallel_assignment() {
    Stmt s;
    s.kind = Stmt::Kind::assign;
    s.parallel = true;
    s.loc = peek().loc;
    expect(Tok::lparen, "to open the target list");
    do {
      s.targets.push_back(expect(Tok::ident, "in target list").text);
    } while (peek().kind == Tok::comma && (next(), true));
    expect(Tok::rparen, "to close the target list");
    expect(Tok::assign, "in parallel assignment");
    expect(Tok::lparen, "to open the value list");
    do {
      s.values.push_back(expr());
    } while (peek().kind == Tok::comma && (next(), true));
    expect(Tok::rparen, "to close the value list");
    if (s.targets.size() != s.values.size())
      throw parse_error("parallel assignment has " + std::to_string(s.targets.size()) + " targets but " +
                            std::to_string(s.values.size()) + " values",
                        s.loc.line, s.loc.column);
    std::set<std::string> seen;
    for (const auto& t : s.targets)
      if (!seen.insert(t).second) throw parse_error("variable '" + t + "' assigned twice", s.loc.line, s.loc.column);
    end_of_statement();
    return std::make_shared<const Stmt>(std::move(s));
  }

  Block block() {
    expect(Tok::lbrace, "to open a block");
    Block b;
    while (peek().kind != Tok::rbrace) {
      if (peek().kind == Tok::end) fail("unterminated block", peek());
      if (auto s = statement()) b.push_back(std::move(s));
    }
    next();
    return b;
  }

  StmtPtr if_statement() {
    Stmt s;
    s.kind = Stmt::Kind::if_else;
    s.loc = next().loc;
    expect(Tok::lparen, "after 'if'");
    s.guard = guard();
    expect(Tok::rparen, "after the condition");
    s.then_block = block();
    if (peek().kind == Tok::kw_else) {
      next();
      s.has_else = true;
      s.else_block = block();
    }
    return std::make_shared<const Stmt>(std::move(s));
  }

  StmtPtr while_statement() {
    Stmt s;
    s.kind = Stmt::Kind::while_loop;
    s.loc = next().loc;
    if (peek().kind == Tok::lbracket) s.loop_label = label_number();
    expect(Tok::lparen, "after 'while'");
    s.guard = guard();
    expect(Tok::rparen, "after the condition");
    s.then_block = block();
    if (peek().kind == Tok::semi) next();
    return std::make_shared<const Stmt>(std::move(s));
  }

  Guard guard() {
    if (peek().kind == Tok::kw_true) {
      next();
      Guard g;
      g.always = true;
      return g;
    }
    if (peek().kind == Tok::lparen) {
      // Either a parenthesized condition or an expression starting with '('.
      const size_t save = pos_;
      try {
        next();
        Guard g = guard();
        expect(Tok::rparen, "after the condition");
        if (!is_relop(peek().kind)) return g;
      } catch (const parse_error&) {
      }
      pos_ = save;
    }
    Guard g;
    g.lhs = expr();
    if (!is_relop(peek().kind)) fail("expected a comparison operator in condition", peek());
    switch (next().kind) {
    case Tok::le: g.op = RelOp::le; break;
    case Tok::ge: g.op = RelOp::ge; break;
    case Tok::lt: g.op = RelOp::lt; break;
    default: g.op = RelOp::gt; break;
    }
    g.rhs = expr();
    return g;
  }

  static bool is_relop(Tok k) { return k == Tok::le || k == Tok::ge || k == Tok::lt || k == Tok::gt; }

  ExprPtr expr() {
    ExprPtr e = term();
    while (peek().kind == Tok::plus || peek().kind == Tok::minus) {
      const Token& op = next();
      e = binary(op.kind == Tok::plus ? Expr::Kind::add : Expr::Kind::sub, e, term(), op.loc);
    }
    return e;
  }

  ExprPtr term() {
    ExprPtr e = unary();
    while (peek().kind == Tok::star || peek().kind == Tok::slash) {
      const Token& op = next();
      e = binary(op.kind == Tok::star ? Expr::Kind::mul : Expr::Kind::div, e, unary(), op.loc);
    }
    return e;
  }

  ExprPtr unary() {
    if (peek().kind == Tok::minus) {
      Expr e;
      e.kind = Expr::Kind::negate;
      e.loc = next().loc;
      e.lhs = unary();
      return make(std::move(e));
    }
    return power();
  }

  ExprPtr power() {
    ExprPtr base = primary();
    if (peek().kind != Tok::caret) return base;
    Expr e;
    e.kind = Expr::Kind::power;
    e.loc = next().loc;
    const Token& t = expect(Tok::number, "as exponent");
    if (t.number != static_cast<int>(t.number) || t.number < 0) fail("exponent must be a non-negative integer", t);
    e.exponent = static_cast<int>(t.number);
    e.lhs = base;
    return make(std::move(e));
  }

  ExprPtr primary() {
    const Token& t = peek();
    if (t.kind == Tok::number) {
      next();
      Expr e;
      e.kind = Expr::Kind::number;
      e.value = t.number;
      e.loc = t.loc;
      return make(std::move(e));
    }
    if (t.kind == Tok::ident) {
      next();
      Expr e;
      e.kind = Expr::Kind::variable;
      e.name = t.text;
      e.loc = t.loc;
      return make(std::move(e));
    }
    if (t.kind == Tok::lparen) {
      next();
      ExprPtr e = expr();
      expect(Tok::rparen, "to close the parenthesis");
      return e;
    }
    fail(std::string("unexpected ") + describe(t.kind) + " in expression", t);
  }

  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::set<std::string> numeric_;
};

// Names assigned anywhere in the block.
void collect_writes(const Block& b, std::set<std::string>& out) {
  for (const auto& s : b) {
    for (const auto& t : s->targets) out.insert(t);
    collect_writes(s->then_block, out);
    collect_writes(s->else_block, out);
  }
}

int degree(const Expr& e, const std::set<std::string>& constants) {
  using K = Expr::Kind;
  switch (e.kind) {
  case K::number: return 0;
  case K::variable: return constants.count(e.name) ? 0 : 1;
  case K::negate: return degree(*e.lhs, constants);
  case K::add:
  case K::sub: return std::max(degree(*e.lhs, constants), degree(*e.rhs, constants));
  case K::mul: return degree(*e.lhs, constants) + degree(*e.rhs, constants);
  case K::div:
    if (degree(*e.rhs, constants) > 0) throw parse_error("division by a non-constant expression", e.loc.line, e.loc.column);
    return degree(*e.lhs, constants);
  case K::power: return degree(*e.lhs, constants) * e.exponent;
  }
  return 0;
}

void check_degree(const ExprPtr& e, const std::set<std::string>& constants) {
  if (!e) return;
  const int d = degree(*e, constants);
  if (d > 2)
    throw parse_error("expression has degree " + std::to_string(d) + ", at most 2 is supported", e->loc.line,
                      e->loc.column);
}

void check_block(const Block& b, const std::set<std::string>& constants) {
  for (const auto& s : b) {
    for (const auto& v : s->values) check_degree(v, constants);
    if (!s->guard.always) {
      check_degree(s->guard.lhs, constants);
      check_degree(s->guard.rhs, constants);
    }
    check_block(s->then_block, constants);
    check_block(s->else_block, constants);
  }
}

} // namespace

Program parse(const std::string& source) {
  Parser parser(lex(source));
  Program p = parser.program();
  std::set<std::string> written;
  collect_writes(p.body, written);
  std::set<std::string> constants;
  for (const auto& d : p.decls)
    if (!d.interval && !written.count(d.name)) constants.insert(d.name);
  for (const auto& d : p.decls) {
    check_degree(d.value, constants);
    check_degree(d.lo, constants);
    check_degree(d.hi, constants);
  }
  check_block(p.body, constants);
  return p;
}

// ---------------------------------------------------------------------------

bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind || a.value != b.value || a.name != b.name || a.exponent != b.exponent) return false;
  auto same = [](const ExprPtr& x, const ExprPtr& y) { return (!x && !y) || (x && y && *x == *y); };
  return same(a.lhs, b.lhs) && same(a.rhs, b.rhs);
}

namespace {

bool same_expr(const ExprPtr& x, const ExprPtr& y) { return (!x && !y) || (x && y && *x == *y); }

bool same_block(const Block& a, const Block& b) {
  if (a.size() != b.size()) return false;
  for (size_t k = 0; k < a.size(); ++k)
    if (!(*a[k] == *b[k])) return false;
  return true;
}

} // namespace

bool operator==(const Guard& a, const Guard& b) {
  if (a.always != b.always) return false;
  if (a.always) return true;
  return a.op == b.op && same_expr(a.lhs, b.lhs) && same_expr(a.rhs, b.rhs);
}

bool operator==(const Decl& a, const Decl& b) {
  return a.name == b.name && a.interval == b.interval && same_expr(a.lo, b.lo) && same_expr(a.hi, b.hi) &&
         same_expr(a.value, b.value);
}

bool operator==(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
  case Stmt::Kind::label: return a.label == b.label;
  case Stmt::Kind::assign: {
    if (a.parallel != b.parallel || a.targets != b.targets || a.values.size() != b.values.size()) return false;
    for (size_t k = 0; k < a.values.size(); ++k)
      if (!same_expr(a.values[k], b.values[k])) return false;
    return true;
  }
  case Stmt::Kind::if_else:
    return a.guard == b.guard && a.has_else == b.has_else && same_block(a.then_block, b.then_block) &&
           same_block(a.else_block, b.else_block);
  case Stmt::Kind::while_loop:
    return a.guard == b.guard && a.loop_label == b.loop_label && same_block(a.then_block, b.then_block);
  }
  return false;
}

bool operator==(const Program& a, const Program& b) {
  return a.decls == b.decls && a.entry_label == b.entry_label && same_block(a.body, b.body);
}

// ---------------------------------------------------------------------------

namespace {

std::string number_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void print_expr(std::ostream& os, const Expr& e) {
  using K = Expr::Kind;
  switch (e.kind) {
  case K::number: os << number_text(e.value); return;
  case K::variable: os << e.name; return;
  case K::negate: os << "(-"; print_expr(os, *e.lhs); os << ")"; return;
  case K::power: os << "("; print_expr(os, *e.lhs); os << "^" << e.exponent << ")"; return;
  default: break;
  }
  const char* op = e.kind == K::add ? " + " : e.kind == K::sub ? " - " : e.kind == K::mul ? " * " : " / ";
  os << "(";
  print_expr(os, *e.lhs);
  os << op;
  print_expr(os, *e.rhs);
  os << ")";
}

void print_guard(std::ostream& os, const Guard& g) {
  if (g.always) {
    os << "true";
    return;
  }
  print_expr(os, *g.lhs);
  os << (g.op == RelOp::le ? " <= " : g.op == RelOp::ge ? " >= " : g.op == RelOp::lt ? " < " : " > ");
  print_expr(os, *g.rhs);
}

void print_block(std::ostream& os, const Block& b, int indent) {
  const std::string pad(static_cast<size_t>(indent) * 2, ' ');
  for (const auto& s : b) {
    switch (s->kind) {
    case Stmt::Kind::label: os << pad << "[" << s->label << "]\n"; break;
    case Stmt::Kind::assign:
      if (s->parallel) {
        os << pad << "(";
        for (size_t k = 0; k < s->targets.size(); ++k) os << (k ? ", " : "") << s->targets[k];
        os << ") = (";
        for (size_t k = 0; k < s->values.size(); ++k) {
          if (k) os << ", ";
          print_expr(os, *s->values[k]);
        }
        os << ");\n";
      } else {
        os << pad << s->targets[0] << " = ";
        print_expr(os, *s->values[0]);
        os << ";\n";
      }
      break;
    case Stmt::Kind::if_else:
      os << pad << "if (";
      print_guard(os, s->guard);
      os << ") {\n";
      print_block(os, s->then_block, indent + 1);
      os << pad << "}";
      if (s->has_else) {
        os << " else {\n";
        print_block(os, s->else_block, indent + 1);
        os << pad << "}";
      }
      os << "\n";
      break;
    case Stmt::Kind::while_loop:
      os << pad << "while ";
      if (s->loop_label) os << "[" << *s->loop_label << "] ";
      os << "(";
      print_guard(os, s->guard);
      os << ") {\n";
      print_block(os, s->then_block, indent + 1);
      os << pad << "}\n";
      break;
    }
  }
}

} // namespace

std::string print(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e);
  return os.str();
}

std::string print(const Program& p) {
  std::ostringstream os;
  for (const auto& d : p.decls) {
    os << d.name << " = ";
    if (d.interval) {
      os << "[";
      print_expr(os, *d.lo);
      os << ", ";
      print_expr(os, *d.hi);
      os << "]";
    } else {
      print_expr(os, *d.value);
    }
    os << ";\n";
  }
  if (p.entry_label) os << "[" << *p.entry_label << "]\n";
  print_block(os, p.body, 0);
  return os.str();
}

} // namespace qtp
