#include "qtp/errors.hpp"
#include "qtp/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace qtp {

namespace {

[[noreturn]] void fail_at(const SourceLoc& loc, const std::string& msg) {
  throw lowering_error(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + msg);
}

void collect_writes(const Block& b, std::set<std::string>& out) {
  for (const auto& s : b) {
    for (const auto& t : s->targets) out.insert(t);
    collect_writes(s->then_block, out);
    collect_writes(s->else_block, out);
  }
}

std::set<std::string> constant_names(const Program& p) {
  std::set<std::string> written;
  collect_writes(p.body, written);
  std::set<std::string> out;
  for (const auto& d : p.decls)
    if (!d.interval && !written.count(d.name)) out.insert(d.name);
  return out;
}

void reads(const Expr& e, std::vector<std::string>& out) {
  if (e.kind == Expr::Kind::variable) out.push_back(e.name);
  if (e.lhs) reads(*e.lhs, out);
  if (e.rhs) reads(*e.rhs, out);
}

struct ReadScan {
  const std::set<std::string>& constants;
  std::vector<std::string> order;
  std::set<std::string> seen;
  std::set<std::string> written; // in the current straight-line segment

  void read(const ExprPtr& e) {
    if (!e) return;
    std::vector<std::string> names;
    reads(*e, names);
    for (const auto& n : names)
      if (!constants.count(n) && !written.count(n) && seen.insert(n).second) order.push_back(n);
  }

  void guard(const Guard& g) {
    if (g.always) return;
    read(g.lhs);
    read(g.rhs);
  }

  void block(const Block& b) {
    written.clear();
    for (const auto& s : b) {
      switch (s->kind) {
      case Stmt::Kind::assign:
        for (const auto& v : s->values) read(v);
        for (const auto& t : s->targets) written.insert(t);
        break;
      case Stmt::Kind::label: written.clear(); break;
      case Stmt::Kind::if_else:
        written.clear();
        guard(s->guard);
        block(s->then_block);
        block(s->else_block);
        written.clear();
        break;
      case Stmt::Kind::while_loop:
        written.clear();
        guard(s->guard);
        block(s->then_block);
        written.clear();
        break;
      }
    }
    written.clear();
  }
};

double fold_constant(const Expr& e, const std::map<std::string, double>& values) {
  using K = Expr::Kind;
  switch (e.kind) {
  case K::number: return e.value;
  case K::variable: {
    auto it = values.find(e.name);
    if (it == values.end()) fail_at(e.loc, "'" + e.name + "' is not a numeric constant");
    return it->second;
  }
  case K::negate: return -fold_constant(*e.lhs, values);
  case K::add: return fold_constant(*e.lhs, values) + fold_constant(*e.rhs, values);
  case K::sub: return fold_constant(*e.lhs, values) - fold_constant(*e.rhs, values);
  case K::mul: return fold_constant(*e.lhs, values) * fold_constant(*e.rhs, values);
  case K::div: {
    const double den = fold_constant(*e.rhs, values);
    if (den == 0.0) fail_at(e.loc, "division by zero");
    return fold_constant(*e.lhs, values) / den;
  }
  case K::power: return std::pow(fold_constant(*e.lhs, values), e.exponent);
  }
  return 0.0;
}

bool is_constant_form(const QuadraticForm& q) { return q.is_linear() && q.b().isZero(0.0); }

QuadraticForm multiply(const QuadraticForm& x, const QuadraticForm& y, const SourceLoc& loc) {
  if (is_constant_form(x)) return x.c() * y;
  if (is_constant_form(y)) return y.c() * x;
  if (!x.is_linear() || !y.is_linear()) fail_at(loc, "product has degree greater than 2 after substitution");
  const Matrix a = x.b() * y.b().transpose();
  return QuadraticForm(a, y.c() * x.b() + x.c() * y.b(), x.c() * y.c());
}

class Lowering {
public:
  Lowering(const Program& p, const TemplateBasis& templates, const std::vector<std::string>& template_vars,
           const LowerOptions& opts)
      : prog_(p), opts_(opts) {
    constants_ = constant_names(p);
    for (const auto& d : p.decls) {
      if (declared_.count(d.name)) fail_at(d.loc, "variable '" + d.name + "' declared twice");
      declared_[d.name] = &d;
      if (!d.interval) numbers_[d.name] = fold_constant(*d.value, numbers_);
    }
    vars_ = state_variables(p);
    for (size_t k = 0; k < vars_.size(); ++k) index_[vars_[k]] = static_cast<int>(k);
    dim_ = static_cast<int>(vars_.size());
    if (dim_ == 0) throw lowering_error("program has no state variables");
    basis_ = reorder(templates, template_vars);
  }

  EquationSystem run() {
    sys_.dim = dim_;
    sys_.vars = vars_;
    sys_.templates = basis_;

    Box box;
    for (const auto& v : vars_) {
      auto it = declared_.find(v);
      if (it == declared_.end())
        throw lowering_error("variable '" + v + "' is read before it is assigned and has no declaration");
      const Decl& d = *it->second;
      if (d.interval) {
        const double lo = fold_constant(*d.lo, numbers_), hi = fold_constant(*d.hi, numbers_);
        if (!(lo <= hi)) fail_at(d.loc, "empty interval for '" + v + "'");
        box.emplace_back(lo, hi);
      } else {
        box.emplace_back(numbers_.at(v), numbers_.at(v));
      }
    }
    const std::string entry = prog_.entry_label ? std::to_string(*prog_.entry_label) : std::string();
    sys_.coords.push_back(Coordinate::constant(init_from_box(box, basis_, opts_.sdp), entry));
    cur_ = 0;

    block(prog_.body, true);
    // Trailing exit guards and joins describe nothing observable.
    pending_join_.reset();
    if (!env_.empty() || (guard_ && !guard_lazy_)) flush("");
    for (int i = 0; i < sys_.size(); ++i) {
      std::string& label = sys_.coords[i].label;
      const std::string position = std::to_string(i + 1);
      if (label.empty())
        label = position;
      else if (label != position)
        sys_.notes.push_back("label [" + label + "] names control point " + position);
    }
    require_valid(sys_);
    return std::move(sys_);
  }

private:
  TemplateBasis reorder(const TemplateBasis& templates, const std::vector<std::string>& tvars) const {
    if (tvars.empty()) {
      for (const auto& t : templates)
        if (t.form.dim() != dim_)
          throw lowering_error("template '" + t.name + "' has dimension " + std::to_string(t.form.dim()) +
                               " but the program has " + std::to_string(dim_) + " state variables");
      return templates;
    }
    std::vector<std::string> a = tvars, b = vars_;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) {
      std::string have, want;
      for (const auto& s : tvars) have += " " + s;
      for (const auto& s : vars_) want += " " + s;
      throw lowering_error("template variables {" + have + " } do not match state variables {" + want + " }");
    }
    // Template coordinate k is state variable perm[k].
    Matrix p = Matrix::Zero(dim_, dim_);
    for (int k = 0; k < dim_; ++k) p(k, index_.at(tvars[k])) = 1.0;
    TemplateBasis out;
    for (const auto& t : templates) {
      if (t.form.dim() != dim_) throw lowering_error("template '" + t.name + "' has the wrong dimension");
      out.push_back({t.name, QuadraticForm(p.transpose() * t.form.a() * p, p.transpose() * t.form.b(), t.form.c())});
    }
    return out;
  }

  QuadraticForm value_of(const std::string& name, const SourceLoc& loc) const {
    if (auto it = env_.find(name); it != env_.end()) return it->second;
    if (auto it = index_.find(name); it != index_.end()) {
      Vector b = Vector::Zero(dim_);
      b[it->second] = 1.0;
      return QuadraticForm::linear(b);
    }
    if (constants_.count(name)) return QuadraticForm::constant(dim_, numbers_.at(name));
    fail_at(loc, "variable '" + name + "' is read before it is assigned");
  }

  QuadraticForm eval(const Expr& e) const {
    using K = Expr::Kind;
    switch (e.kind) {
    case K::number: return QuadraticForm::constant(dim_, e.value);
    case K::variable: return value_of(e.name, e.loc);
    case K::negate: return -eval(*e.lhs);
    case K::add: return eval(*e.lhs) + eval(*e.rhs);
    case K::sub: return eval(*e.lhs) - eval(*e.rhs);
    case K::mul: return multiply(eval(*e.lhs), eval(*e.rhs), e.loc);
    case K::div: {
      const QuadraticForm den = eval(*e.rhs);
      if (!is_constant_form(den)) fail_at(e.loc, "division by a non-constant expression");
      if (den.c() == 0.0) fail_at(e.loc, "division by zero");
      return (1.0 / den.c()) * eval(*e.lhs);
    }
    case K::power: {
      QuadraticForm base = eval(*e.lhs);
      QuadraticForm acc = QuadraticForm::constant(dim_, 1.0);
      for (int k = 0; k < e.exponent; ++k) acc = multiply(acc, base, e.loc);
      return acc;
    }
    }
    return QuadraticForm(dim_);
  }

  // Guard g <= 0 for the then branch.
  QuadraticForm guard_form(const Guard& g, const SourceLoc& loc) {
    if (g.always) return QuadraticForm(dim_);
    if (g.op == RelOp::lt || g.op == RelOp::gt)
      sys_.notes.push_back(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": strict inequality '" +
                           (g.op == RelOp::lt ? "<" : ">") + "' weakened to '" + (g.op == RelOp::lt ? "<=" : ">=") +
                           "'");
    const QuadraticForm l = eval(*g.lhs), r = eval(*g.rhs);
    return (g.op == RelOp::le || g.op == RelOp::lt) ? l - r : r - l;
  }

  Transfer current_map() const {
    bool linear = true;
    std::vector<QuadraticForm> rows;
    for (int k = 0; k < dim_; ++k) {
      rows.push_back(value_of(vars_[k], {}));
      linear = linear && rows.back().is_linear();
    }
    if (!linear) return QuadraticMap(rows);
    Matrix m(dim_, dim_);
    Vector off(dim_);
    for (int k = 0; k < dim_; ++k) {
      m.row(k) = rows[k].b().transpose();
      off[k] = rows[k].c();
    }
    return AffineMap(m, off);
  }

  bool has_pending() const { return guard_.has_value() || !env_.empty(); }

  void materialize_join() {
    if (!pending_join_) return;
    sys_.coords.push_back(Coordinate::join(pending_join_->first, pending_join_->second));
    cur_ = sys_.size() - 1;
    pending_join_.reset();
  }

  void flush(const std::string& label) {
    materialize_join();
    if (!has_pending()) return;
    const Transfer map = current_map();
    if (guard_)
      sys_.coords.push_back(Coordinate::test(cur_, *guard_, sense_, map, label));
    else
      sys_.coords.push_back(Coordinate::assign(cur_, map, label));
    cur_ = sys_.size() - 1;
    guard_.reset();
    guard_lazy_ = false;
    env_.clear();
  }

  void set_guard(QuadraticForm g, Sense s, bool lazy) {
    guard_ = std::move(g);
    sense_ = s;
    guard_lazy_ = lazy;
  }

  void block(const Block& b, bool top) {
    (void)top;
    for (const auto& s : b) statement(*s);
  }

  void statement(const Stmt& s) {
    materialize_join();
    switch (s.kind) {
    case Stmt::Kind::assign: {
      std::vector<QuadraticForm> vals;
      for (const auto& v : s.values) vals.push_back(eval(*v));
      for (size_t k = 0; k < s.targets.size(); ++k) {
        if (constants_.count(s.targets[k])) fail_at(s.loc, "assignment to constant '" + s.targets[k] + "'");
        env_[s.targets[k]] = vals[k];
      }
      break;
    }
    case Stmt::Kind::label: {
      const std::string name = std::to_string(s.label);
      if (has_pending()) {
        flush(name);
      } else if (sys_.coords[cur_].label.empty()) {
        sys_.coords[cur_].label = name;
      } else {
        sys_.coords.push_back(Coordinate::assign(cur_, AffineMap::identity(dim_), name));
        cur_ = sys_.size() - 1;
      }
      break;
    }
    case Stmt::Kind::if_else: {
      flush("");
      const int start = cur_;
      const QuadraticForm g = guard_form(s.guard, s.loc);
      if (!s.guard.always) set_guard(g, Sense::then_branch, false);
      block(s.then_block, false);
      flush("");
      const int then_end = cur_;
      cur_ = start;
      set_guard(-g, Sense::else_branch, false);
      block(s.else_block, false);
      flush("");
      pending_join_ = {then_end, cur_};
      break;
    }
    case Stmt::Kind::while_loop: {
      flush("");
      sys_.coords.push_back(
          Coordinate::join(cur_, -1, s.loop_label ? std::to_string(*s.loop_label) : std::string()));
      const int head = sys_.size() - 1;
      cur_ = head;
      const QuadraticForm g = guard_form(s.guard, s.loc);
      if (!s.guard.always) set_guard(g, Sense::then_branch, false);
      block(s.then_block, false);
      flush("");
      sys_.coords[head].right = cur_;
      cur_ = head;
      if (!s.guard.always) set_guard(-g, Sense::else_branch, true);
      break;
    }
    }
  }

  const Program& prog_;
  LowerOptions opts_;
  std::set<std::string> constants_;
  std::map<std::string, const Decl*> declared_;
  std::map<std::string, double> numbers_;
  std::vector<std::string> vars_;
  std::map<std::string, int> index_;
  int dim_ = 0;
  TemplateBasis basis_;

  EquationSystem sys_;
  int cur_ = 0;
  std::map<std::string, QuadraticForm> env_;
  std::optional<QuadraticForm> guard_;
  Sense sense_ = Sense::then_branch;
  bool guard_lazy_ = false;
  std::optional<std::pair<int, int>> pending_join_;
};

} // namespace

std::vector<std::string> state_variables(const Program& p) {
  const std::set<std::string> constants = constant_names(p);
  ReadScan scan{constants, {}, {}, {}};
  scan.block(p.body);
  std::vector<std::string> out;
  for (const auto& d : p.decls)
    if (scan.seen.count(d.name)) out.push_back(d.name);
  for (const auto& n : scan.order)
    if (std::find(out.begin(), out.end(), n) == out.end()) out.push_back(n);
  return out;
}

EquationSystem lower(const Program& p, const TemplateBasis& templates, const std::vector<std::string>& template_vars,
                     const LowerOptions& opts) {
  if (p.decls.empty() && p.body.empty()) {
    EquationSystem empty;
    empty.templates = templates;
    return empty;
  }
  return Lowering(p, templates, template_vars, opts).run();
}

} // namespace qtp
