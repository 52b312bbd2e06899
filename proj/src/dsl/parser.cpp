/*
 Copyright 2026 The octrans Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#include "octrans/dsl/parser.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "octrans/dsl/lexer.hpp"

namespace octrans::dsl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct ExprFlags {
  bool symbolic = false;  // t or a ref at symbolic time
  bool instant = false;   // a ref at t0/tf
  bool decl_ref = false;  // any state/control reference
  bool var_ref = false;   // free-variable reference
  bool integral = false;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(tokenize(src)) {
    size_t start = 0;
    for (size_t i = 0; i <= src.size(); ++i) {
      if (i == src.size() || src[i] == '\n') {
        lines_.emplace_back(src.substr(start, i - start));
        start = i + 1;
      }
    }
  }

  OcpProblem run() {
    while (!at(TokenKind::end)) {
      if (at(TokenKind::newline)) {
        next();
        continue;
      }
      parse_line();
    }
    finalize();
    return std::move(p_);
  }

 private:
  struct Sym {
    enum class K { constant, alias, decl, comp };
    K k = K::constant;
    double value = 0.0;
    ExprPtr alias;
    int decl = -1;
    int comp = -1;
  };

  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::vector<std::string> lines_;
  OcpProblem p_;
  std::unordered_map<std::string, Sym> syms_;
  bool have_time_ = false;
  bool have_cost_ = false;
  int cost_line_ = 0;

  // ---- token helpers -------------------------------------------------------

  const Token& peek(size_t ahead = 0) const {
    size_t i = pos_ + ahead;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  bool at(TokenKind k, size_t ahead = 0) const { return peek(ahead).kind == k; }
  bool at_op(std::string_view text, size_t ahead = 0) const {
    return at(TokenKind::op, ahead) && peek(ahead).text == text;
  }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  int cur_line() const { return peek().kind == TokenKind::end ? static_cast<int>(lines_.size()) : peek().line; }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(cur_line(), msg); }
  [[noreturn]] void fail_at(int line, const std::string& msg) const { throw ParseError(line, msg); }

  std::string line_text(int line) const {
    if (line >= 1 && line <= static_cast<int>(lines_.size())) {
      std::string s = lines_[static_cast<size_t>(line - 1)];
      auto hash = s.find('#');
      if (hash != std::string::npos) s.erase(hash);
      size_t a = s.find_first_not_of(" \t\r");
      size_t b = s.find_last_not_of(" \t\r");
      if (a == std::string::npos) return "";
      return s.substr(a, b - a + 1);
    }
    return "";
  }

  void expect_op(std::string_view text) {
    if (!at_op(text)) fail("expected '" + std::string(text) + "', got '" + peek().text + "'");
    next();
  }
  void expect(TokenKind k, const char* what) {
    if (!at(k)) fail(std::string("expected ") + what + ", got '" + peek().text + "'");
    next();
  }
  void expect_eol() {
    if (!at(TokenKind::newline) && !at(TokenKind::end)) fail("unexpected trailing '" + peek().text + "'");
  }

  // ---- symbol table --------------------------------------------------------

  void define(const std::string& name, Sym sym, int line) {
    if (syms_.count(name)) fail_at(line, "duplicate identifier '" + name + "'");
    if (have_time_ && name == p_.time.name) fail_at(line, "duplicate identifier '" + name + "'");
    syms_.emplace(name, std::move(sym));
  }

  const Sym* lookup(const std::string& name) const {
    auto it = syms_.find(name);
    return it == syms_.end() ? nullptr : &it->second;
  }

  // Resolve "x2" style indexed component names (exact matches take priority).
  bool split_indexed(const std::string& name, int& decl, int& comp) const {
    size_t i = name.size();
    while (i > 0 && std::isdigit(static_cast<unsigned char>(name[i - 1]))) --i;
    if (i == 0 || i == name.size()) return false;
    const Sym* base = lookup(name.substr(0, i));
    if (!base || base->k != Sym::K::decl) return false;
    int idx = std::stoi(name.substr(i));
    const VarDecl& d = p_.decls[static_cast<size_t>(base->decl)];
    if (idx < 1 || idx > d.dim) return false;
    decl = base->decl;
    comp = idx - 1;
    return true;
  }

  // ---- line dispatch -------------------------------------------------------

  size_t line_end(size_t from) const {
    size_t i = from;
    while (i < toks_.size() && toks_[i].kind != TokenKind::newline && toks_[i].kind != TokenKind::end) ++i;
    return i;
  }

  void parse_line() {
    const size_t end = line_end(pos_);
    const Token& last = toks_[end - 1];
    if (last.kind == TokenKind::keyword &&
        (last.text == "state" || last.text == "control" || last.text == "variable")) {
      parse_var_decl();
    } else if (last.kind == TokenKind::keyword && last.text == "time") {
      parse_time_decl();
    } else if (contains_op(end, "=>")) {
      parse_cost();
    } else if (at(TokenKind::ident) && peek().text == "derivative") {
      parse_dynamics();
    } else if (at(TokenKind::ident) && at_op("=", 1)) {
      parse_definition();
    } else {
      parse_constraint();
    }
    expect_eol();
  }

  bool contains_op(size_t end, std::string_view text) const {
    for (size_t i = pos_; i < end; ++i)
      if (toks_[i].kind == TokenKind::op && toks_[i].text == text) return true;
    return false;
  }

  // ---- declarations --------------------------------------------------------

  void parse_var_decl() {
    const int line = cur_line();
    if (!at(TokenKind::ident)) fail("expected identifier");
    VarDecl d;
    d.name = next().text;
    d.line = line;
    if (at_op("=")) {  // component aliases: x = (r, v, m)
      next();
      expect(TokenKind::lparen, "'('");
      while (true) {
        if (!at(TokenKind::ident)) fail("expected component name");
        d.comp_names.push_back(next().text);
        if (at(TokenKind::comma)) { next(); continue; }
        break;
      }
      expect(TokenKind::rparen, "')'");
    }
    if (!(at(TokenKind::keyword) && peek().text == "in")) fail("expected 'in'");
    next();
    if (!(at(TokenKind::ident) && peek().text == "R")) fail("expected 'R' or 'R^k'");
    next();
    d.dim = 1;
    if (at_op("^")) {
      next();
      if (!at(TokenKind::int_lit)) fail("expected integer dimension");
      d.dim = static_cast<int>(next().num);
      if (d.dim < 1) fail_at(line, "dimension must be >= 1");
    }
    expect(TokenKind::comma, "','");
    if (!at(TokenKind::keyword)) fail("expected state/control/variable");
    std::string kw = next().text;
    d.kind = kw == "state" ? VarKind::state : kw == "control" ? VarKind::control : VarKind::variable;
    if (!d.comp_names.empty() && static_cast<int>(d.comp_names.size()) != d.dim)
      fail_at(line, "component alias list has " + std::to_string(d.comp_names.size()) +
                        " names but dimension is " + std::to_string(d.dim));

    int decl_idx = static_cast<int>(p_.decls.size());
    define(d.name, Sym{Sym::K::decl, 0.0, nullptr, decl_idx, -1}, line);
    for (size_t c = 0; c < d.comp_names.size(); ++c)
      define(d.comp_names[c], Sym{Sym::K::comp, 0.0, nullptr, decl_idx, static_cast<int>(c)}, line);
    p_.decls.push_back(std::move(d));
    p_.decl_order.push_back({DeclOrderEntry::What::var, decl_idx});
  }

  void parse_time_decl() {
    const int line = cur_line();
    if (have_time_) fail_at(line, "duplicate time declaration");
    if (!at(TokenKind::ident)) fail("expected time identifier");
    TimeSpec ts;
    ts.name = next().text;
    ts.line = line;
    if (syms_.count(ts.name)) fail_at(line, "duplicate identifier '" + ts.name + "'");
    if (!(at(TokenKind::keyword) && peek().text == "in")) fail("expected 'in'");
    next();
    expect(TokenKind::lbracket, "'['");
    resolve_time_bound(parse_expr(), ts.t0_const, ts.t0_var, line);
    expect(TokenKind::comma, "','");
    resolve_time_bound(parse_expr(), ts.tf_const, ts.tf_var, line);
    expect(TokenKind::rbracket, "']'");
    expect(TokenKind::comma, "','");
    if (!(at(TokenKind::keyword) && peek().text == "time")) fail("expected 'time'");
    next();
    p_.time = std::move(ts);
    have_time_ = true;
    p_.decl_order.push_back({DeclOrderEntry::What::time, 0});
  }

  void resolve_time_bound(ExprPtr e, double& cval, int& var, int line) {
    if (e->is_number()) {
      cval = e->value;
      var = -1;
      return;
    }
    if (e->kind == Expr::Kind::comp_ref) {
      const VarDecl& d = p_.decls[static_cast<size_t>(e->decl)];
      if (d.kind == VarKind::variable && d.dim == 1) {
        var = e->decl;
        return;
      }
    }
    fail_at(line, "time bounds must be constants or a scalar decision variable");
  }

  void parse_definition() {
    const int line = cur_line();
    std::string name = next().text;
    expect_op("=");
    ExprPtr e = parse_expr();
    if (e->kind == Expr::Kind::vector_lit) fail_at(line, "vector constants are not supported in definitions");
    if (e->is_number()) {
      define(name, Sym{Sym::K::constant, e->value, nullptr, -1, -1}, line);
    } else {
      define(name, Sym{Sym::K::alias, 0.0, e, -1, -1}, line);
    }
  }

  void parse_dynamics() {
    const int line = cur_line();
    next();  // derivative
    expect(TokenKind::lparen, "'('");
    if (!at(TokenKind::ident)) fail("expected state component");
    std::string name = next().text;
    expect(TokenKind::rparen, "')'");
    int decl = -1, comp = -1;
    if (const Sym* s = lookup(name)) {
      if (s->k == Sym::K::comp) { decl = s->decl; comp = s->comp; }
      else if (s->k == Sym::K::decl) { decl = s->decl; comp = -1; }
    }
    if (decl < 0 && !split_indexed(name, decl, comp)) fail_at(line, "unknown state component '" + name + "'");
    const VarDecl& d = p_.decls[static_cast<size_t>(decl)];
    if (d.kind != VarKind::state) fail_at(line, "derivative of non-state '" + name + "'");
    if (comp < 0) {
      if (d.dim != 1)
        fail_at(line, "vector-form dynamics are not supported; write one equation per component");
      comp = 0;
    }
    expect(TokenKind::lparen, "'('");
    if (!(at(TokenKind::ident) && have_time_ && peek().text == p_.time.name))
      fail("expected the time symbol '" + (have_time_ ? p_.time.name : std::string("t")) + "'");
    next();
    expect(TokenKind::rparen, "')'");
    expect_op("==");
    ExprPtr rhs = parse_expr();
    ExprFlags fl = flags_of(*rhs);
    if (fl.instant) fail_at(line, "dynamics must not reference boundary instants");
    if (fl.integral) fail_at(line, "integral(...) is only allowed in the cost");
    if (expr_dim(*rhs, line) != 1) fail_at(line, "dynamics right-hand side must be scalar");
    for (const auto& dyn : p_.dynamics)
      if (dyn.decl == decl && dyn.comp == comp)
        fail_at(line, "duplicate dynamics for state component '" + p_.comp_name(decl, comp) + "'");
    p_.dynamics.push_back(DynDecl{decl, comp, std::move(rhs), line});
  }

  // ---- constraints ---------------------------------------------------------

  struct Rel { std::string op; ExprPtr rhs; };

  void parse_constraint() {
    const int line = cur_line();
    ExprPtr first = parse_expr();
    std::vector<Rel> rels;
    while (at_op("<=") || at_op(">=") || at_op("==")) {
      std::string op = next().text;
      rels.push_back(Rel{op, parse_expr()});
    }
    if (rels.empty()) fail_at(line, "expected a constraint, declaration, or cost");
    if (at_op("<") || at_op(">")) fail("strict inequalities are not supported");

    ExprPtr expr;
    std::vector<double> lower, upper;
    auto is_const = [](const ExprPtr& e) {
      return e->kind == Expr::Kind::number || e->kind == Expr::Kind::vector_lit;
    };

    if (rels.size() == 2) {
      // chained a <= e <= b (or all >=)
      if (rels[0].op != rels[1].op || rels[0].op == "==")
        fail_at(line, "chained constraints must use a single direction of <= or >=");
      if (!is_const(first) || !is_const(rels[1].rhs))
        fail_at(line, "chained constraint bounds must be constant");
      expr = rels[0].rhs;
      int dim = expr_dim(*expr, line);
      if (rels[0].op == "<=") {
        lower = to_bounds(first, dim, line);
        upper = to_bounds(rels[1].rhs, dim, line);
      } else {
        upper = to_bounds(first, dim, line);
        lower = to_bounds(rels[1].rhs, dim, line);
      }
    } else if (rels.size() == 1) {
      const std::string& op = rels[0].op;
      ExprPtr lhs = first, rhs = rels[0].rhs;
      bool lc = is_const(lhs), rc = is_const(rhs);
      if (lc && rc) fail_at(line, "constraint has no unknowns");
      if (!lc && !rc) {
        expr = Expr::binary(BinaryOp::sub, lhs, rhs);
        int dim = expr_dim(*expr, line);
        if (op == "==") { lower.assign(dim, 0.0); upper.assign(dim, 0.0); }
        else if (op == "<=") { lower.assign(dim, -kInf); upper.assign(dim, 0.0); }
        else { lower.assign(dim, 0.0); upper.assign(dim, kInf); }
      } else {
        ExprPtr cst = lc ? lhs : rhs;
        expr = lc ? rhs : lhs;
        int dim = expr_dim(*expr, line);
        std::vector<double> bound = to_bounds(cst, dim, line);
        bool cst_is_upper = (op == "<=" && !lc) || (op == ">=" && lc);
        if (op == "==") { lower = bound; upper = bound; }
        else if (cst_is_upper) { lower.assign(dim, -kInf); upper = bound; }
        else { lower = bound; upper.assign(dim, kInf); }
      }
    } else {
      fail_at(line, "too many relations in one constraint");
    }

    for (size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] <= upper[i]))
        fail_at(line, "empty constraint interval (lower > upper) in '" + line_text(line) + "'");

    ExprFlags fl = flags_of(*expr);
    if (fl.integral) fail_at(line, "integral(...) is only allowed in the cost");
    ConstraintDecl c;
    c.expr = expr;
    c.lower = std::move(lower);
    c.upper = std::move(upper);
    c.line = line;
    if (fl.symbolic && fl.instant)
      fail_at(line, "cannot mix boundary instants and symbolic time in one constraint");
    if (fl.symbolic) c.kind = ConstraintDecl::Kind::path;
    else if (fl.instant || fl.decl_ref) c.kind = ConstraintDecl::Kind::boundary;
    else if (fl.var_ref) {
      c.kind = expr->kind == Expr::Kind::comp_ref ? ConstraintDecl::Kind::box_variable
                                                  : ConstraintDecl::Kind::boundary;
    } else {
      fail_at(line, "constraint has no unknowns");
    }
    p_.constraints.push_back(std::move(c));
  }

  std::vector<double> to_bounds(const ExprPtr& e, int dim, int line) {
    std::vector<double> out;
    if (e->kind == Expr::Kind::number) {
      out.assign(static_cast<size_t>(dim), e->value);
      return out;
    }
    if (e->kind == Expr::Kind::vector_lit) {
      if (static_cast<int>(e->elems.size()) != dim)
        fail_at(line, "wrong bound dimension in '" + line_text(line) + "' (expected " + std::to_string(dim) +
                          ", got " + std::to_string(e->elems.size()) + ")");
      for (const auto& el : e->elems) {
        if (!el->is_number()) fail_at(line, "constraint bounds must be constant");
        out.push_back(el->value);
      }
      return out;
    }
    fail_at(line, "constraint bounds must be constant");
  }

  // ---- cost ----------------------------------------------------------------

  void parse_cost() {
    const int line = cur_line();
    if (have_cost_) fail_at(line, "duplicate cost declaration (already given at line " + std::to_string(cost_line_) + ")");
    ExprPtr e = parse_expr();
    expect_op("=>");
    if (!at(TokenKind::keyword) || (peek().text != "min" && peek().text != "max"))
      fail("expected 'min' or 'max'");
    bool is_max = next().text == "max";

    CostDecl cost;
    cost.line = line;
    split_cost(e, /*negate=*/false, cost, line);
    if (!cost.mayer && !cost.lagrange) fail_at(line, "cost is constant");
    if (cost.mayer) {
      ExprFlags fl = flags_of(*cost.mayer);
      if (fl.symbolic) fail_at(line, "endpoint cost terms must use t0/tf instants, not symbolic time");
      if (expr_dim(*cost.mayer, line) != 1) fail_at(line, "cost must be scalar");
    }
    if (cost.lagrange) {
      ExprFlags fl = flags_of(*cost.lagrange);
      if (fl.instant) fail_at(line, "boundary instants are not allowed inside integral(...)");
      if (expr_dim(*cost.lagrange, line) != 1) fail_at(line, "cost must be scalar");
    }
    if (is_max) {
      // normalize to minimization; the solve report restores the sign
      if (cost.mayer) cost.mayer = Expr::unary(UnaryOp::neg, cost.mayer);
      if (cost.lagrange) cost.lagrange = Expr::unary(UnaryOp::neg, cost.lagrange);
      cost.from_max = true;
    }
    p_.cost = std::move(cost);
    have_cost_ = true;
    cost_line_ = line;
  }

  void add_term(ExprPtr& slot, ExprPtr term, bool negate) {
    if (negate) term = Expr::unary(UnaryOp::neg, std::move(term));
    slot = slot ? Expr::binary(BinaryOp::add, slot, std::move(term)) : std::move(term);
  }

  // Distribute top-level sums so integral(...) terms split from endpoint terms.
  void split_cost(const ExprPtr& e, bool negate, CostDecl& cost, int line) {
    if (e->kind == Expr::Kind::binary && (e->bop == BinaryOp::add || e->bop == BinaryOp::sub)) {
      split_cost(e->a, negate, cost, line);
      split_cost(e->b, e->bop == BinaryOp::sub ? !negate : negate, cost, line);
      return;
    }
    if (e->kind == Expr::Kind::unary && e->uop == UnaryOp::neg) {
      split_cost(e->a, !negate, cost, line);
      return;
    }
    if (e->kind == Expr::Kind::integral) {
      add_term(cost.lagrange, e->a, negate);
      return;
    }
    if (e->kind == Expr::Kind::binary && e->bop == BinaryOp::mul) {
      if (e->a->is_number() && e->b->kind == Expr::Kind::integral) {
        add_term(cost.lagrange, Expr::binary(BinaryOp::mul, e->a, e->b->a), negate);
        return;
      }
      if (e->b->is_number() && e->a->kind == Expr::Kind::integral) {
        add_term(cost.lagrange, Expr::binary(BinaryOp::mul, e->b, e->a->a), negate);
        return;
      }
    }
    if (e->kind == Expr::Kind::binary && e->bop == BinaryOp::div && e->a->kind == Expr::Kind::integral &&
        e->b->is_number()) {
      add_term(cost.lagrange, Expr::binary(BinaryOp::div, e->a->a, e->b), negate);
      return;
    }
    if (flags_of(*e).integral) fail_at(line, "integral(...) must appear linearly in the cost");
    add_term(cost.mayer, e, negate);
  }

  // ---- expressions ---------------------------------------------------------

  ExprPtr parse_expr() { return parse_add(); }

  ExprPtr parse_add() {
    ExprPtr e = parse_mul();
    while (at_op("+") || at_op("-")) {
      BinaryOp op = next().text == "+" ? BinaryOp::add : BinaryOp::sub;
      e = Expr::binary(op, e, parse_mul());
    }
    return e;
  }

  ExprPtr parse_mul() {
    ExprPtr e = parse_unary();
    while (at_op("*") || at_op("/")) {
      BinaryOp op = next().text == "*" ? BinaryOp::mul : BinaryOp::div;
      e = Expr::binary(op, e, parse_unary());
    }
    return e;
  }

  ExprPtr parse_unary() {
    if (at_op("-")) {
      next();
      return Expr::unary(UnaryOp::neg, parse_unary());
    }
    if (at_op("+")) {
      next();
      return parse_unary();
    }
    return parse_factor();
  }

  // atom with optional numeric juxtaposition (2pi, 0.5u(t)^2) and '^'
  ExprPtr parse_factor() {
    bool was_number = at(TokenKind::int_lit) || at(TokenKind::float_lit);
    ExprPtr e = parse_atom();
    if (was_number && (at(TokenKind::ident) || at(TokenKind::lparen))) {
      ExprPtr rhs = parse_factor();  // the juxtaposed factor keeps its own ^
      return Expr::binary(BinaryOp::mul, e, rhs);
    }
    while (at_op("^")) {
      next();
      e = Expr::binary(BinaryOp::pow, e, parse_unary());
    }
    return e;
  }

  ExprPtr parse_atom() {
    if (at(TokenKind::int_lit) || at(TokenKind::float_lit)) return Expr::number(next().num);
    if (at(TokenKind::lparen)) {
      next();
      ExprPtr e = parse_expr();
      expect(TokenKind::rparen, "')'");
      return e;
    }
    if (at(TokenKind::lbracket)) {
      next();
      std::vector<ExprPtr> elems;
      if (!at(TokenKind::rbracket)) {
        elems.push_back(parse_expr());
        while (at(TokenKind::comma)) {
          next();
          elems.push_back(parse_expr());
        }
      }
      expect(TokenKind::rbracket, "']'");
      return Expr::vector_lit(std::move(elems));
    }
    if (at(TokenKind::ident)) return parse_ref();
    fail("expected an expression, got '" + peek().text + "'");
  }

  ExprPtr parse_ref() {
    const int line = cur_line();
    std::string name = next().text;

    static const std::unordered_map<std::string, UnaryOp> kFuncs = {
        {"sin", UnaryOp::sin}, {"cos", UnaryOp::cos},   {"tan", UnaryOp::tan},
        {"exp", UnaryOp::exp}, {"log", UnaryOp::log},   {"sqrt", UnaryOp::sqrt},
    };
    if (auto it = kFuncs.find(name); it != kFuncs.end()) {
      expect(TokenKind::lparen, "'('");
      ExprPtr a = parse_expr();
      expect(TokenKind::rparen, "')'");
      return Expr::unary(it->second, a);
    }
    if (name == "integral") {
      expect(TokenKind::lparen, "'('");
      ExprPtr a = parse_expr();
      expect(TokenKind::rparen, "')'");
      return Expr::integral(a);
    }
    if (name == "zeros") {
      expect(TokenKind::lparen, "'('");
      if (!at(TokenKind::int_lit)) fail("expected integer in zeros(n)");
      int n = static_cast<int>(next().num);
      expect(TokenKind::rparen, "')'");
      std::vector<ExprPtr> elems(static_cast<size_t>(n), Expr::number(0.0));
      return Expr::vector_lit(std::move(elems));
    }
    if (name == "pi") return Expr::number(M_PI);
    if (name == "derivative") fail_at(line, "derivative(...) may only start a dynamics line");
    if (have_time_ && name == p_.time.name) return Expr::time();

    if (const Sym* s = lookup(name)) {
      switch (s->k) {
        case Sym::K::constant: return Expr::number(s->value);
        case Sym::K::alias: return s->alias;
        case Sym::K::decl: return parse_ref_tail(s->decl, -1, name, line);
        case Sym::K::comp: return parse_ref_tail(s->decl, s->comp, name, line);
      }
    }
    int decl = -1, comp = -1;
    if (split_indexed(name, decl, comp)) return parse_ref_tail(decl, comp, name, line);
    fail_at(line, "unknown identifier '" + name + "'");
  }

  ExprPtr parse_ref_tail(int decl, int comp, const std::string& name, int line) {
    const VarDecl& d = p_.decls[static_cast<size_t>(decl)];
    if (at(TokenKind::lparen)) {
      next();
      TimeArg arg = parse_time_arg(line);
      expect(TokenKind::rparen, "')'");
      if (d.kind == VarKind::variable) fail_at(line, "free variable '" + name + "' takes no time argument");
      return Expr::comp_ref(decl, comp, arg);
    }
    if (d.kind != VarKind::variable)
      fail_at(line, (d.kind == VarKind::state ? std::string("state '") : std::string("control '")) + name +
                        "' requires a time argument");
    return Expr::comp_ref(decl, comp, TimeArg::symbolic);
  }

  TimeArg parse_time_arg(int line) {
    ExprPtr e = parse_expr();
    if (e->kind == Expr::Kind::time) return TimeArg::symbolic;
    if (e->kind == Expr::Kind::comp_ref) {
      if (e->decl == p_.time.t0_var && p_.time.t0_var >= 0) return TimeArg::initial;
      if (e->decl == p_.time.tf_var && p_.time.tf_var >= 0) return TimeArg::final;
      fail_at(line, "time argument must be the time symbol, t0, or tf");
    }
    if (e->is_number()) {
      if (!have_time_) fail_at(line, "time must be declared before boundary references");
      if (p_.time.t0_var < 0 && e->value == p_.time.t0_const) return TimeArg::initial;
      if (p_.time.tf_var < 0 && e->value == p_.time.tf_const) return TimeArg::final;
      fail_at(line, "time instant must be t0 or tf; interior instants are not supported");
    }
    fail_at(line, "malformed time argument");
  }

  // ---- semantic helpers ----------------------------------------------------

  ExprFlags flags_of(const Expr& e) const {
    ExprFlags f;
    auto merge = [&f](ExprFlags g) {
      f.symbolic |= g.symbolic;
      f.instant |= g.instant;
      f.decl_ref |= g.decl_ref;
      f.var_ref |= g.var_ref;
      f.integral |= g.integral;
    };
    switch (e.kind) {
      case Expr::Kind::number: break;
      case Expr::Kind::time: f.symbolic = true; break;
      case Expr::Kind::comp_ref: {
        const VarDecl& d = p_.decls[static_cast<size_t>(e.decl)];
        if (d.kind == VarKind::variable) f.var_ref = true;
        else {
          f.decl_ref = true;
          if (e.at == TimeArg::symbolic) f.symbolic = true;
          else f.instant = true;
        }
        break;
      }
      case Expr::Kind::unary: merge(flags_of(*e.a)); break;
      case Expr::Kind::integral: merge(flags_of(*e.a)); f.integral = true; break;
      case Expr::Kind::binary: merge(flags_of(*e.a)); merge(flags_of(*e.b)); break;
      case Expr::Kind::vector_lit:
        for (const auto& el : e.elems) merge(flags_of(*el));
        break;
    }
    return f;
  }

  int expr_dim(const Expr& e, int line) const {
    switch (e.kind) {
      case Expr::Kind::number:
      case Expr::Kind::time: return 1;
      case Expr::Kind::comp_ref:
        return e.comp >= 0 ? 1 : p_.decls[static_cast<size_t>(e.decl)].dim;
      case Expr::Kind::unary:
      case Expr::Kind::integral: return expr_dim(*e.a, line);
      case Expr::Kind::binary: {
        int da = expr_dim(*e.a, line), db = expr_dim(*e.b, line);
        if (da == db) return da;
        if (da == 1) return db;
        if (db == 1) return da;
        fail_at(line, "wrong bound dimension: operands have dimensions " + std::to_string(da) + " and " +
                          std::to_string(db) + " in '" + line_text(line) + "'");
      }
      case Expr::Kind::vector_lit: return static_cast<int>(e.elems.size());
    }
    return 1;
  }

  // ---- final validation ----------------------------------------------------

  void finalize() {
    if (!have_time_) throw ParseError(1, "missing time declaration");
    if (!have_cost_) throw ParseError(static_cast<int>(lines_.size()), "missing cost declaration");
    for (int v : {p_.time.t0_var, p_.time.tf_var}) {
      if (v >= 0 && p_.decls[static_cast<size_t>(v)].kind != VarKind::variable)
        throw ParseError(p_.time.line, "time bounds may only reference 'variable' declarations");
    }
    // every state component needs exactly one dynamics equation
    for (size_t di = 0; di < p_.decls.size(); ++di) {
      const VarDecl& d = p_.decls[di];
      if (d.kind != VarKind::state) continue;
      for (int c = 0; c < d.dim; ++c) {
        bool found = false;
        for (const auto& dyn : p_.dynamics)
          if (dyn.decl == static_cast<int>(di) && dyn.comp == c) { found = true; break; }
        if (!found)
          throw ParseError(d.line, "missing dynamics for state component '" + p_.comp_name(static_cast<int>(di), c) + "'");
      }
    }
    if (p_.dynamics.empty()) throw ParseError(1, "problem declares no state dynamics");
  }
};

}  // namespace

OcpProblem parse_ocp(std::string_view source) { return Parser(source).run(); }

}  // namespace octrans::dsl
