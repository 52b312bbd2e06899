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

#include "octrans/dsl/printer.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

namespace octrans::dsl {

std::string format_number(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int prec(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::binary:
      switch (e.bop) {
        case BinaryOp::add:
        case BinaryOp::sub: return 1;
        case BinaryOp::mul:
        case BinaryOp::div: return 2;
        case BinaryOp::pow: return 4;
      }
      return 1;
    case Expr::Kind::unary: return e.uop == UnaryOp::neg ? 3 : 9;
    default: return 9;
  }
}

class ExprPrinter {
 public:
  explicit ExprPrinter(const OcpProblem& p) : p_(p) {}

  std::string print(const Expr& e) const {
    switch (e.kind) {
      case Expr::Kind::number: return format_number(e.value);
      case Expr::Kind::time: return p_.time.name;
      case Expr::Kind::comp_ref: return print_ref(e);
      case Expr::Kind::unary: return print_unary(e);
      case Expr::Kind::binary: return print_binary(e);
      case Expr::Kind::vector_lit: {
        std::string s = "[";
        for (size_t i = 0; i < e.elems.size(); ++i) {
          if (i) s += ", ";
          s += print(*e.elems[i]);
        }
        return s + "]";
      }
      case Expr::Kind::integral: return "integral( " + print(*e.a) + " )";
    }
    return "?";
  }

 private:
  std::string instant_text(TimeArg at) const {
    if (at == TimeArg::initial)
      return p_.time.t0_var >= 0 ? p_.decls[static_cast<size_t>(p_.time.t0_var)].name
                                 : format_number(p_.time.t0_const);
    return p_.time.tf_var >= 0 ? p_.decls[static_cast<size_t>(p_.time.tf_var)].name
                               : format_number(p_.time.tf_const);
  }

  std::string print_ref(const Expr& e) const {
    const VarDecl& d = p_.decls[static_cast<size_t>(e.decl)];
    std::string name = e.comp >= 0 ? p_.comp_name(e.decl, e.comp) : d.name;
    if (d.kind == VarKind::variable) return name;
    std::string arg = e.at == TimeArg::symbolic ? p_.time.name : instant_text(e.at);
    return name + "(" + arg + ")";
  }

  std::string wrap(const Expr& child, bool need_parens) const {
    std::string s = print(child);
    return need_parens ? "(" + s + ")" : s;
  }

  std::string print_unary(const Expr& e) const {
    switch (e.uop) {
      case UnaryOp::neg: return "-" + wrap(*e.a, prec(*e.a) < 3);
      case UnaryOp::sin: return "sin(" + print(*e.a) + ")";
      case UnaryOp::cos: return "cos(" + print(*e.a) + ")";
      case UnaryOp::tan: return "tan(" + print(*e.a) + ")";
      case UnaryOp::exp: return "exp(" + print(*e.a) + ")";
      case UnaryOp::log: return "log(" + print(*e.a) + ")";
      case UnaryOp::sqrt: return "sqrt(" + print(*e.a) + ")";
    }
    return "?";
  }

  std::string print_binary(const Expr& e) const {
    const int pr = prec(e);
    if (e.bop == BinaryOp::pow) {
      // right-associative: parenthesize a nested pow on the left only
      std::string lhs = wrap(*e.a, prec(*e.a) <= pr && prec(*e.a) != 9);
      std::string rhs = wrap(*e.b, prec(*e.b) < pr);
      return lhs + "^" + rhs;
    }
    const char* op = e.bop == BinaryOp::add ? " + " : e.bop == BinaryOp::sub ? " - "
                     : e.bop == BinaryOp::mul ? " * " : " / ";
    std::string lhs = wrap(*e.a, prec(*e.a) < pr);
    // same-precedence right operands keep their parentheses so the tree
    // reparses identically (left-associative grammar)
    std::string rhs = wrap(*e.b, prec(*e.b) <= pr);
    return lhs + op + rhs;
  }

  const OcpProblem& p_;
};

std::string bound_text(const std::vector<double>& v) {
  if (v.size() == 1) return format_number(v[0]);
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_number(v[i]);
  }
  return s + "]";
}

bool all_eq(const std::vector<double>& v, double x) {
  for (double a : v)
    if (a != x) return false;
  return true;
}

}  // namespace

std::string print_expr(const OcpProblem& p, const ExprPtr& e) { return ExprPrinter(p).print(*e); }

std::string pretty_print(const OcpProblem& p) {
  ExprPrinter ep(p);
  std::ostringstream out;

  for (const auto& entry : p.decl_order) {
    if (entry.what == DeclOrderEntry::What::time) {
      std::string t0 = p.time.t0_var >= 0 ? p.decls[static_cast<size_t>(p.time.t0_var)].name
                                          : format_number(p.time.t0_const);
      std::string tf = p.time.tf_var >= 0 ? p.decls[static_cast<size_t>(p.time.tf_var)].name
                                          : format_number(p.time.tf_const);
      out << p.time.name << " in [" << t0 << ", " << tf << "], time\n";
    } else {
      const VarDecl& d = p.decls[static_cast<size_t>(entry.index)];
      out << d.name;
      if (!d.comp_names.empty()) {
        out << " = (";
        for (size_t i = 0; i < d.comp_names.size(); ++i) {
          if (i) out << ", ";
          out << d.comp_names[i];
        }
        out << ")";
      }
      out << " in R";
      if (d.dim > 1) out << "^" << d.dim;
      out << ", " << (d.kind == VarKind::state ? "state" : d.kind == VarKind::control ? "control" : "variable")
          << "\n";
    }
  }

  for (const auto& c : p.constraints) {
    std::string e = ep.print(*c.expr);
    if (c.lower == c.upper) {
      out << e << " == " << bound_text(c.lower) << "\n";
    } else if (all_eq(c.lower, -kInf)) {
      out << e << " <= " << bound_text(c.upper) << "\n";
    } else if (all_eq(c.upper, kInf)) {
      out << e << " >= " << bound_text(c.lower) << "\n";
    } else {
      out << bound_text(c.lower) << " <= " << e << " <= " << bound_text(c.upper) << "\n";
    }
  }

  for (const auto& dyn : p.dynamics) {
    out << "derivative(" << p.comp_name(dyn.decl, dyn.comp) << ")(" << p.time.name
        << ") == " << ep.print(*dyn.rhs) << "\n";
  }

  {
    ExprPtr mayer = p.cost.mayer, lagrange = p.cost.lagrange;
    if (p.cost.from_max) {  // undo the stored negation for display
      if (mayer) mayer = Expr::unary(UnaryOp::neg, mayer);
      if (lagrange) lagrange = Expr::unary(UnaryOp::neg, lagrange);
    }
    std::string s;
    if (mayer) s = ep.print(*mayer);
    if (lagrange) {
      if (!s.empty()) s += " + ";
      s += "integral( " + ep.print(*lagrange) + " )";
    }
    out << s << " => " << (p.cost.from_max ? "max" : "min") << "\n";
  }
  return out.str();
}

}  // namespace octrans::dsl
