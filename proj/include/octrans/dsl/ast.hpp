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

#ifndef OCTRANS_DSL_AST_HPP_
#define OCTRANS_DSL_AST_HPP_

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace octrans::dsl {

enum class VarKind { state, control, variable };

/// Instant at which a component reference is evaluated.
enum class TimeArg { symbolic, initial, final };

enum class UnaryOp { neg, sin, cos, tan, exp, log, sqrt };
enum class BinaryOp { add, sub, mul, div, pow };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/** Immutable expression tree.
 *
 * Subtrees are shared freely: named expression aliases are expanded by
 * pointing at the same nodes, so trees must never be mutated after
 * construction. Constant subexpressions are folded during parsing, hence a
 * `number` node is the only place a literal value survives.
 */
struct Expr {
  enum class Kind {
    number,    // literal constant (named constants are folded into these)
    time,      // the symbolic time value t
    comp_ref,  // component (or whole vector, comp < 0) of a declared variable
    unary,
    binary,
    vector_lit,  // [e1, ..., ek]; only valid as a constraint bound side
    integral,    // integral(e); only valid inside a cost expression
  };

  Kind kind;
  double value = 0.0;
  int decl = -1;  // comp_ref: index into OcpProblem::decls
  int comp = -1;  // comp_ref: 0-based component, -1 = whole vector
  TimeArg at = TimeArg::symbolic;
  UnaryOp uop = UnaryOp::neg;
  BinaryOp bop = BinaryOp::add;
  ExprPtr a, b;
  std::vector<ExprPtr> elems;

  static ExprPtr number(double v);
  static ExprPtr time();
  static ExprPtr comp_ref(int decl, int comp, TimeArg at);
  static ExprPtr unary(UnaryOp op, ExprPtr a);
  static ExprPtr binary(BinaryOp op, ExprPtr a, ExprPtr b);
  static ExprPtr vector_lit(std::vector<ExprPtr> elems);
  static ExprPtr integral(ExprPtr a);

  bool is_number() const { return kind == Kind::number; }
  bool is_number(double v) const { return kind == Kind::number && value == v; }
};

bool equal(const Expr& a, const Expr& b);
bool equal(const ExprPtr& a, const ExprPtr& b);

struct TimeSpec {
  std::string name;  // the symbolic time identifier
  double t0_const = 0.0;
  int t0_var = -1;  // >= 0: index of the `variable` decl providing t0
  double tf_const = 0.0;
  int tf_var = -1;
  int line = 0;

  bool fixed_horizon() const { return t0_var < 0 && tf_var < 0; }
  bool operator==(const TimeSpec& o) const {
    return name == o.name && t0_const == o.t0_const && t0_var == o.t0_var &&
           tf_const == o.tf_const && tf_var == o.tf_var;
  }
};

struct VarDecl {
  std::string name;
  VarKind kind = VarKind::state;
  int dim = 1;
  std::vector<std::string> comp_names;  // empty or exactly dim aliases
  int line = 0;

  bool operator==(const VarDecl& o) const {
    return name == o.name && kind == o.kind && dim == o.dim && comp_names == o.comp_names;
  }
};

/// One dynamics equation: derivative(<state component>)(t) == rhs.
struct DynDecl {
  int decl = -1;
  int comp = 0;
  ExprPtr rhs;
  int line = 0;
};

struct ConstraintDecl {
  enum class Kind {
    boundary,      // expression over t0/tf instants
    path,          // expression over symbolic time, one row per grid node
    box_variable,  // bound on a free `variable` slot, folded into lvar/uvar
  };

  Kind kind = Kind::path;
  ExprPtr expr;               // constrained expression, dim rows
  std::vector<double> lower;  // -inf allowed
  std::vector<double> upper;  // +inf allowed
  int line = 0;
};

struct CostDecl {
  ExprPtr mayer;     // over boundary instants, may be null
  ExprPtr lagrange;  // over symbolic time, may be null
  bool from_max = false;  // true when the source said `=> max`; exprs are negated
  int line = 0;
};

/// Source-order declaration sequence entry (needed for faithful printing).
struct DeclOrderEntry {
  enum class What { time, var } what = What::var;
  int index = 0;  // var: index into decls
};

struct OcpProblem {
  TimeSpec time;
  std::vector<VarDecl> decls;
  std::vector<DeclOrderEntry> decl_order;
  std::vector<DynDecl> dynamics;  // one per state component, source order
  std::vector<ConstraintDecl> constraints;
  CostDecl cost;

  int state_dim() const;
  int control_dim() const;
  int variable_dim() const;  // total free-variable slots
  const VarDecl& decl(int i) const { return decls.at(static_cast<size_t>(i)); }

  /// Canonical display name of one component ("v" via alias, or "x2").
  std::string comp_name(int decl, int comp) const;
};

bool equal(const OcpProblem& a, const OcpProblem& b);

/// Parse/validation failure; `line` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line), message_(message) {}

  int line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  std::string message_;
};

}  // namespace octrans::dsl

#endif  // OCTRANS_DSL_AST_HPP_
