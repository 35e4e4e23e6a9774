/* Copyright 2026 The qrobust Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Nonlinear real arithmetic: expressions, atomic constraints and CNF
// formulas over bounded real variables.

#ifndef QROBUST_EXPR_HPP_
#define QROBUST_EXPR_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "qrobust/interval.hpp"
#include "qrobust/network.hpp"

namespace qrobust {

enum class Op : std::uint8_t {
  kVar,
  kConst,
  kAdd,
  kMul,
  kNeg,
  kAbs,
  kMax,
  kExp,
  kSigmoid,
  kTanh,
};

struct ExprNode;

/// Immutable expression DAG handle. Copies share structure.
class Expr {
 public:
  static Expr var(int id);
  static Expr constant(double value);

  Op op() const;
  int var_id() const;    // kVar only
  double value() const;  // kConst only
  bool is_const() const { return op() == Op::kConst; }
  bool is_var() const { return op() == Op::kVar; }
  Expr arg(int i) const;
  const ExprNode* node() const { return node_.get(); }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  friend Expr make_node(Op, const Expr*, const Expr*);
  std::shared_ptr<const ExprNode> node_;
};

struct ExprNode {
  Op op = Op::kConst;
  int var = -1;
  double value = 0.0;
  std::shared_ptr<const ExprNode> a;
  std::shared_ptr<const ExprNode> b;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator+(const Expr& a, double b);
Expr operator-(const Expr& a, double b);
Expr operator*(double a, const Expr& b);

Expr abs(const Expr& a);
Expr max(const Expr& a, const Expr& b);
Expr exp(const Expr& a);
Expr sigmoid(const Expr& a);
Expr tanh(const Expr& a);

/// Distinct variable ids occurring in `e`, ascending.
std::vector<int> variables_of(const Expr& e);

struct TapeNode {
  Op op = Op::kConst;
  int a = -1;
  int b = -1;
  int var = -1;
  double value = 0.0;
};

/// Topologically ordered, shared-node-deduplicated form of one or more
/// expressions. Children always precede parents; each variable id owns a
/// single node.
class Tape {
 public:
  Tape() = default;
  explicit Tape(const Expr& root);
  explicit Tape(std::span<const Expr> roots);

  const std::vector<TapeNode>& nodes() const { return nodes_; }
  const std::vector<int>& roots() const { return roots_; }
  // (variable id, node index) pairs.
  const std::vector<std::pair<int, int>>& var_nodes() const { return var_nodes_; }

  // Natural extension: fills one value per node.
  template <typename Scalar>
  void forward(const VectorT<Scalar>& point, std::vector<Scalar>& vals) const;

  double eval(const Eigen::VectorXd& point, int root = 0) const;
  Interval eval(const Box& box, int root = 0) const;

 private:
  std::vector<TapeNode> nodes_;
  std::vector<int> roots_;
  std::vector<std::pair<int, int>> var_nodes_;
};

namespace detail {
inline double apply_abs(double v) { return std::abs(v); }
inline Interval apply_abs(const Interval& v) { return abs(v); }
inline double apply_max(double a, double b) { return a > b ? a : b; }
inline Interval apply_max(const Interval& a, const Interval& b) { return max(a, b); }
inline double apply_exp(double v) { return std::exp(v); }
inline Interval apply_exp(const Interval& v) { return exp(v); }
inline double apply_sigmoid(double v) { return sigmoid(v); }
inline Interval apply_sigmoid(const Interval& v) { return sigmoid(v); }
inline double apply_tanh(double v) { return std::tanh(v); }
inline Interval apply_tanh(const Interval& v) { return tanh(v); }
}  // namespace detail

template <typename Scalar>
void Tape::forward(const VectorT<Scalar>& point, std::vector<Scalar>& vals) const {
  vals.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TapeNode& n = nodes_[i];
    switch (n.op) {
      case Op::kVar:
        if (n.var >= point.size()) {
          throw std::out_of_range("unassigned variable " + std::to_string(n.var));
        }
        vals[i] = point[n.var];
        break;
      case Op::kConst: vals[i] = Scalar(n.value); break;
      case Op::kAdd: vals[i] = vals[n.a] + vals[n.b]; break;
      case Op::kMul: vals[i] = vals[n.a] * vals[n.b]; break;
      case Op::kNeg: vals[i] = -vals[n.a]; break;
      case Op::kAbs: vals[i] = detail::apply_abs(vals[n.a]); break;
      case Op::kMax: vals[i] = detail::apply_max(vals[n.a], vals[n.b]); break;
      case Op::kExp: vals[i] = detail::apply_exp(vals[n.a]); break;
      case Op::kSigmoid: vals[i] = detail::apply_sigmoid(vals[n.a]); break;
      case Op::kTanh: vals[i] = detail::apply_tanh(vals[n.a]); break;
    }
  }
}

/// Point evaluation in floating point.
double eval(const Expr& e, const Eigen::VectorXd& point);
/// Outward-rounded natural interval extension over `box`.
Interval eval_interval(const Expr& e, const Box& box);

enum class Relation { kLe, kLt, kGe, kGt, kEq };

std::string_view to_string(Relation r);

struct Atom {
  Expr lhs;
  Relation rel = Relation::kLe;
  Expr rhs;
};

inline Atom le(Expr a, Expr b) { return {std::move(a), Relation::kLe, std::move(b)}; }
inline Atom lt(Expr a, Expr b) { return {std::move(a), Relation::kLt, std::move(b)}; }
inline Atom ge(Expr a, Expr b) { return {std::move(a), Relation::kGe, std::move(b)}; }
inline Atom gt(Expr a, Expr b) { return {std::move(a), Relation::kGt, std::move(b)}; }
inline Atom eq(Expr a, Expr b) { return {std::move(a), Relation::kEq, std::move(b)}; }

/// Disjunction of atoms.
using Clause = std::vector<Atom>;

struct Variable {
  std::string name;
  Interval domain;
};

/// Existentially quantified conjunction of clauses over declared variables.
class Formula {
 public:
  Expr add_variable(std::string name, Interval domain);
  void add(Atom atom) { clauses_.push_back({std::move(atom)}); }
  void add_clause(Clause clause);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<Clause>& clauses() const { return clauses_; }
  Eigen::Index num_variables() const { return static_cast<Eigen::Index>(variables_.size()); }

  Box domain_box() const;
  // -1 when absent.
  int find(std::string_view name) const;

  // Throws std::invalid_argument when a clause mentions an undeclared
  // variable or a domain is empty or unbounded.
  void validate() const;

 private:
  std::vector<Variable> variables_;
  std::vector<Clause> clauses_;
};

/// SMT-LIB 2 rendering (QF_NRA plus exp/tanh) for cross-checking with an
/// external delta-complete solver.
std::string to_smtlib(const Formula& f);

/// Symbolic forward pass. `inputs` and `params` may mix variables and
/// constants; `params` follows the flatten() ordering. ReLU is lowered to
/// max(0, .).
Expr network_to_expr(const Network& net, std::span<const Expr> inputs,
                     std::span<const Expr> params);

}  // namespace qrobust

#endif  // QROBUST_EXPR_HPP_
