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

#include "qrobust/expr.hpp"

#include <algorithm>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_map>

namespace qrobust {

namespace {

double fold(Op op, double a, double b) {
  switch (op) {
    case Op::kAdd: return a + b;
    case Op::kMul: return a * b;
    case Op::kNeg: return -a;
    case Op::kAbs: return std::abs(a);
    case Op::kMax: return std::max(a, b);
    case Op::kExp: return std::exp(a);
    case Op::kSigmoid: return sigmoid(a);
    case Op::kTanh: return std::tanh(a);
    default: return 0.0;
  }
}

}  // namespace

Expr make_node(Op op, const Expr* a, const Expr* b) {
  if (a && a->is_const() && (!b || b->is_const())) {
    return Expr::constant(fold(op, a->value(), b ? b->value() : 0.0));
  }
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->a = a->node_;
  if (b) n->b = b->node_;
  return Expr(std::move(n));
}

Expr Expr::var(int id) {
  if (id < 0) throw std::invalid_argument("variable id must be non-negative");
  auto n = std::make_shared<ExprNode>();
  n->op = Op::kVar;
  n->var = id;
  return Expr(std::move(n));
}

Expr Expr::constant(double value) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::kConst;
  n->value = value;
  return Expr(std::move(n));
}

Op Expr::op() const { return node_->op; }
int Expr::var_id() const { return node_->var; }
double Expr::value() const { return node_->value; }

Expr Expr::arg(int i) const {
  return Expr(i == 0 ? node_->a : node_->b);
}

Expr operator+(const Expr& a, const Expr& b) { return make_node(Op::kAdd, &a, &b); }
Expr operator*(const Expr& a, const Expr& b) { return make_node(Op::kMul, &a, &b); }
Expr operator-(const Expr& a) { return make_node(Op::kNeg, &a, nullptr); }
Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
Expr operator+(const Expr& a, double b) { return a + Expr::constant(b); }
Expr operator-(const Expr& a, double b) { return a + Expr::constant(-b); }
Expr operator*(double a, const Expr& b) { return Expr::constant(a) * b; }

Expr abs(const Expr& a) { return make_node(Op::kAbs, &a, nullptr); }
Expr max(const Expr& a, const Expr& b) { return make_node(Op::kMax, &a, &b); }
Expr exp(const Expr& a) { return make_node(Op::kExp, &a, nullptr); }
Expr sigmoid(const Expr& a) { return make_node(Op::kSigmoid, &a, nullptr); }
Expr tanh(const Expr& a) { return make_node(Op::kTanh, &a, nullptr); }

std::vector<int> variables_of(const Expr& e) {
  Tape t(e);
  std::vector<int> ids;
  for (const auto& [id, node] : t.var_nodes()) ids.push_back(id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

Tape::Tape(const Expr& root) : Tape(std::span<const Expr>(&root, 1)) {}

Tape::Tape(std::span<const Expr> roots) {
  std::unordered_map<const ExprNode*, int> index;
  std::unordered_map<int, int> var_index;
  // Iterative post-order; network expressions can be deep.
  std::vector<std::pair<const ExprNode*, bool>> stack;
  for (const Expr& r : roots) {
    stack.push_back({r.node(), false});
    while (!stack.empty()) {
      auto [n, expanded] = stack.back();
      stack.pop_back();
      if (index.count(n)) continue;
      if (!expanded) {
        stack.push_back({n, true});
        if (n->b) stack.push_back({n->b.get(), false});
        if (n->a) stack.push_back({n->a.get(), false});
        continue;
      }
      TapeNode tn;
      tn.op = n->op;
      if (n->op == Op::kVar) {
        auto it = var_index.find(n->var);
        if (it != var_index.end()) {
          index[n] = it->second;
          continue;
        }
        tn.var = n->var;
      } else if (n->op == Op::kConst) {
        tn.value = n->value;
      } else {
        tn.a = index.at(n->a.get());
        if (n->b) tn.b = index.at(n->b.get());
      }
      const int id = static_cast<int>(nodes_.size());
      nodes_.push_back(tn);
      index[n] = id;
      if (n->op == Op::kVar) {
        var_index[n->var] = id;
        var_nodes_.push_back({n->var, id});
      }
    }
    roots_.push_back(index.at(r.node()));
  }
}

double Tape::eval(const Eigen::VectorXd& point, int root) const {
  std::vector<double> vals;
  forward(point, vals);
  return vals[roots_.at(root)];
}

Interval Tape::eval(const Box& box, int root) const {
  std::vector<Interval> vals;
  forward(box, vals);
  return vals[roots_.at(root)];
}

double eval(const Expr& e, const Eigen::VectorXd& point) { return Tape(e).eval(point); }

Interval eval_interval(const Expr& e, const Box& box) { return Tape(e).eval(box); }

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kLe: return "<=";
    case Relation::kLt: return "<";
    case Relation::kGe: return ">=";
    case Relation::kGt: return ">";
    case Relation::kEq: return "=";
  }
  return "=";
}

Expr Formula::add_variable(std::string name, Interval domain) {
  const int id = static_cast<int>(variables_.size());
  variables_.push_back({std::move(name), domain});
  return Expr::var(id);
}

void Formula::add_clause(Clause clause) {
  if (clause.empty()) throw std::invalid_argument("empty clause");
  clauses_.push_back(std::move(clause));
}

Box Formula::domain_box() const {
  Box b(num_variables());
  for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = variables_[static_cast<std::size_t>(i)].domain;
  return b;
}

int Formula::find(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

void Formula::validate() const {
  for (const Variable& v : variables_) {
    if (v.domain.is_empty() || !std::isfinite(v.domain.lo) || !std::isfinite(v.domain.hi)) {
      throw std::invalid_argument("variable '" + v.name + "' needs a finite non-empty domain");
    }
  }
  for (const Clause& c : clauses_) {
    for (const Atom& a : c) {
      for (const Expr* e : {&a.lhs, &a.rhs}) {
        for (int id : variables_of(*e)) {
          if (id >= num_variables()) {
            throw std::invalid_argument("undeclared variable id " + std::to_string(id));
          }
        }
      }
    }
  }
}

namespace {

std::string smt_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", std::abs(v));
  std::string s(buf);
  const auto epos = s.find('e');
  std::string body;
  if (epos == std::string::npos) {
    body = s.find('.') == std::string::npos ? s + ".0" : s;
  } else {
    std::string mant = s.substr(0, epos);
    if (mant.find('.') == std::string::npos) mant += ".0";
    const int expo = std::stoi(s.substr(epos + 1));
    std::string pow10 = "1" + std::string(static_cast<std::size_t>(std::abs(expo)), '0') + ".0";
    body = "(" + std::string(expo < 0 ? "/ " : "* ") + mant + " " + pow10 + ")";
  }
  return v < 0 ? "(- " + body + ")" : body;
}

std::string smt_symbol(const std::string& name) {
  std::string out;
  for (char c : name) {
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') ? c : '_';
  }
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front()))) out = "v_" + out;
  return out;
}

std::string smt_expr(const Expr& e, const std::vector<std::string>& names) {
  switch (e.op()) {
    case Op::kVar: return names.at(static_cast<std::size_t>(e.var_id()));
    case Op::kConst: return smt_number(e.value());
    case Op::kAdd:
      return "(+ " + smt_expr(e.arg(0), names) + " " + smt_expr(e.arg(1), names) + ")";
    case Op::kMul:
      return "(* " + smt_expr(e.arg(0), names) + " " + smt_expr(e.arg(1), names) + ")";
    case Op::kNeg: return "(- " + smt_expr(e.arg(0), names) + ")";
    case Op::kAbs: {
      const std::string a = smt_expr(e.arg(0), names);
      return "(ite (>= " + a + " 0.0) " + a + " (- " + a + "))";
    }
    case Op::kMax: {
      const std::string a = smt_expr(e.arg(0), names);
      const std::string b = smt_expr(e.arg(1), names);
      return "(ite (>= " + a + " " + b + ") " + a + " " + b + ")";
    }
    case Op::kExp: return "(exp " + smt_expr(e.arg(0), names) + ")";
    case Op::kSigmoid:
      return "(/ 1.0 (+ 1.0 (exp (- " + smt_expr(e.arg(0), names) + "))))";
    case Op::kTanh: return "(tanh " + smt_expr(e.arg(0), names) + ")";
  }
  return "";
}

}  // namespace

std::string to_smtlib(const Formula& f) {
  std::ostringstream os;
  std::vector<std::string> names;
  os << "(set-logic QF_NRA)\n";
  for (const Variable& v : f.variables()) {
    names.push_back(smt_symbol(v.name));
    os << "(declare-fun " << names.back() << " () Real)\n";
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Interval d = f.variables()[i].domain;
    os << "(assert (<= " << smt_number(d.lo) << " " << names[i] << "))\n";
    os << "(assert (<= " << names[i] << " " << smt_number(d.hi) << "))\n";
  }
  for (const Clause& c : f.clauses()) {
    os << "(assert ";
    if (c.size() > 1) os << "(or";
    for (const Atom& a : c) {
      os << (c.size() > 1 ? " " : "") << "(" << to_string(a.rel) << " "
         << smt_expr(a.lhs, names) << " " << smt_expr(a.rhs, names) << ")";
    }
    if (c.size() > 1) os << ")";
    os << ")\n";
  }
  os << "(check-sat)\n(exit)\n";
  return os.str();
}

Expr network_to_expr(const Network& net, std::span<const Expr> inputs,
                     std::span<const Expr> params) {
  if (static_cast<Eigen::Index>(inputs.size()) != net.input_dim()) {
    throw std::invalid_argument("network_to_expr: expected " + std::to_string(net.input_dim()) +
                                " inputs, got " + std::to_string(inputs.size()));
  }
  if (static_cast<Eigen::Index>(params.size()) != parameter_count(net)) {
    throw std::invalid_argument("network_to_expr: expected " +
                                std::to_string(parameter_count(net)) + " parameters, got " +
                                std::to_string(params.size()));
  }
  std::vector<Expr> a(inputs.begin(), inputs.end());
  std::size_t k = 0;
  for (const Layer& l : net.layers()) {
    const Eigen::Index out = l.out_dim();
    const Eigen::Index in = l.in_dim();
    std::vector<Expr> w;
    w.reserve(static_cast<std::size_t>(out * in));
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        w.push_back(l.fixed_weights ? Expr::constant(l.weights(r, c)) : params[k++]);
      }
    }
    std::vector<Expr> b;
    for (Eigen::Index r = 0; r < out; ++r) {
      b.push_back(l.fixed_biases ? Expr::constant(l.biases[r]) : params[k++]);
    }
    std::vector<Expr> next;
    for (Eigen::Index r = 0; r < out; ++r) {
      Expr z = w[static_cast<std::size_t>(r * in)] * a[0];
      for (Eigen::Index c = 1; c < in; ++c) z = z + w[static_cast<std::size_t>(r * in + c)] * a[static_cast<std::size_t>(c)];
      z = z + b[static_cast<std::size_t>(r)];
      switch (l.activation) {
        case Activation::kLinear: break;
        case Activation::kRelu: z = max(Expr::constant(0.0), z); break;
        case Activation::kSigmoid: z = sigmoid(z); break;
        case Activation::kTanh: z = tanh(z); break;
      }
      next.push_back(z);
    }
    a = std::move(next);
  }
  return a.front();
}

}  // namespace qrobust
