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

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fixtures.hpp"
#include "qrobust/expr.hpp"
#include "qrobust/network.hpp"

namespace qrobust {
namespace {

using testing::interval_box;
using testing::vec;

TEST_SUITE("expr") {

TEST_CASE("scalar evaluation") {
  CHECK(eval(sigmoid(Expr::constant(0.0)), Eigen::VectorXd()) == 0.5);
  CHECK(eval(abs(Expr::constant(-3.0)), Eigen::VectorXd()) == 3.0);
  CHECK(eval(max(Expr::constant(0.0), Expr::var(0)), vec({-2.0})) == 0.0);
  const Expr x = Expr::var(0);
  const Expr y = Expr::var(1);
  CHECK(eval(x * y - 2.0 * x + tanh(y), vec({3.0, 0.5})) ==
        doctest::Approx(1.5 - 6.0 + std::tanh(0.5)));
  CHECK(eval(exp(x), vec({1.0})) == doctest::Approx(std::exp(1.0)));
}

TEST_CASE("constants fold at construction") {
  const Expr e = Expr::constant(2.0) * Expr::constant(3.0) + Expr::constant(1.0);
  REQUIRE(e.is_const());
  CHECK(e.value() == 7.0);
}

TEST_CASE("unassigned variables are reported") {
  CHECK_THROWS_AS(eval(Expr::var(2), vec({1.0})), std::out_of_range);
  CHECK_THROWS_AS(Expr::var(-1), std::invalid_argument);
}

TEST_CASE("interval evaluation") {
  const Expr x = Expr::var(0);
  const Interval sq = eval_interval(x * x, interval_box({Interval(-1.0, 2.0)}));
  CHECK(sq.lo <= -2.0);
  CHECK(sq.lo > -2.0 - 1e-12);
  CHECK(sq.hi >= 4.0);
  const Interval s = eval_interval(sigmoid(x), interval_box({Interval(0.0, 1.0)}));
  CHECK(s.lo <= 0.5);
  CHECK(s.hi >= 0.7310585786);
  CHECK(s.lo >= 0.499999);
  CHECK(s.hi <= 0.731060);
  const Interval e = eval_interval(exp(x), interval_box({Interval(0.0, 1.0)}));
  CHECK(e.lo <= 1.0);
  CHECK(e.hi >= 2.718281);
}

TEST_CASE("tape shares repeated subexpressions") {
  const Expr x = Expr::var(0);
  const Tape t(x * x);
  const TapeNode& root = t.nodes()[static_cast<std::size_t>(t.roots()[0])];
  CHECK(root.op == Op::kMul);
  CHECK(root.a == root.b);
  CHECK(t.var_nodes().size() == 1);

  const Expr s = sigmoid(x + 1.0);
  const std::vector<Expr> roots{s, 2.0 * s * s};
  const Tape shared{std::span<const Expr>(roots)};
  int sigmoids = 0;
  for (const TapeNode& n : shared.nodes()) sigmoids += n.op == Op::kSigmoid;
  CHECK(sigmoids == 1);
  CHECK(shared.eval(vec({0.0}), 1) == doctest::Approx(2.0 * sigmoid(1.0) * sigmoid(1.0)));
}

TEST_CASE("variables_of lists each id once") {
  const Expr x = Expr::var(3);
  const Expr y = Expr::var(1);
  const std::vector<int> ids = variables_of(x * y + x);
  CHECK(ids == std::vector<int>{1, 3});
}

TEST_CASE("formula validation") {
  Formula f;
  const Expr x = f.add_variable("x", Interval(0.0, 1.0));
  f.add(ge(x, Expr::constant(0.5)));
  CHECK_NOTHROW(f.validate());
  CHECK(f.find("x") == 0);
  CHECK(f.find("y") == -1);
  f.add(le(Expr::var(4), x));
  CHECK_THROWS_AS(f.validate(), std::invalid_argument);

  Formula g;
  g.add_variable("u", Interval(0.0, std::numeric_limits<double>::infinity()));
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  CHECK_THROWS_AS(g.add_clause({}), std::invalid_argument);
}

TEST_CASE("SMT-LIB dump declares and asserts") {
  Formula f;
  const Expr x = f.add_variable("x", Interval(0.0, 2.0));
  f.add(eq(x * x, Expr::constant(2.0)));
  f.add_clause({lt(x, Expr::constant(0.5)), gt(sigmoid(x), Expr::constant(0.9))});
  const std::string s = to_smtlib(f);
  CHECK(s.find("(declare-fun x () Real)") != std::string::npos);
  CHECK(s.find("(assert (or") != std::string::npos);
  CHECK(s.find("(check-sat)") != std::string::npos);
  CHECK(s.find("exp") != std::string::npos);
}

TEST_CASE("network_to_expr with constant substitution") {
  const Network net = testing::cat_net();
  const ParamVector p = flatten(net);
  std::vector<Expr> params;
  for (Eigen::Index i = 0; i < p.size(); ++i) params.push_back(Expr::constant(p.values[i]));
  const std::vector<Expr> inputs{Expr::constant(0.0), Expr::constant(0.0)};
  const Expr e = network_to_expr(net, inputs, params);
  CHECK(std::abs(eval(e, Eigen::VectorXd()) - 0.02888) < 1e-5);
  CHECK_THROWS_AS(network_to_expr(net, std::span<const Expr>(inputs).first(1), params),
                  std::invalid_argument);
}

TEST_CASE("network_to_expr with parameters as variables") {
  const Network net = testing::cat_net();
  const ParamVector p = flatten(net);
  const std::vector<Expr> params{Expr::var(0), Expr::var(1), Expr::var(2)};
  const std::vector<Expr> inputs{Expr::var(3), Expr::var(4)};
  const Expr e = network_to_expr(net, inputs, params);
  Eigen::VectorXd pt(5);
  pt << p.values, 12.0, 3.1;
  CHECK(eval(e, pt) == doctest::Approx(forward(net, vec({12.0, 3.1}))).epsilon(1e-14));
}

}  // TEST_SUITE

}  // namespace
}  // namespace qrobust
