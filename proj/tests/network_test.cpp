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
#include <stdexcept>

#include "doctest.h"
#include "fixtures.hpp"
#include "qrobust/network.hpp"

namespace qrobust {
namespace {

using testing::cat_net;
using testing::interval_box;
using testing::vec;

Network two_layer() {
  Layer h;
  h.weights.resize(2, 2);
  h.weights << 1.0, -2.0, 0.5, 0.25;
  h.biases = vec({0.1, -0.3});
  h.activation = Activation::kRelu;
  Layer o;
  o.weights.resize(1, 2);
  o.weights << 1.5, -0.7;
  o.biases = vec({0.2});
  o.activation = Activation::kSigmoid;
  return Network(2, {h, o}, 0.5);
}

TEST_SUITE("network") {

TEST_CASE("cat net at the origin") {
  const Network net = cat_net();
  CHECK(std::abs(forward(net, vec({0.0, 0.0})) - 0.02888) < 1e-5);
  CHECK(classify(net, vec({0.0, 0.0})) == 0);
  CHECK(classify(net, vec({30.0, 4.0})) == 1);
  CHECK(forward(net, vec({30.0, 4.0})) == doctest::Approx(0.970198).epsilon(1e-5));
}

TEST_CASE("zero parameters give one half") {
  Layer l;
  l.weights = Eigen::MatrixXd::Zero(1, 3);
  l.biases = Eigen::VectorXd::Zero(1);
  l.activation = Activation::kSigmoid;
  const Network net(3, {l}, 0.5);
  CHECK(forward(net, vec({4.0, -2.0, 9.0})) == 0.5);
}

TEST_CASE("relu on a negative input feeds zero forward") {
  Layer h;
  h.weights = Eigen::MatrixXd::Ones(1, 1);
  h.biases = Eigen::VectorXd::Zero(1);
  h.activation = Activation::kRelu;
  Layer o;
  o.weights = Eigen::MatrixXd::Ones(1, 1);
  o.biases = Eigen::VectorXd::Zero(1);
  o.activation = Activation::kSigmoid;
  const Network net(1, {h, o}, 0.5);
  CHECK(forward(net, vec({-1.0})) == 0.5);
}

TEST_CASE("confidence exactly at the level is label 1") {
  Layer l;
  l.weights = Eigen::MatrixXd::Ones(1, 1);
  l.biases = Eigen::VectorXd::Zero(1);
  l.activation = Activation::kSigmoid;
  const Network net(1, {l}, 0.5);
  CHECK(classify(net, vec({0.0})) == 1);
}

TEST_CASE("construction rejects malformed shapes") {
  Layer l;
  l.weights = Eigen::MatrixXd::Ones(2, 2);
  l.biases = Eigen::VectorXd::Zero(2);
  l.activation = Activation::kSigmoid;
  CHECK_THROWS_AS(Network(2, {l}, 0.5), std::invalid_argument);
  Layer one;
  one.weights = Eigen::MatrixXd::Ones(1, 2);
  one.biases = Eigen::VectorXd::Zero(1);
  one.activation = Activation::kRelu;
  CHECK_THROWS_AS(Network(2, {one}, 0.5), std::invalid_argument);
  one.activation = Activation::kSigmoid;
  CHECK_THROWS_AS(Network(3, {one}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(Network(2, {one}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(forward(Network(2, {one}, 0.5), vec({1.0})), std::invalid_argument);
}

TEST_CASE("flatten orders weights before biases, layer by layer") {
  const ParamVector p = flatten(cat_net());
  REQUIRE(p.size() == 3);
  CHECK(p.values[0] == 0.07577862);
  CHECK(p.values[1] == 1.18118408);
  CHECK(p.values[2] == -3.51518067);
  CHECK(p.index_map[2].kind == ParamIndex::Kind::kBias);

  const ParamVector q = flatten(two_layer());
  CHECK(q.size() == 9);
  CHECK(q.values[1] == -2.0);
  CHECK(q.values[4] == 0.1);
  CHECK(q.index_map[6].layer == 1);
  CHECK(q.index_map[6].col == 0);
}

TEST_CASE("pinned parameters are not flattened") {
  CHECK(parameter_count(testing::toy_wx()) == 1);
  CHECK(parameter_count(testing::toy_xb()) == 1);
  CHECK(flatten(testing::toy_xb()).index_map[0].kind == ParamIndex::Kind::kBias);
}

TEST_CASE("unflatten inverts flatten") {
  const Network net = two_layer();
  const ParamVector p = flatten(net);
  const Network back = unflatten(net, p);
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    CHECK(back.layers()[k].weights == net.layers()[k].weights);
    CHECK(back.layers()[k].biases == net.layers()[k].biases);
  }
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(9, -1.0, 1.0);
  CHECK(flatten(unflatten<double>(net, v)).values == v);
  CHECK_THROWS_AS(unflatten<double>(net, Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("perturb_box is componentwise") {
  ParamVector p;
  p.values = vec({1.0, -2.0});
  p.index_map.resize(2);
  const Box b = perturb_box(p, 0.5);
  CHECK(b[0] == Interval(0.5, 1.5));
  CHECK(b[1] == Interval(-2.5, -1.5));
  const Box z = perturb_box(p, 0.0);
  CHECK(z[0].is_point());
  CHECK(z[1].is_point());
  CHECK_THROWS_AS(perturb_box(p, -1.0), std::invalid_argument);

  const Box c = perturb_box(flatten(cat_net()), 0.005);
  CHECK(c[0].contains(0.07577862 - 0.005));
  CHECK(c[0].contains(0.07577862 + 0.005));
  CHECK(c[0].width() < 0.01 + 1e-15);
}

TEST_CASE("interval_forward on degenerate boxes is nearly a point") {
  const Network net = two_layer();
  const Eigen::VectorXd x = vec({0.3, -0.4});
  const Interval y = interval_forward(net, point_box(flatten(net).values), point_box(x));
  CHECK(y.contains(forward(net, x)));
  CHECK(y.width() < 1e-14);
}

TEST_CASE("interval_forward for sig(w x) over w in [0.9, 1.1]") {
  const Network net = testing::toy_wx();
  const Interval y = interval_forward(net, interval_box({Interval(0.9, 1.1)}),
                                      interval_box({Interval(1.0)}));
  CHECK(y.lo <= 0.71095);
  CHECK(y.hi >= 0.75026);
  CHECK(y.subset_of(Interval(0.0, 1.0)));
  CHECK_THROWS_AS(interval_forward(net, interval_box({Interval(1.0), Interval(1.0)}),
                                   interval_box({Interval(1.0)})),
                  std::invalid_argument);
}

TEST_CASE("JSON round trip keeps every digit") {
  const Network net = two_layer();
  const Network back = parse_network(network_to_json(net));
  CHECK(back.layers()[0].weights == net.layers()[0].weights);
  CHECK(back.layers()[1].biases == net.layers()[1].biases);
  CHECK(back.layers()[0].activation == Activation::kRelu);

  const Network cat = load_network(testing::data_path("cat.json"));
  CHECK(flatten(cat).values == flatten(cat_net()).values);
}

TEST_CASE("JSON errors name the layer") {
  CHECK_THROWS_WITH_AS(
      parse_network(R"({"input_dim": 1, "level": 0.5, "layers": [{"weights": [[1]], "biases": [0]}]})"),
      doctest::Contains("layers[0]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_network("{not json"), std::invalid_argument);
  CHECK_THROWS_AS(parse_network(R"({"input_dim": 1, "level": 0.5, "layers": [{"weights": [[1]],
      "biases": [0], "activation": "softmax"}]})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_network("/nonexistent/model.json"), std::runtime_error);
}

TEST_CASE("flat evaluator matches forward") {
  const Network net = two_layer();
  FlatEvaluator ev(net);
  const ParamVector p = flatten(net);
  const Eigen::VectorXd x = vec({0.7, 0.2});
  CHECK(ev(std::span<const double>(p.values.data(), 9), std::span<const double>(x.data(), 2)) ==
        doctest::Approx(forward(net, x)).epsilon(1e-15));
  Eigen::MatrixXd rows(2, 9);
  rows.row(0) = p.values.transpose();
  rows.row(1) = Eigen::RowVectorXd::Zero(9);
  const Eigen::ArrayXd out = ev.batch(rows, std::span<const double>(x.data(), 2));
  CHECK(out[0] == doctest::Approx(forward(net, x)).epsilon(1e-14));
  CHECK(out[1] == 0.5);
}

}  // TEST_SUITE

}  // namespace
}  // namespace qrobust
