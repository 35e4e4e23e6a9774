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

// Shared networks and helpers for the test binaries.

#ifndef QROBUST_TESTS_FIXTURES_HPP_
#define QROBUST_TESTS_FIXTURES_HPP_

#include <string>

#include <Eigen/Core>

#include "qrobust/interval.hpp"
#include "qrobust/network.hpp"

namespace qrobust::testing {

inline std::string data_path(const std::string& name) {
  return std::string(QROBUST_DATA_DIR) + "/" + name;
}

// sig(w * x) with the bias pinned at 0; w0 = 1.
inline Network toy_wx() {
  Layer l;
  l.weights = Eigen::MatrixXd::Ones(1, 1);
  l.biases = Eigen::VectorXd::Zero(1);
  l.activation = Activation::kSigmoid;
  l.fixed_biases = true;
  return Network(1, {l}, 0.5);
}

// sig(x + b) with the weight pinned at 1; b0 = 0.
inline Network toy_xb() {
  Layer l;
  l.weights = Eigen::MatrixXd::Ones(1, 1);
  l.biases = Eigen::VectorXd::Zero(1);
  l.activation = Activation::kSigmoid;
  l.fixed_weights = true;
  return Network(1, {l}, 0.5);
}

// Logistic regression on heart and body weight of cats.
inline Network cat_net() {
  Layer l;
  l.weights.resize(1, 2);
  l.weights << 0.07577862, 1.18118408;
  l.biases = Eigen::VectorXd::Constant(1, -3.51518067);
  l.activation = Activation::kSigmoid;
  return Network(2, {l}, 0.5);
}

// Bounding box of the bundled cats dataset (Hwt, Bwt).
inline Box cat_domain() {
  Box d(2);
  d[0] = Interval(6.3, 20.5);
  d[1] = Interval(2.0, 3.9);
  return d;
}

inline Box interval_box(std::initializer_list<Interval> xs) {
  Box b(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (const Interval& x : xs) b[i++] = x;
  return b;
}

inline Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

}  // namespace qrobust::testing

#endif  // QROBUST_TESTS_FIXTURES_HPP_
