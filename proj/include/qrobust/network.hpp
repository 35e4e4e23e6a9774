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

// Small feed-forward binary classifiers.
//
// A network is a chain of dense layers ending in a single sigmoid node whose
// output is the confidence of label 1. Layers are templated on the scalar
// type so the same forward pass serves point evaluation (double) and
// enclosure computation (Interval).

#ifndef QROBUST_NETWORK_HPP_
#define QROBUST_NETWORK_HPP_

#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "qrobust/interval.hpp"

namespace qrobust {

enum class Activation { kLinear, kRelu, kSigmoid, kTanh };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::kLinear: return z;
    case Activation::kRelu: return relu(z);
    case Activation::kSigmoid: return sigmoid(z);
    case Activation::kTanh: return std::tanh(z);
  }
  return z;
}

inline Interval activate(Activation a, const Interval& z) {
  switch (a) {
    case Activation::kLinear: return z;
    case Activation::kRelu: return relu(z);
    case Activation::kSigmoid: return sigmoid(z);
    case Activation::kTanh: return tanh(z);
  }
  return z;
}

template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Dense layer: activation(weights * input + biases).
///
/// `fixed_weights` / `fixed_biases` pin a parameter group to its stored
/// value; pinned groups are not part of the perturbable parameter vector.
template <typename Scalar>
struct BasicLayer {
  MatrixT<Scalar> weights;
  VectorT<Scalar> biases;
  Activation activation = Activation::kLinear;
  bool fixed_weights = false;
  bool fixed_biases = false;

  Eigen::Index in_dim() const { return weights.cols(); }
  Eigen::Index out_dim() const { return weights.rows(); }
};

template <typename Scalar>
class BasicNetwork {
 public:
  BasicNetwork(Eigen::Index input_dim, std::vector<BasicLayer<Scalar>> layers,
               double level)
      : input_dim_(input_dim), layers_(std::move(layers)), level_(level) {
    if (input_dim_ <= 0) throw std::invalid_argument("input_dim must be positive");
    if (layers_.empty()) throw std::invalid_argument("network has no layers");
    if (!(level_ > 0.0 && level_ < 1.0)) {
      throw std::invalid_argument("decision level must lie in (0, 1)");
    }
    Eigen::Index in = input_dim_;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
      const auto& l = layers_[k];
      if (l.in_dim() != in) {
        throw std::invalid_argument("layer " + std::to_string(k) +
                                    ": input dimension does not chain");
      }
      if (l.biases.size() != l.out_dim()) {
        throw std::invalid_argument("layer " + std::to_string(k) +
                                    ": bias length differs from weight rows");
      }
      in = l.out_dim();
    }
    if (in != 1) throw std::invalid_argument("final layer must have one output");
    if (layers_.back().activation != Activation::kSigmoid) {
      throw std::invalid_argument("final layer activation must be sigmoid");
    }
  }

  Eigen::Index input_dim() const { return input_dim_; }
  const std::vector<BasicLayer<Scalar>>& layers() const { return layers_; }
  double level() const { return level_; }

 private:
  Eigen::Index input_dim_;
  std::vector<BasicLayer<Scalar>> layers_;
  double level_;
};

using Layer = BasicLayer<double>;
using Network = BasicNetwork<double>;
using IntervalNetwork = BasicNetwork<Interval>;

/// Scalar confidence f(x) in [0, 1].
template <typename Scalar>
Scalar forward(const BasicNetwork<Scalar>& net, const VectorT<Scalar>& x) {
  if (x.size() != net.input_dim()) {
    throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                ", network expects " +
                                std::to_string(net.input_dim()));
  }
  VectorT<Scalar> a = x;
  for (const auto& layer : net.layers()) {
    VectorT<Scalar> z = layer.weights * a + layer.biases;
    a = z.unaryExpr([&](const Scalar& v) { return Scalar(activate(layer.activation, v)); });
  }
  return a[0];
}

/// Label 1 iff confidence >= level (ties go to 1).
int classify(const Network& net, const Eigen::VectorXd& x);

struct ParamIndex {
  enum class Kind { kWeight, kBias };
  int layer = 0;
  Kind kind = Kind::kWeight;
  int row = 0;
  int col = 0;  // 0 for biases

  friend bool operator==(const ParamIndex&, const ParamIndex&) = default;
};

/// Flat view of the perturbable parameters of a network.
///
/// Ordering is layer-major; inside a layer all weights (row-major) come
/// before the biases. Pinned groups are skipped.
struct ParamVector {
  Eigen::VectorXd values;
  std::vector<ParamIndex> index_map;

  Eigen::Index size() const { return values.size(); }
};

std::vector<ParamIndex> parameter_layout(const Network& arch);
Eigen::Index parameter_count(const Network& arch);

ParamVector flatten(const Network& net);

/// Rebuilds `arch` with its perturbable parameters taken from `values`.
template <typename Scalar>
BasicNetwork<Scalar> unflatten(const Network& arch, const VectorT<Scalar>& values) {
  if (values.size() != parameter_count(arch)) {
    throw std::invalid_argument("parameter vector has length " +
                                std::to_string(values.size()) + ", expected " +
                                std::to_string(parameter_count(arch)));
  }
  std::vector<BasicLayer<Scalar>> layers;
  layers.reserve(arch.layers().size());
  Eigen::Index k = 0;
  for (const Layer& l : arch.layers()) {
    BasicLayer<Scalar> out;
    out.weights = l.weights.template cast<Scalar>();
    out.biases = l.biases.template cast<Scalar>();
    out.activation = l.activation;
    out.fixed_weights = l.fixed_weights;
    out.fixed_biases = l.fixed_biases;
    if (!l.fixed_weights) {
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) out.weights(r, c) = values[k++];
      }
    }
    if (!l.fixed_biases) {
      for (Eigen::Index r = 0; r < l.biases.size(); ++r) out.biases[r] = values[k++];
    }
    layers.push_back(std::move(out));
  }
  return BasicNetwork<Scalar>(arch.input_dim(), std::move(layers), arch.level());
}

Network unflatten(const Network& arch, const ParamVector& pv);

/// Componentwise (infinity-norm) ball [p0 - delta, p0 + delta].
Box perturb_box(const ParamVector& p0, double delta);

/// Enclosure of { f_p(x) : p in param_box, x in input_box }, within [0, 1].
Interval interval_forward(const Network& net, const Box& param_box, const Box& input_box);

/// Allocation-free point evaluation straight from a flat parameter array.
/// Holds scratch space, so one instance per thread.
class FlatEvaluator {
 public:
  explicit FlatEvaluator(const Network& arch);

  double operator()(std::span<const double> params, std::span<const double> x);

  // Outputs for every row of `params` (one parameter vector per row) at x.
  const Eigen::ArrayXd& batch(const Eigen::MatrixXd& params, std::span<const double> x);

  Eigen::Index num_params() const { return num_params_; }

 private:
  struct Slot {
    int param = -1;  // -1: pinned, use `value`
    double value = 0.0;
  };
  struct FlatLayer {
    int in = 0;
    int out = 0;
    Activation act = Activation::kLinear;
    std::vector<Slot> weights;  // row-major
    std::vector<Slot> biases;
  };
  std::vector<FlatLayer> layers_;
  Eigen::Index input_dim_ = 0;
  Eigen::Index num_params_ = 0;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<Eigen::ArrayXd> batch_a_;
  std::vector<Eigen::ArrayXd> batch_b_;
};

Network parse_network(std::string_view json_text);
Network load_network(const std::string& path);
std::string network_to_json(const Network& net);

}  // namespace qrobust

#endif  // QROBUST_NETWORK_HPP_
