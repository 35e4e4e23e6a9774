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

#include "qrobust/network.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace qrobust {

using json = nlohmann::json;

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kLinear: return "linear";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
    case Activation::kTanh: return "tanh";
  }
  return "linear";
}

Activation parse_activation(std::string_view name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

int classify(const Network& net, const Eigen::VectorXd& x) {
  return forward(net, x) >= net.level() ? 1 : 0;
}

std::vector<ParamIndex> parameter_layout(const Network& arch) {
  std::vector<ParamIndex> out;
  for (std::size_t k = 0; k < arch.layers().size(); ++k) {
    const Layer& l = arch.layers()[k];
    const int layer = static_cast<int>(k);
    if (!l.fixed_weights) {
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
          out.push_back({layer, ParamIndex::Kind::kWeight, static_cast<int>(r),
                         static_cast<int>(c)});
        }
      }
    }
    if (!l.fixed_biases) {
      for (Eigen::Index r = 0; r < l.biases.size(); ++r) {
        out.push_back({layer, ParamIndex::Kind::kBias, static_cast<int>(r), 0});
      }
    }
  }
  return out;
}

Eigen::Index parameter_count(const Network& arch) {
  Eigen::Index n = 0;
  for (const Layer& l : arch.layers()) {
    if (!l.fixed_weights) n += l.weights.size();
    if (!l.fixed_biases) n += l.biases.size();
  }
  return n;
}

ParamVector flatten(const Network& net) {
  ParamVector pv;
  pv.index_map = parameter_layout(net);
  pv.values.resize(static_cast<Eigen::Index>(pv.index_map.size()));
  for (std::size_t i = 0; i < pv.index_map.size(); ++i) {
    const ParamIndex& ix = pv.index_map[i];
    const Layer& l = net.layers()[ix.layer];
    pv.values[static_cast<Eigen::Index>(i)] =
        ix.kind == ParamIndex::Kind::kWeight ? l.weights(ix.row, ix.col) : l.biases[ix.row];
  }
  return pv;
}

Network unflatten(const Network& arch, const ParamVector& pv) {
  if (pv.index_map != parameter_layout(arch)) {
    throw std::invalid_argument("parameter vector layout does not match architecture");
  }
  return unflatten<double>(arch, pv.values);
}

namespace {

// a + b rounded outward, exact when the sum is representable (TwoSum error).
double sum_down(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err < 0.0 ? round_down(s) : s;
}
double sum_up(double a, double b) {
  const double s = a + b;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return err > 0.0 ? round_up(s) : s;
}

}  // namespace

Box perturb_box(const ParamVector& p0, double delta) {
  if (!(delta >= 0.0)) throw std::invalid_argument("perturbation radius must be >= 0");
  Box b(p0.size());
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    const double v = p0.values[i];
    b[i] = Interval(sum_down(v, -delta), sum_up(v, delta));
  }
  return b;
}

Interval interval_forward(const Network& net, const Box& param_box, const Box& input_box) {
  if (param_box.size() != parameter_count(net)) {
    throw std::invalid_argument("parameter box dimension mismatch");
  }
  if (input_box.size() != net.input_dim()) {
    throw std::invalid_argument("input box dimension mismatch");
  }
  const IntervalNetwork inet = unflatten<Interval>(net, param_box);
  return intersect(forward(inet, input_box), Interval(0.0, 1.0));
}

FlatEvaluator::FlatEvaluator(const Network& arch) : input_dim_(arch.input_dim()) {
  int k = 0;
  std::size_t widest = static_cast<std::size_t>(arch.input_dim());
  for (const Layer& l : arch.layers()) {
    FlatLayer fl;
    fl.in = static_cast<int>(l.in_dim());
    fl.out = static_cast<int>(l.out_dim());
    fl.act = l.activation;
    for (int r = 0; r < fl.out; ++r) {
      for (int c = 0; c < fl.in; ++c) {
        fl.weights.push_back(l.fixed_weights ? Slot{-1, l.weights(r, c)} : Slot{k++, 0.0});
      }
    }
    for (int r = 0; r < fl.out; ++r) {
      fl.biases.push_back(l.fixed_biases ? Slot{-1, l.biases[r]} : Slot{k++, 0.0});
    }
    widest = std::max(widest, static_cast<std::size_t>(fl.out));
    layers_.push_back(std::move(fl));
  }
  num_params_ = k;
  a_.resize(widest);
  b_.resize(widest);
}

double FlatEvaluator::operator()(std::span<const double> params, std::span<const double> x) {
  if (static_cast<Eigen::Index>(params.size()) != num_params_ ||
      static_cast<Eigen::Index>(x.size()) != input_dim_) {
    throw std::invalid_argument("FlatEvaluator: dimension mismatch");
  }
  std::copy(x.begin(), x.end(), a_.begin());
  for (const FlatLayer& l : layers_) {
    for (int r = 0; r < l.out; ++r) {
      const Slot& bs = l.biases[r];
      double z = bs.param < 0 ? bs.value : params[bs.param];
      const Slot* w = &l.weights[static_cast<std::size_t>(r) * l.in];
      for (int c = 0; c < l.in; ++c) {
        z += (w[c].param < 0 ? w[c].value : params[w[c].param]) * a_[c];
      }
      b_[r] = activate(l.act, z);
    }
    std::swap(a_, b_);
  }
  return a_[0];
}

const Eigen::ArrayXd& FlatEvaluator::batch(const Eigen::MatrixXd& params,
                                          std::span<const double> x) {
  if (params.cols() != num_params_ || static_cast<Eigen::Index>(x.size()) != input_dim_) {
    throw std::invalid_argument("FlatEvaluator: dimension mismatch");
  }
  const Eigen::Index n = params.rows();
  std::size_t widest = x.size();
  for (const FlatLayer& l : layers_) widest = std::max(widest, static_cast<std::size_t>(l.out));
  batch_a_.resize(widest);
  batch_b_.resize(widest);
  for (std::size_t c = 0; c < x.size(); ++c) batch_a_[c].setConstant(n, x[c]);
  for (const FlatLayer& l : layers_) {
    for (int r = 0; r < l.out; ++r) {
      Eigen::ArrayXd& z = batch_b_[static_cast<std::size_t>(r)];
      const Slot& bs = l.biases[r];
      if (bs.param < 0) {
        z.setConstant(n, bs.value);
      } else {
        z = params.col(bs.param).array();
      }
      const Slot* w = &l.weights[static_cast<std::size_t>(r) * l.in];
      for (int c = 0; c < l.in; ++c) {
        const Eigen::ArrayXd& a = batch_a_[static_cast<std::size_t>(c)];
        if (w[c].param < 0) {
          z += w[c].value * a;
        } else {
          z += params.col(w[c].param).array() * a;
        }
      }
      switch (l.act) {
        case Activation::kLinear: break;
        case Activation::kRelu: z = z.max(0.0); break;
        case Activation::kSigmoid: z = 1.0 / (1.0 + (-z).exp()); break;
        case Activation::kTanh: z = z.tanh(); break;
      }
    }
    std::swap(batch_a_, batch_b_);
  }
  return batch_a_[0];
}

namespace {

Layer parse_layer(const json& j, std::size_t index) {
  const std::string where = "layers[" + std::to_string(index) + "]";
  if (!j.contains("weights") || !j.contains("biases") || !j.contains("activation")) {
    throw std::invalid_argument(where + ": needs weights, biases and activation");
  }
  const auto& rows = j.at("weights");
  const auto& bias = j.at("biases");
  if (!rows.is_array() || rows.empty() || !bias.is_array()) {
    throw std::invalid_argument(where + ": weights/biases must be non-empty arrays");
  }
  const auto out = static_cast<Eigen::Index>(rows.size());
  const auto in = static_cast<Eigen::Index>(rows.front().size());
  Layer l;
  l.weights.resize(out, in);
  for (Eigen::Index r = 0; r < out; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != in) {
      throw std::invalid_argument(where + ": ragged weight matrix");
    }
    for (Eigen::Index c = 0; c < in; ++c) l.weights(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  l.biases.resize(static_cast<Eigen::Index>(bias.size()));
  for (std::size_t r = 0; r < bias.size(); ++r) l.biases[static_cast<Eigen::Index>(r)] = bias[r].get<double>();
  l.activation = parse_activation(j.at("activation").get<std::string>());
  l.fixed_weights = j.value("fixed_weights", false);
  l.fixed_biases = j.value("fixed_biases", false);
  return l;
}

}  // namespace

Network parse_network(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("network JSON: ") + e.what());
  }
  try {
    std::vector<Layer> layers;
    const auto& arr = j.at("layers");
    for (std::size_t i = 0; i < arr.size(); ++i) layers.push_back(parse_layer(arr[i], i));
    return Network(j.at("input_dim").get<Eigen::Index>(), std::move(layers),
                   j.at("level").get<double>());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("network JSON: ") + e.what());
  }
}

Network load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open network file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string network_to_json(const Network& net) {
  json j;
  j["input_dim"] = net.input_dim();
  j["level"] = net.level();
  j["layers"] = json::array();
  for (const Layer& l : net.layers()) {
    json jl;
    jl["weights"] = json::array();
    for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < l.weights.cols(); ++c) row.push_back(l.weights(r, c));
      jl["weights"].push_back(row);
    }
    jl["biases"] = std::vector<double>(l.biases.data(), l.biases.data() + l.biases.size());
    jl["activation"] = std::string(to_string(l.activation));
    if (l.fixed_weights) jl["fixed_weights"] = true;
    if (l.fixed_biases) jl["fixed_biases"] = true;
    j["layers"].push_back(jl);
  }
  return j.dump(2);
}

}  // namespace qrobust
