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

#include "qrobust/query_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qrobust/oracle.hpp"

namespace qrobust {

using json = nlohmann::json;

std::string resolve_path(const std::string& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return p.string();
  return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

namespace {

Eigen::VectorXd vector_of(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) {
    throw std::invalid_argument(std::string(what) + " must be a non-empty array");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Box parse_domain(const json& j, const std::string& base_dir) {
  if (j.contains("dataset")) {
    std::vector<std::string> features;
    if (j.contains("features")) features = j.at("features").get<std::vector<std::string>>();
    const Dataset ds = load_dataset(resolve_path(base_dir, j.at("dataset").get<std::string>()),
                                    features, j.value("label", std::string()));
    return domain_from_dataset(ds);
  }
  const Eigen::VectorXd lo = vector_of(j.at("lo"), "domain.lo");
  const Eigen::VectorXd hi = vector_of(j.at("hi"), "domain.hi");
  if (lo.size() != hi.size()) throw std::invalid_argument("domain.lo and domain.hi differ in length");
  if ((lo.array() > hi.array()).any()) throw std::invalid_argument("domain has lo > hi");
  return make_box(lo, hi);
}

}  // namespace

QuerySpec parse_query(std::string_view json_text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("query JSON: ") + e.what());
  }
  try {
    QuerySpec s;
    s.kind = parse_query_kind(j.at("kind").get<std::string>());
    s.delta = j.at("delta").get<double>();
    if (j.contains("epsilon")) s.epsilon = j.at("epsilon").get<double>();
    if (j.contains("sigma")) s.sigma = j.at("sigma").get<double>();
    if (j.contains("side")) s.side = parse_side(j.at("side").get<std::string>());
    if (j.contains("x0")) s.x0 = vector_of(j.at("x0"), "x0");
    if (j.contains("domain")) s.domain = parse_domain(j.at("domain"), base_dir);
    if (j.contains("model")) s.model = resolve_path(base_dir, j.at("model").get<std::string>());
    if (j.contains("quant")) s.frac_bits = j.at("quant").at("frac_bits").get<int>();
    if (j.contains("reference")) s.reference = j.at("reference").get<double>();
    if (!(s.delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("query JSON: ") + e.what());
  }
}

QuerySpec load_query(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open query file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_query(ss.str(), std::filesystem::path(path).parent_path().string());
}

RobustnessQuery to_query(const QuerySpec& spec, const Network& net) {
  RobustnessQuery q{spec.kind, net, flatten(net), spec.delta, {}, {}, spec.x0, spec.domain};
  if (spec.kind == QueryKind::kLocalEps || spec.kind == QueryKind::kGlobalEps) q.epsilon = spec.epsilon;
  if (spec.kind == QueryKind::kSigmaFlip) q.sigma = spec.sigma;
  validate(q);
  return q;
}

}  // namespace qrobust
