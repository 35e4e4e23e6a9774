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

// Robustness queries and their encodings as satisfiability / optimization
// problems.
//
// Verification formulas are the negations of the robustness properties: a
// query is verified when its formula is unsatisfiable. Variables are laid
// out as the perturbable parameters p_0..p_{n-1}, then (global kinds) the
// inputs x_0..x_{d-1}, then (optimization problems) the objective variable.
//
// Labels follow classify(): label 1 iff f >= level.

#ifndef QROBUST_ENCODER_HPP_
#define QROBUST_ENCODER_HPP_

#include <optional>
#include <string_view>

#include "qrobust/expr.hpp"
#include "qrobust/network.hpp"

namespace qrobust {

enum class QueryKind { kLocalEps, kGlobalEps, kLocalFlip, kGlobalFlip, kSigmaFlip };

// Which side of the decision level the unperturbed confidence lies on.
enum class Side { kAbove, kBelow, kBoth };

std::string_view to_string(QueryKind k);
QueryKind parse_query_kind(std::string_view s);
std::string_view to_string(Side s);
Side parse_side(std::string_view s);

inline bool is_local(QueryKind k) {
  return k == QueryKind::kLocalEps || k == QueryKind::kLocalFlip;
}

struct RobustnessQuery {
  QueryKind kind;
  Network net;
  ParamVector p0;
  double delta = 0.0;
  std::optional<double> epsilon;        // eps kinds
  std::optional<double> sigma;          // kSigmaFlip
  std::optional<Eigen::VectorXd> x0;    // local kinds
  std::optional<Box> domain;            // global kinds

  static RobustnessQuery local_eps(const Network& net, Eigen::VectorXd x0, double delta,
                                   double epsilon);
  static RobustnessQuery global_eps(const Network& net, Box domain, double delta,
                                    double epsilon);
  static RobustnessQuery local_flip(const Network& net, Eigen::VectorXd x0, double delta);
  static RobustnessQuery global_flip(const Network& net, Box domain, double delta);
  static RobustnessQuery sigma_flip(const Network& net, Box domain, double delta,
                                    double sigma);

  double level() const { return net.level(); }
};

/// Throws std::invalid_argument unless exactly the fields the kind needs are
/// present and well-formed.
void validate(const RobustnessQuery& q);

Formula encode_local_eps(const RobustnessQuery& q);
Formula encode_global_eps(const RobustnessQuery& q);
Formula encode_local_flip(const RobustnessQuery& q);
Formula encode_global_flip(const RobustnessQuery& q);
Formula encode_sigma_flip(const RobustnessQuery& q);

/// Dispatch on q.kind with the parameters ranging over perturb_box(p0, delta).
Formula encode(const RobustnessQuery& q);
/// Same, but the parameters range over `param_box` while the reference
/// network stays at q.p0 (used for the exact quantized-point check).
Formula encode(const RobustnessQuery& q, const Box& param_box);

/// Minimize `objective` subject to `constraints`.
struct OptProblem {
  Expr objective;
  Formula constraints;
  Interval objective_range;
};

// Maximum confidence deviation at x0 (minimizes -eps).
OptProblem opt_local_eps(const Network& net, const ParamVector& p0, const Eigen::VectorXd& x0,
                         double delta, double eps_max = 1.0);
// Maximum confidence deviation over the domain box.
OptProblem opt_global_eps(const Network& net, const ParamVector& p0, const Box& domain,
                          double delta, double eps_max = 1.0);
// Largest margin |f_p0(x) - level| among inputs whose label can flip.
// sigma_max <= 0 selects max(level, 1 - level).
OptProblem opt_sigma(const Network& net, const ParamVector& p0, const Box& domain, double delta,
                     Side side, double sigma_max = 0.0);

}  // namespace qrobust

#endif  // QROBUST_ENCODER_HPP_
