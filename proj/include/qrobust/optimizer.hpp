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

// Certified global minimization by best-first branch and bound over the
// contractor, and the robustness estimates built on it.

#ifndef QROBUST_OPTIMIZER_HPP_
#define QROBUST_OPTIMIZER_HPP_

#include <cstdint>

#include <Eigen/Core>

#include "qrobust/encoder.hpp"
#include "qrobust/solver.hpp"

namespace qrobust {

/// lower <= min <= upper. An infeasible problem reports lower = upper = +inf
/// and an empty witness.
struct OptResult {
  double lower = 0.0;
  double upper = 0.0;
  Eigen::VectorXd witness;  // attains `upper`
  std::int64_t splits_used = 0;
  bool converged = false;   // upper - lower <= tolerance

  bool infeasible() const;
};

OptResult minimize(const OptProblem& problem, const SolverConfig& config = {},
                   double tolerance = 1e-4);

/// Certified enclosure of a maximized robustness quantity.
struct Estimate {
  double lower = 0.0;
  double upper = 0.0;
  Eigen::VectorXd witness;  // variables of the underlying OptProblem
  std::int64_t splits_used = 0;
  bool converged = false;
};

Estimate estimate_eps_local(const Network& net, const ParamVector& p0, const Eigen::VectorXd& x0,
                            double delta, const SolverConfig& config = {},
                            double tolerance = 1e-4);
Estimate estimate_eps_global(const Network& net, const ParamVector& p0, const Box& domain,
                             double delta, const SolverConfig& config = {},
                             double tolerance = 1e-4);
// No flippable input gives the zero enclosure.
Estimate estimate_sigma(const Network& net, const ParamVector& p0, const Box& domain,
                        double delta, Side side, const SolverConfig& config = {},
                        double tolerance = 1e-4);

}  // namespace qrobust

#endif  // QROBUST_OPTIMIZER_HPP_
