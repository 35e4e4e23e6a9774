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

// Brute-force reference values: grid searches, random falsification, input
// scans and dataset helpers.

#ifndef QROBUST_ORACLE_HPP_
#define QROBUST_ORACLE_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "qrobust/encoder.hpp"
#include "qrobust/solver.hpp"

namespace qrobust {

/// k points per parameter (endpoints included) spanning perturb_box(p0, delta);
/// one row per grid point.
Eigen::MatrixXd parameter_grid(const ParamVector& p0, double delta, int k);

/// Max over a parameter grid of |f_p0(x0) - f_p(x0)|: a lower bound on the
/// local eps. Uses max(2, floor(resolution^(1/n))) points per parameter.
double grid_eps(const Network& net, const ParamVector& p0, const Eigen::VectorXd& x0,
                double delta, std::int64_t resolution);

struct GridOracleConfig {
  int param_points = 2;   // per parameter
  int input_points = 100; // per input dimension
  int refine_rounds = 6;  // zoom passes around each start
  int refine_points = 11; // per input dimension in a zoom pass
  int refine_starts = 8;  // best coarse inputs that get zoomed
};

struct OracleValue {
  double value = 0.0;
  Eigen::VectorXd params;
  Eigen::VectorXd x;
  bool found = false;
};

/// Grid lower bound on the global eps over `domain`.
OracleValue grid_eps_global(const Network& net, const ParamVector& p0, const Box& domain,
                            double delta, const GridOracleConfig& cfg = {});

/// Grid lower bound on sigma: the largest margin |f_p0(x) - level| among grid
/// inputs whose label some grid parameter flips.
OracleValue grid_sigma(const Network& net, const ParamVector& p0, const Box& domain,
                       double delta, Side side, const GridOracleConfig& cfg = {});

struct GlobalGridValues {
  OracleValue eps;
  OracleValue sigma_above;
  OracleValue sigma_below;
};

/// All three global quantities from one shared grid pass.
GlobalGridValues grid_global_values(const Network& net, const ParamVector& p0, const Box& domain,
                                    double delta, const GridOracleConfig& cfg = {});

/// True when (p, x) breaks the robustness property of `q` directly, without
/// going through an encoding. Local kinds ignore `x` and use q.x0.
bool definition_violated(const RobustnessQuery& q, const Eigen::VectorXd& p,
                         const Eigen::VectorXd& x);

/// Uniform random search for a point satisfying `f` within `slack`.
std::optional<Eigen::VectorXd> falsify(const Formula& f, std::int64_t samples,
                                       std::uint64_t seed, double slack = 0.0);

struct ScanRecord {
  std::int64_t index = 0;
  Eigen::VectorXd x;
  double confidence = 0.0;
  int label = 0;
  double margin = 0.0;
  double eps_lower = 0.0;
  double eps_upper = 0.0;
  // 1 flippable, 0 robust, -1 undecided within budget.
  int flippable = 0;
};

struct ScanOptions {
  bool fast = false;               // grid eps instead of the optimizer
  std::int64_t grid_resolution = 4096;
  double tolerance = 1e-4;
  SolverConfig solver;
};

/// n inputs drawn uniformly from `domain` with `seed`; records come back in
/// sample order regardless of solver.workers.
std::vector<ScanRecord> scan_inputs(const Network& net, const ParamVector& p0, const Box& domain,
                                    double delta, std::int64_t n, std::uint64_t seed,
                                    const ScanOptions& opts = {});

void write_scan_csv(std::ostream& os, const std::vector<ScanRecord>& records);

struct Dataset {
  std::vector<std::string> features;
  std::string label;
  Eigen::MatrixXd x;   // one row per point
  Eigen::VectorXi y;   // 0 or 1
};

/// CSV with a header row. Empty `features` selects every column except the
/// label; empty `label` selects the last column.
Dataset load_dataset(const std::string& path, const std::vector<std::string>& features = {},
                     const std::string& label = "");

Box domain_from_dataset(const Dataset& data);
double accuracy(const Network& net, const Dataset& data);

}  // namespace qrobust

#endif  // QROBUST_ORACLE_HPP_
